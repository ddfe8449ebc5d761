//! Expert log-replay planner: emits the logged ego future verbatim.

use super::{Planner, PlannerError, PlannerObservation};
use crate::engine::{PlannedTrajectory, TrajSample};
use crate::geom::Vec2;

const MIN_SAMPLES: usize = 6; // 0.5 s at 10 Hz

#[derive(Debug, Default)]
pub struct LogReplayPlanner;

impl Planner for LogReplayPlanner {
    fn name(&self) -> &'static str {
        "log_replay"
    }

    fn plan(&mut self, obs: &PlannerObservation) -> Result<PlannedTrajectory, PlannerError> {
        let logged = obs
            .logged_ego
            .ok_or_else(|| PlannerError("log replay requires an ego logged future".into()))?;
        let step = obs.world.step_index as usize;
        let ego = &obs.world.ego;
        let mut samples = vec![TrajSample {
            t: obs.sim_time,
            pose: ego.pose,
            speed: ego.speed,
        }];
        for (k, s) in logged.iter().enumerate().skip(step).take(60) {
            samples.push(TrajSample {
                t: (k + 1) as f64 * obs.dt,
                pose: s.pose,
                speed: s.speed,
            });
        }
        // Near the log end, extrapolate at constant velocity to keep the
        // minimum plan horizon.
        while samples.len() < MIN_SAMPLES {
            let last = *samples.last().unwrap();
            let p = last.pose.position() + Vec2::unit_from_angle(last.pose.heading) * (last.speed * obs.dt);
            samples.push(TrajSample {
                t: last.t + obs.dt,
                pose: crate::geom::Pose2D::new(p.x, p.y, last.pose.heading),
                speed: last.speed,
            });
        }
        Ok(PlannedTrajectory { samples })
    }
}
