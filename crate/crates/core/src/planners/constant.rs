//! Constant-velocity straight-line planner; the simplest baseline.

use super::{Planner, PlannerError, PlannerObservation};
use crate::engine::PlannedTrajectory;
use crate::geom::Vec2;

const HORIZON_STEPS: usize = 40;

#[derive(Debug, Default)]
pub struct ConstantVelocityPlanner;

impl Planner for ConstantVelocityPlanner {
    fn name(&self) -> &'static str {
        "constant_velocity"
    }

    fn plan(&mut self, obs: &PlannerObservation) -> Result<PlannedTrajectory, PlannerError> {
        let ego = &obs.world.ego;
        let dir = Vec2::unit_from_angle(ego.pose.heading);
        let poses = (0..=HORIZON_STEPS)
            .map(|i| {
                let p = ego.pose.position() + dir * (ego.speed * obs.dt * i as f64);
                (crate::geom::Pose2D::new(p.x, p.y, ego.pose.heading), ego.speed)
            })
            .collect();
        Ok(PlannedTrajectory::from_poses(obs.sim_time, obs.dt, poses))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::WorldState;
    use crate::scenario::tests_support::straight_scenario;

    #[test]
    fn straight_ray_at_current_speed() {
        let scn = straight_scenario(10.0);
        let world = WorldState::initial(&scn);
        let obs = PlannerObservation {
            world: &world,
            lane_graph: &scn.lane_graph,
            route: &scn.route,
            logged_ego: None,
            sim_time: 0.0,
            dt: scn.dt,
        };
        let mut p = ConstantVelocityPlanner;
        let traj = p.plan(&obs).unwrap();
        traj.validate(0.0, 0.1).unwrap();
        let last = traj.samples.last().unwrap();
        assert!((last.pose.x - (scn.ego.pose.x + 10.0 * 4.0)).abs() < 1e-9);
        assert!((last.pose.y - scn.ego.pose.y).abs() < 1e-12);
    }
}
