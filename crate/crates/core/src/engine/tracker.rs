//! Planned trajectories and the low-level controller that executes them.

use crate::geom::{normalize_angle, Pose2D, Vec2};
use crate::scenario::AgentState;
use serde::{Deserialize, Serialize};

/// Kinematic-tracker constants.
pub const WHEELBASE: f64 = 3.1;
pub const MAX_CURVATURE: f64 = 0.2;
pub const MAX_ACCEL: f64 = 3.0;
pub const MAX_DECEL: f64 = -4.0;
pub const SPEED_GAIN: f64 = 1.0;
pub const MIN_LOOKAHEAD: f64 = 3.0;
/// Minimum plan horizon accepted by the engine [s].
pub const MIN_PLAN_HORIZON: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrackerMode {
    /// Ego lands exactly on the next trajectory sample.
    #[default]
    Perfect,
    /// Kinematic bicycle with pure-pursuit steering and proportional
    /// speed control.
    Kinematic,
}

impl std::str::FromStr for TrackerMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "perfect" => Ok(TrackerMode::Perfect),
            "kinematic" => Ok(TrackerMode::Kinematic),
            other => Err(format!("unknown tracker mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajSample {
    pub t: f64,
    pub pose: Pose2D,
    pub speed: f64,
}

/// A planner output: timestamped pose/speed samples at 0.1 s spacing, the
/// first at the current simulation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrajectory {
    pub samples: Vec<TrajSample>,
}

impl PlannedTrajectory {
    pub fn from_poses(t0: f64, dt: f64, poses: Vec<(Pose2D, f64)>) -> Self {
        Self {
            samples: poses
                .into_iter()
                .enumerate()
                .map(|(i, (pose, speed))| TrajSample {
                    t: t0 + i as f64 * dt,
                    pose,
                    speed,
                })
                .collect(),
        }
    }

    pub fn horizon(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Linear interpolation at time `t`, clamped to the sample range.
    pub fn sample_at(&self, t: f64) -> TrajSample {
        let first = self.samples.first().expect("validated non-empty");
        let last = self.samples.last().unwrap();
        if t <= first.t {
            return *first;
        }
        if t >= last.t {
            return *last;
        }
        let idx = self
            .samples
            .partition_point(|s| s.t <= t)
            .clamp(1, self.samples.len() - 1);
        let (a, b) = (&self.samples[idx - 1], &self.samples[idx]);
        let f = (t - a.t) / (b.t - a.t);
        let pos = a.pose.position() + (b.pose.position() - a.pose.position()) * f;
        let heading = a.pose.heading + normalize_angle(b.pose.heading - a.pose.heading) * f;
        TrajSample {
            t,
            pose: Pose2D::new(pos.x, pos.y, heading),
            speed: a.speed + (b.speed - a.speed) * f,
        }
    }

    /// Engine-side validity check: enough samples, aligned start time,
    /// strictly increasing timestamps, finite values, minimum horizon.
    pub fn validate(&self, now: f64, _dt: f64) -> Result<(), String> {
        if self.samples.len() < 2 {
            return Err(format!("trajectory has {} samples, need >= 2", self.samples.len()));
        }
        let first = &self.samples[0];
        if (first.t - now).abs() > 1e-6 {
            return Err(format!(
                "trajectory starts at t={}, expected current sim time {}",
                first.t, now
            ));
        }
        for w in self.samples.windows(2) {
            if w[1].t <= w[0].t {
                return Err("trajectory timestamps not strictly increasing".into());
            }
        }
        for s in &self.samples {
            if !s.pose.is_finite() || !s.speed.is_finite() || !s.t.is_finite() {
                return Err("trajectory contains non-finite values".into());
            }
        }
        if self.horizon() < MIN_PLAN_HORIZON - 1e-9 {
            return Err(format!(
                "trajectory horizon {:.3} s below minimum {:.1} s",
                self.horizon(),
                MIN_PLAN_HORIZON
            ));
        }
        Ok(())
    }
}

/// Execute one control interval of the trajectory.
pub fn track(current: &AgentState, traj: &PlannedTrajectory, mode: TrackerMode, dt: f64) -> AgentState {
    match mode {
        TrackerMode::Perfect => {
            // The first future sample, verbatim: keeps replay bit-exact.
            let target = &traj.samples[1];
            AgentState {
                pose: target.pose,
                speed: target.speed.max(0.0),
                acceleration: (target.speed - current.speed) / dt,
                ..*current
            }
        }
        TrackerMode::Kinematic => kinematic_track(current, traj, dt),
    }
}

/// Kinematic bicycle update with pure-pursuit steering: curvature toward a
/// lookahead point on the planned path, clamped to the vehicle limits, and
/// proportional speed control toward the time-matched sample speed.
fn kinematic_track(current: &AgentState, traj: &PlannedTrajectory, dt: f64) -> AgentState {
    let v = current.speed;
    let lookahead = MIN_LOOKAHEAD.max(0.5 * v);
    let target_pt = lookahead_point(current.pose.position(), traj, lookahead);
    let local = current.pose.to_local(target_pt);
    let ld = local.norm().max(1e-6);
    let alpha = local.y.atan2(local.x);
    let curvature = (2.0 * alpha.sin() / ld).clamp(-MAX_CURVATURE, MAX_CURVATURE);

    let desired = traj.sample_at(traj.samples[0].t + dt).speed;
    let accel = (SPEED_GAIN * (desired - v)).clamp(MAX_DECEL, MAX_ACCEL);
    let new_speed = (v + accel * dt).max(0.0);

    let pos = current.pose.position() + Vec2::unit_from_angle(current.pose.heading) * (new_speed * dt);
    let heading = current.pose.heading + new_speed * curvature * dt;
    // The wheelbase bounds the steering angle implied by the curvature
    // clamp; with |kappa| <= 0.2 and L = 3.1 the angle stays below 32 deg.
    let _ = WHEELBASE;
    AgentState {
        pose: Pose2D::new(pos.x, pos.y, heading),
        speed: new_speed,
        acceleration: (new_speed - v) / dt,
        ..*current
    }
}

/// First point along the trajectory path at (at least) `dist` from `from`;
/// interpolates between bracketing samples, falls back to the last sample.
fn lookahead_point(from: Vec2, traj: &PlannedTrajectory, dist: f64) -> Vec2 {
    let mut prev = traj.samples[0].pose.position();
    for s in traj.samples.iter().skip(1) {
        let cur = s.pose.position();
        let d_prev = (prev - from).norm();
        let d_cur = (cur - from).norm();
        if d_cur >= dist {
            let span = (d_cur - d_prev).max(1e-9);
            let f = ((dist - d_prev) / span).clamp(0.0, 1.0);
            return prev + (cur - prev) * f;
        }
        prev = cur;
    }
    traj.samples.last().unwrap().pose.position()
}
