//! Proposal-scoring centerline planner: a 3 x 5 grid of lateral offsets
//! and target speeds, each candidate rolled out 4 s against constant-
//! velocity agent forecasts and scored with the closed-loop metric suite.

use super::{Planner, PlannerError, PlannerObservation};
use crate::engine::{PlannedTrajectory, Snapshot};
use crate::geom::{Pose2D, Vec2};
use crate::map::Polyline;
use crate::metrics::{
    classify_at_fault, comfort_score, detect_collisions, drivable_area_compliance, progress_score,
    speed_limit_score, compose_cls, HardMultipliers, MetricThresholds, MetricWeights, SoftMetrics,
    min_ttc_of_step,
};
use crate::scenario::AgentState;
use serde::{Deserialize, Serialize};

/// Internal rollout horizon: 4 s at 10 Hz.
pub const PROPOSAL_HORIZON_STEPS: usize = 40;
const LATERAL_OFFSETS: [f64; 3] = [-1.0, 0.0, 1.0];
const SPEED_FRACTIONS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
/// Curvature budget reserved for the lateral transition.
const TRANSITION_CURVATURE: f64 = 0.15;
/// Peak |d2/dfrac2| of the quintic smoothstep.
const QUINTIC_PEAK_SECOND: f64 = 5.7735;
/// Peak |d3/dfrac3| of the quintic smoothstep (at the endpoints).
const QUINTIC_PEAK_THIRD: f64 = 60.0;
/// Jerk budget reserved for the lateral transition [m/s^3].
const LATERAL_JERK_BUDGET: f64 = 4.0;
/// Jerk limit of the longitudinal speed ramp [m/s^3].
const LON_JERK_LIMIT: f64 = 4.0;
/// Longitudinal acceleration window of proposal ramps, inside both the
/// comfort bounds and the kinematic |a| <= 3 envelope.
const LON_ACCEL_MAX: f64 = 2.0;
const LON_ACCEL_MIN: f64 = -3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    /// Lateral offset from the route centerline [m].
    pub offset: f64,
    /// Target speed as a fraction of the speed limit.
    pub speed_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CenterlinePlanner {
    pub weights: MetricWeights,
    pub thresholds: MetricThresholds,
}

impl Default for CenterlinePlanner {
    fn default() -> Self {
        let mut thresholds = MetricThresholds::default();
        // The proposal score only needs the binary TTC verdict, so the
        // projection can stop at the threshold.
        thresholds.ttc_projection_horizon = thresholds.ttc_threshold;
        Self {
            weights: MetricWeights::default(),
            thresholds,
        }
    }
}

fn quintic(f: f64) -> f64 {
    let f = f.clamp(0.0, 1.0);
    f * f * f * (10.0 - 15.0 * f + 6.0 * f * f)
}

impl CenterlinePlanner {
    /// Build the candidate trajectory for one proposal.
    fn proposal_trajectory(
        &self,
        obs: &PlannerObservation,
        path: &Polyline,
        arc0: f64,
        lat0: f64,
        proposal: Proposal,
        speed_limit: f64,
    ) -> PlannedTrajectory {
        let ego = &obs.world.ego;
        let target_speed = proposal.speed_fraction * speed_limit;
        // Transition length: long enough to respect the curvature, lateral
        // acceleration and lateral jerk budgets at the reference speed.
        let dl = (proposal.offset - lat0).abs();
        let v_ref = ego.speed.max(target_speed).max(1.0);
        let lt = (15.0f64)
            .max(2.0 * ego.speed)
            .max((dl * QUINTIC_PEAK_SECOND / TRANSITION_CURVATURE).sqrt() * 1.2)
            .max(v_ref * (dl * QUINTIC_PEAK_THIRD / LATERAL_JERK_BUDGET).cbrt());

        let mut v = ego.speed;
        // Continue from the ego's current acceleration so consecutive
        // re-plans compose into one smooth ramp.
        let mut accel = ego.acceleration.clamp(LON_ACCEL_MIN, LON_ACCEL_MAX);
        let mut arc = arc0;
        let mut positions = Vec::with_capacity(PROPOSAL_HORIZON_STEPS + 1);
        let mut speeds = Vec::with_capacity(PROPOSAL_HORIZON_STEPS + 1);
        positions.push(ego.pose.position());
        speeds.push(v);
        for _ in 1..=PROPOSAL_HORIZON_STEPS {
            // Jerk-limited speed ramp: slew the acceleration toward a
            // demand that anticipates the remaining speed error.
            let dv = target_speed - v;
            let a_des = dv.signum()
                * (dv.abs() / obs.dt)
                    .min(if dv >= 0.0 { LON_ACCEL_MAX } else { -LON_ACCEL_MIN })
                    .min((2.0 * LON_JERK_LIMIT * dv.abs()).sqrt() * 0.85);
            accel += (a_des - accel).clamp(-LON_JERK_LIMIT * obs.dt, LON_JERK_LIMIT * obs.dt);
            let prev_v = v;
            v = (v + accel * obs.dt).max(0.0);
            if dv != 0.0 && (target_speed - prev_v).signum() != (target_speed - v).signum() {
                v = target_speed;
                accel = (v - prev_v) / obs.dt;
            }
            arc += v * obs.dt;
            let f = quintic((arc - arc0) / lt);
            let lat = lat0 + (proposal.offset - lat0) * f;
            let center = path.point_at(arc);
            let tangent = path.tangent_at(arc);
            positions.push(center + Vec2::unit_from_angle(tangent).perp() * lat);
            speeds.push(v);
        }
        trajectory_from_positions(obs.sim_time, obs.dt, ego.pose, positions, speeds)
    }

    /// Emergency fallback: hold the current lateral offset and brake at
    /// the tracker's deceleration limit.
    fn emergency_brake(
        &self,
        obs: &PlannerObservation,
        path: &Polyline,
        arc0: f64,
        lat0: f64,
    ) -> PlannedTrajectory {
        let ego = &obs.world.ego;
        let mut v = ego.speed;
        let mut arc = arc0;
        let mut positions = vec![ego.pose.position()];
        let mut speeds = vec![v];
        for _ in 1..=PROPOSAL_HORIZON_STEPS {
            v = (v - 4.0 * obs.dt).max(0.0);
            arc += v * obs.dt;
            let center = path.point_at(arc);
            let tangent = path.tangent_at(arc);
            positions.push(center + Vec2::unit_from_angle(tangent).perp() * lat0);
            speeds.push(v);
        }
        trajectory_from_positions(obs.sim_time, obs.dt, ego.pose, positions, speeds)
    }

    /// Score every proposal (the exhaustive evaluation the planner also
    /// uses to pick its output; exposed for oracle checks).
    pub fn score_proposals(&self, obs: &PlannerObservation) -> Vec<(Proposal, f64, PlannedTrajectory)> {
        let ego = &obs.world.ego;
        let graph = obs.lane_graph;
        let target_lane = obs.route.target_lane_at(ego.pose.position(), graph);
        let path = obs.route.path_from(target_lane, graph);
        let proj = path.project(ego.pose.position());
        let speed_limit = graph.lane(target_lane).unwrap().speed_limit;

        // Constant-velocity forecasts of all agents, shared by proposals.
        let forecasts: Vec<Vec<AgentState>> = (0..=PROPOSAL_HORIZON_STEPS)
            .map(|k| {
                let t = k as f64 * obs.dt;
                obs.world
                    .agents
                    .iter()
                    .map(|a| {
                        let p = a.pose.position() + a.velocity() * t;
                        AgentState {
                            pose: Pose2D::new(p.x, p.y, a.pose.heading),
                            acceleration: 0.0,
                            ..*a
                        }
                    })
                    .collect()
            })
            .collect();

        let reference = (obs.route.total_length()
            - obs.route.progress_of(ego.pose.position(), graph))
        .max(0.0)
        .min(speed_limit * PROPOSAL_HORIZON_STEPS as f64 * obs.dt)
        .max(1.0);

        let mut out = Vec::with_capacity(15);
        for offset in LATERAL_OFFSETS {
            for frac in SPEED_FRACTIONS {
                let proposal = Proposal {
                    offset,
                    speed_fraction: frac,
                };
                let traj =
                    self.proposal_trajectory(obs, &path, proj.arc, proj.lateral, proposal, speed_limit);
                let score = self.score_candidate(obs, &traj, &forecasts, reference);
                out.push((proposal, score, traj));
            }
        }
        out
    }

    /// Internal closed-loop score of one candidate against the forecasts.
    fn score_candidate(
        &self,
        obs: &PlannerObservation,
        traj: &PlannedTrajectory,
        forecasts: &[Vec<AgentState>],
        reference: f64,
    ) -> f64 {
        let snapshots: Vec<Snapshot> = traj
            .samples
            .iter()
            .enumerate()
            .map(|(k, s)| Snapshot {
                step_index: k as u32,
                sim_time: s.t,
                ego: AgentState {
                    pose: s.pose,
                    speed: s.speed,
                    acceleration: 0.0,
                    ..obs.world.ego
                },
                agents: forecasts[k.min(forecasts.len() - 1)].clone(),
            })
            .collect();

        let collisions = detect_collisions(&snapshots);
        let at_fault = collisions
            .iter()
            .any(|e| classify_at_fault(e, &snapshots, obs.route, obs.lane_graph));
        let drivable =
            drivable_area_compliance(&snapshots, obs.lane_graph, &self.thresholds, obs.dt);
        let hard = HardMultipliers {
            at_fault_collision: at_fault,
            drivable_area_violation: drivable.violation,
        };
        let mut min_ttc: Option<f64> = None;
        for snap in &snapshots {
            if let Some(t) = min_ttc_of_step(
                &snap.ego,
                &snap.agents,
                self.thresholds.ttc_projection_horizon,
                0.1,
            ) {
                min_ttc = Some(min_ttc.map_or(t, |m: f64| m.min(t)));
                if t <= 0.0 {
                    break;
                }
            }
        }
        let ttc_score = match min_ttc {
            Some(t) if t < self.thresholds.ttc_threshold => 0.0,
            _ => 1.0,
        };
        let progress = progress_score(&snapshots, obs.route, obs.lane_graph, reference);
        let comfort = comfort_score(&snapshots, obs.dt, &self.thresholds.comfort);
        let soft = SoftMetrics {
            ttc_score,
            progress_score: progress.0,
            comfort_score: if comfort.ok { 1.0 } else { 0.0 },
            speed_limit_score: speed_limit_score(&snapshots, obs.lane_graph),
        };
        compose_cls(&soft, &hard, &self.weights)
    }
}

/// Headings from successive positions; speed values provided by the
/// longitudinal profile.
fn trajectory_from_positions(
    t0: f64,
    dt: f64,
    start_pose: Pose2D,
    positions: Vec<Vec2>,
    speeds: Vec<f64>,
) -> PlannedTrajectory {
    let mut poses = Vec::with_capacity(positions.len());
    for (k, p) in positions.iter().enumerate() {
        let heading = if k + 1 < positions.len() {
            let d = positions[k + 1] - *p;
            if d.norm() > 1e-6 {
                d.y.atan2(d.x)
            } else if k == 0 {
                start_pose.heading
            } else {
                poses.last().map(|(q, _): &(Pose2D, f64)| q.heading).unwrap()
            }
        } else {
            poses.last().map(|(q, _): &(Pose2D, f64)| q.heading).unwrap_or(start_pose.heading)
        };
        poses.push((Pose2D::new(p.x, p.y, heading), speeds[k]));
    }
    // The first sample is the ego state itself.
    poses[0] = (start_pose, speeds[0]);
    PlannedTrajectory::from_poses(t0, dt, poses)
}

impl Planner for CenterlinePlanner {
    fn name(&self) -> &'static str {
        "centerline"
    }

    fn plan(&mut self, obs: &PlannerObservation) -> Result<PlannedTrajectory, PlannerError> {
        let scored = self.score_proposals(obs);
        // Argmax with deterministic tie-breaks: smaller |offset|, then
        // higher target speed.
        let mut best: Option<&(Proposal, f64, PlannedTrajectory)> = None;
        for cand in &scored {
            let better = match best {
                None => true,
                Some((bp, bs, _)) => {
                    (cand.1, -cand.0.offset.abs(), cand.0.speed_fraction)
                        .partial_cmp(&(*bs, -bp.offset.abs(), bp.speed_fraction))
                        .map(|o| o == std::cmp::Ordering::Greater)
                        .unwrap_or(false)
                }
            };
            if better {
                best = Some(cand);
            }
        }
        let (_, best_score, traj) = best.expect("proposal grid is never empty");
        if *best_score <= 0.0 {
            let ego = &obs.world.ego;
            let target_lane = obs.route.target_lane_at(ego.pose.position(), obs.lane_graph);
            let path = obs.route.path_from(target_lane, obs.lane_graph);
            let proj = path.project(ego.pose.position());
            return Ok(self.emergency_brake(obs, &path, proj.arc, proj.lateral));
        }
        Ok(traj.clone())
    }
}
