//! Time-to-collision under constant-velocity projection.

use super::MetricThresholds;
use crate::engine::Snapshot;
use crate::geom::{obb_overlap, OrientedRect};
use crate::scenario::AgentState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtcReport {
    /// 1.0 iff the minimum TTC stays above the threshold.
    pub score: f64,
    /// Smallest observed TTC within the projection horizon, if any
    /// projected overlap occurred at all.
    pub min_ttc: Option<f64>,
}

/// Minimum TTC at one step: ego and every agent projected forward at
/// constant velocity in 0.1 s increments up to `horizon`; the TTC against
/// an agent is the first overlapping increment.
pub fn min_ttc_of_step(
    ego: &AgentState,
    agents: &[AgentState],
    horizon: f64,
    increment: f64,
) -> Option<f64> {
    let steps = (horizon / increment).round() as usize;
    let ego_v = ego.velocity();
    let mut best: Option<f64> = None;
    for agent in agents {
        let rel_speed = (ego_v - agent.velocity()).norm();
        let center_dist = (agent.pose.position() - ego.pose.position()).norm();
        let reach = rel_speed * horizon
            + ego.footprint().bounding_radius()
            + agent.footprint().bounding_radius();
        // Constant-velocity projection cannot close a gap larger than the
        // relative motion plus both bounding radii.
        if center_dist > reach {
            continue;
        }
        let agent_v = agent.velocity();
        for k in 0..=steps {
            let tau = k as f64 * increment;
            if let Some(cur_best) = best {
                if tau >= cur_best {
                    break;
                }
            }
            let e = OrientedRect::new(
                ego.pose.position() + ego_v * tau,
                ego.pose.heading,
                ego.length,
                ego.width,
            );
            let a = OrientedRect::new(
                agent.pose.position() + agent_v * tau,
                agent.pose.heading,
                agent.length,
                agent.width,
            );
            if obb_overlap(&e, &a) {
                best = Some(match best {
                    Some(b) => b.min(tau),
                    None => tau,
                });
                break;
            }
        }
    }
    best
}

/// TTC soft metric over a rollout: score 1 iff no step's minimum TTC drops
/// below the threshold.
pub fn time_to_collision_score(
    snapshots: &[Snapshot],
    thresholds: &MetricThresholds,
    _dt: f64,
) -> TtcReport {
    let mut min_ttc: Option<f64> = None;
    for snap in snapshots {
        if let Some(t) = min_ttc_of_step(
            &snap.ego,
            &snap.agents,
            thresholds.ttc_projection_horizon,
            0.1,
        ) {
            min_ttc = Some(match min_ttc {
                Some(m) => m.min(t),
                None => t,
            });
            // Cannot get lower than zero.
            if t <= 0.0 {
                break;
            }
        }
    }
    let score = match min_ttc {
        Some(t) if t < thresholds.ttc_threshold => 0.0,
        _ => 1.0,
    };
    TtcReport { score, min_ttc }
}
