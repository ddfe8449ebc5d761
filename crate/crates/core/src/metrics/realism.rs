//! Sim-agent realism: displacement error against the logged experts and a
//! histogram-divergence realism composite.

use crate::engine::{RolloutLog, Snapshot};
use crate::geom::Vec2;
use crate::scenario::{AgentId, Scenario};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const HISTOGRAM_BINS: usize = 16;
/// ADE horizon: 8 s at 10 Hz.
pub const ADE_HORIZON_STEPS: usize = 80;

#[derive(Debug, Error)]
pub enum RealismError {
    #[error("scenario has no logged futures")]
    NoLoggedFutures,
    #[error("trajectory lengths {0} and {1} are shorter than the horizon {2}")]
    TooShort(usize, usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealismReport {
    pub ade: f64,
    pub kinematic_component: f64,
    pub interaction_component: f64,
    pub map_component: f64,
    pub composite: f64,
}

/// Average displacement error between two aligned position sequences over
/// the first `horizon` samples.
pub fn ade(simulated: &[Vec2], logged: &[Vec2], horizon: usize) -> Result<f64, RealismError> {
    if simulated.len() < horizon || logged.len() < horizon {
        return Err(RealismError::TooShort(simulated.len(), logged.len(), horizon));
    }
    let sum: f64 = simulated
        .iter()
        .zip(logged.iter())
        .take(horizon)
        .map(|(a, b)| (*a - *b).norm())
        .sum();
    Ok(sum / horizon as f64)
}

/// Mean ADE of the background agents against their logged futures.
pub fn background_ade(
    log: &RolloutLog,
    scenario: &Scenario,
    horizon: usize,
) -> Result<f64, RealismError> {
    let futures = scenario
        .logged_futures
        .as_ref()
        .ok_or(RealismError::NoLoggedFutures)?;
    let horizon = horizon
        .min(log.snapshots.len().saturating_sub(1))
        .min(futures.values().map(|v| v.len()).min().unwrap_or(0));
    let mut total = 0.0;
    let mut count = 0usize;
    for (id, logged) in futures {
        if *id == scenario.ego.id {
            continue;
        }
        let sim: Vec<Vec2> = log.snapshots[1..]
            .iter()
            .filter_map(|s| s.agents.iter().find(|a| a.id == *id))
            .map(|a| a.pose.position())
            .collect();
        let logged_pos: Vec<Vec2> = logged.iter().map(|s| s.pose.position()).collect();
        total += ade(&sim, &logged_pos, horizon)?;
        count += 1;
    }
    if count == 0 {
        return Err(RealismError::NoLoggedFutures);
    }
    Ok(total / count as f64)
}

/// Jensen-Shannon divergence (base 2, in [0, 1]) between two sample sets
/// over a shared 16-bin histogram.
fn jsd(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let lo = a
        .iter()
        .chain(b.iter())
        .fold(f64::INFINITY, |m, &x| m.min(x));
    let hi = a
        .iter()
        .chain(b.iter())
        .fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    if !(hi - lo).is_finite() || hi - lo < 1e-12 {
        return 0.0; // all mass in one bin on both sides
    }
    let hist = |xs: &[f64]| -> Vec<f64> {
        let mut h = vec![0.0; HISTOGRAM_BINS];
        for &x in xs {
            let mut bin = ((x - lo) / (hi - lo) * HISTOGRAM_BINS as f64) as usize;
            if bin >= HISTOGRAM_BINS {
                bin = HISTOGRAM_BINS - 1;
            }
            h[bin] += 1.0;
        }
        let n = xs.len() as f64;
        h.iter().map(|c| c / n).collect()
    };
    let p = hist(a);
    let q = hist(b);
    let mut div = 0.0;
    for i in 0..HISTOGRAM_BINS {
        let m = 0.5 * (p[i] + q[i]);
        if p[i] > 0.0 {
            div += 0.5 * p[i] * (p[i] / m).log2();
        }
        if q[i] > 0.0 {
            div += 0.5 * q[i] * (q[i] / m).log2();
        }
    }
    div.clamp(0.0, 1.0)
}

/// Realism composite over one rollout: kinematic (speed and acceleration
/// distributions), interaction (nearest-neighbor distances) and map
/// compliance (fraction of on-road agent steps), each in [0, 1].
pub fn realism_report(log: &RolloutLog, scenario: &Scenario) -> Result<RealismReport, RealismError> {
    let futures = scenario
        .logged_futures
        .as_ref()
        .ok_or(RealismError::NoLoggedFutures)?;
    let horizon = log
        .snapshots
        .len()
        .saturating_sub(1)
        .min(futures.values().map(|v| v.len()).min().unwrap_or(0));
    if horizon == 0 {
        return Err(RealismError::NoLoggedFutures);
    }

    // Agents measured: everything with a logged future except the ego.
    let ids: Vec<AgentId> = futures
        .keys()
        .filter(|id| **id != scenario.ego.id)
        .copied()
        .collect();
    if ids.is_empty() {
        return Err(RealismError::NoLoggedFutures);
    }

    let mut sim_speeds = Vec::new();
    let mut log_speeds = Vec::new();
    let mut prev_sim: std::collections::BTreeMap<AgentId, f64> = Default::default();
    let mut prev_log: std::collections::BTreeMap<AgentId, f64> = Default::default();
    let mut sim_accels = Vec::new();
    let mut log_accels = Vec::new();
    let mut sim_nn = Vec::new();
    let mut log_nn = Vec::new();
    let mut on_road = 0usize;
    let mut total = 0usize;

    for k in 0..horizon {
        let snap = &log.snapshots[k + 1];
        // Positions of the comparison pools at this step.
        let mut sim_pos: Vec<(AgentId, Vec2)> = Vec::new();
        let mut log_pos: Vec<(AgentId, Vec2)> = Vec::new();
        for id in &ids {
            if let Some(a) = snap.agents.iter().find(|a| a.id == *id) {
                sim_speeds.push(a.speed);
                if let Some(prev) = prev_sim.insert(*id, a.speed) {
                    sim_accels.push((a.speed - prev) / scenario.dt);
                }
                sim_pos.push((*id, a.pose.position()));
                total += 1;
                if scenario.lane_graph.contains_point(a.pose.position()) {
                    on_road += 1;
                }
            }
            let s = &futures[id][k];
            log_speeds.push(s.speed);
            if let Some(prev) = prev_log.insert(*id, s.speed) {
                log_accels.push((s.speed - prev) / scenario.dt);
            }
            log_pos.push((*id, s.pose.position()));
        }
        // Ego joins the interaction pool on both sides when it has a log.
        if let Some(ego_log) = scenario.ego_logged_future() {
            sim_pos.push((scenario.ego.id, snap.ego.pose.position()));
            log_pos.push((scenario.ego.id, ego_log[k].pose.position()));
        }
        append_nn_distances(&sim_pos, &mut sim_nn);
        append_nn_distances(&log_pos, &mut log_nn);
    }

    let kinematic = 1.0 - 0.5 * (jsd(&sim_speeds, &log_speeds) + jsd(&sim_accels, &log_accels));
    let interaction = 1.0 - jsd(&sim_nn, &log_nn);
    let map = if total == 0 {
        1.0
    } else {
        on_road as f64 / total as f64
    };
    let ade = background_ade(log, scenario, ADE_HORIZON_STEPS.min(horizon))?;
    Ok(RealismReport {
        ade,
        kinematic_component: kinematic,
        interaction_component: interaction,
        map_component: map,
        composite: (kinematic + interaction + map) / 3.0,
    })
}

/// Per-entity nearest-neighbor distances within one frame.
fn append_nn_distances(pool: &[(AgentId, Vec2)], dest: &mut Vec<f64>) {
    for (i, (_, p)) in pool.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, (_, q)) in pool.iter().enumerate() {
            if i != j {
                best = best.min((*p - *q).norm());
            }
        }
        if best.is_finite() {
            dest.push(best);
        }
    }
}

/// Extract an agent's simulated positions from a rollout (skipping the
/// initial snapshot, matching the logged-future time base).
pub fn simulated_positions(log: &RolloutLog, id: AgentId) -> Vec<Vec2> {
    log.snapshots[1..]
        .iter()
        .filter_map(|s: &Snapshot| {
            if s.ego.id == id {
                Some(s.ego.pose.position())
            } else {
                s.agents.iter().find(|a| a.id == id).map(|a| a.pose.position())
            }
        })
        .collect()
}
