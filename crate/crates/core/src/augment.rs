//! Density augmentation: insert background agents on existing lanes until
//! each lane's mean bumper gap lands in the target band, leaving map,
//! route and ego untouched.

use crate::geom::obb_overlap;
use crate::scenario::{AgentId, AgentKind, AgentState, Scenario};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAX_ATTEMPTS: usize = 1000;
const INSERTED_LENGTH: f64 = 4.5;
const INSERTED_WIDTH: f64 = 1.8;
/// Minimum bumper clearance to the ego for inserted agents on its lane.
const EGO_CLEARANCE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityLevel {
    Low,
    Mid,
    High,
}

impl DensityLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            DensityLevel::Low => "low",
            DensityLevel::Mid => "mid",
            DensityLevel::High => "high",
        }
    }

    /// Target band for the per-lane mean bumper gap [m].
    pub fn gap_band(self) -> (f64, f64) {
        match self {
            DensityLevel::Low => (40.0, f64::INFINITY),
            DensityLevel::Mid => (15.0, 40.0),
            DensityLevel::High => (0.0, 15.0),
        }
    }

    fn target_gap(self) -> f64 {
        match self {
            DensityLevel::Low => 48.0,
            DensityLevel::Mid => 25.0,
            DensityLevel::High => 11.0,
        }
    }
}

impl std::str::FromStr for DensityLevel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low" => Ok(DensityLevel::Low),
            "mid" => Ok(DensityLevel::Mid),
            "high" => Ok(DensityLevel::High),
            other => Err(format!("unknown density level '{other}'")),
        }
    }
}

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("could not place agents without overlap after {0} attempts")]
    PlacementFailed(usize),
}

/// Mean bumper-to-bumper gap between consecutive occupants of one lane;
/// infinite with fewer than two occupants.
fn mean_gap(occupants: &[(f64, f64)]) -> f64 {
    if occupants.len() < 2 {
        return f64::INFINITY;
    }
    let mut sorted = occupants.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let gaps: Vec<f64> = sorted
        .windows(2)
        .map(|w| w[1].0 - w[0].0 - (w[0].1 + w[1].1) / 2.0)
        .collect();
    gaps.iter().sum::<f64>() / gaps.len() as f64
}

/// Insert agents at seeded positions until every lane's mean bumper gap
/// reaches the level's band. Map geometry, route, ego state, horizon and
/// existing agents (and their logged futures) are preserved bit-for-bit;
/// inserted agents get fresh ids and no logged futures.
pub fn augment_density(
    scenario: &Scenario,
    level: DensityLevel,
    seed: u64,
) -> Result<Scenario, AugmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = &scenario.lane_graph;
    let mut out = scenario.clone();
    let mut next_id = std::iter::once(scenario.ego.id.0)
        .chain(scenario.agents.iter().map(|a| a.id.0))
        .max()
        .unwrap_or(0)
        + 1;
    let (band_lo, band_hi) = level.gap_band();

    for lane in graph.lanes() {
        let path = &lane.centerline;
        // Existing occupants of this lane (incl. the ego), as (arc, length).
        let mut occupants: Vec<(f64, f64)> = Vec::new();
        let mut ego_arc: Option<f64> = None;
        for a in std::iter::once(&scenario.ego).chain(scenario.agents.iter()) {
            let proj = path.project(a.pose.position());
            if proj.lateral.abs() <= lane.width / 2.0
                && (path.point_at(proj.arc) - a.pose.position()).norm() <= lane.width
            {
                occupants.push((proj.arc, a.length));
                if a.id == scenario.ego.id {
                    ego_arc = Some(proj.arc);
                }
            }
        }

        // Fill toward an occupancy that realizes the target gap over the
        // whole lane, not just between two lucky neighbors.
        let n_target = ((path.length() / (level.target_gap() + INSERTED_LENGTH)).floor()
            as usize)
            .max(2);
        let mut attempts = 0usize;
        loop {
            let gap = mean_gap(&occupants);
            if occupants.len() >= n_target && gap >= band_lo && gap < band_hi.min(70.0) {
                break;
            }
            // Too dense means the base scenario was already denser than
            // the requested level; insertion cannot thin it out, so stop.
            if gap < band_lo {
                break;
            }
            // Propose a position inside the largest free interval, with
            // seeded jitter around its midpoint.
            let margin = 2.0 + INSERTED_LENGTH / 2.0;
            let mut sorted = occupants.clone();
            sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut best_gap = f64::NEG_INFINITY;
            let mut best_mid = path.length() / 2.0;
            let mut prev_end = margin;
            for (s, len) in &sorted {
                let start = s - len / 2.0;
                let g = start - prev_end;
                if g > best_gap {
                    best_gap = g;
                    best_mid = (prev_end + start) / 2.0;
                }
                prev_end = prev_end.max(s + len / 2.0);
            }
            let tail = (path.length() - margin) - prev_end;
            if tail > best_gap {
                best_gap = tail;
                best_mid = (prev_end + path.length() - margin) / 2.0;
            }
            // No interval can fit another vehicle: the lane is full.
            if best_gap < INSERTED_LENGTH + 3.5 {
                break;
            }
            let jitter_span = (best_gap / 4.0).min(2.0);
            let arc = best_mid + rng.random_range(-jitter_span..jitter_span);
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                return Err(AugmentError::PlacementFailed(MAX_ATTEMPTS));
            }
            // Bumper clearance on this lane.
            let clear_here = occupants.iter().all(|(s, len)| {
                (arc - s).abs() >= (len + INSERTED_LENGTH) / 2.0 + 1.5
            });
            if !clear_here {
                continue;
            }
            if let Some(e) = ego_arc {
                if (arc - e).abs() < EGO_CLEARANCE {
                    continue;
                }
            }
            let pos = path.point_at(arc);
            let heading = path.tangent_at(arc);
            let candidate = AgentState {
                id: AgentId(next_id),
                pose: crate::geom::Pose2D::new(pos.x, pos.y, heading),
                speed: rng.random_range(0.5..0.8) * lane.speed_limit,
                acceleration: 0.0,
                length: INSERTED_LENGTH,
                width: INSERTED_WIDTH,
                kind: AgentKind::Vehicle,
            };
            // No footprint overlap with anything already in the scene.
            let cand_rect = candidate.footprint();
            let overlaps = std::iter::once(&out.ego)
                .chain(out.agents.iter())
                .any(|a| obb_overlap(&cand_rect, &a.footprint()));
            if overlaps {
                continue;
            }
            occupants.push((arc, candidate.length));
            out.agents.push(candidate);
            next_id += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_suite, SuiteKind};
    use crate::io::scenario_to_json;

    fn lane_mean_gaps(scn: &Scenario) -> Vec<f64> {
        scn.lane_graph
            .lanes()
            .map(|lane| {
                let occ: Vec<(f64, f64)> = std::iter::once(&scn.ego)
                    .chain(scn.agents.iter())
                    .filter_map(|a| {
                        let proj = lane.centerline.project(a.pose.position());
                        (proj.lateral.abs() <= lane.width / 2.0).then_some((proj.arc, a.length))
                    })
                    .collect();
                mean_gap(&occ)
            })
            .collect()
    }

    #[test]
    fn low_density_on_empty_map_adds_sparse_agents() {
        let scn = crate::scenario::tests_support::two_lane_scenario(9.0, 13.0);
        let out = augment_density(&scn, DensityLevel::Low, 9).unwrap();
        assert!(out.agents.len() > scn.agents.len());
        for g in lane_mean_gaps(&out) {
            assert!(g >= 40.0 - 1e-9, "low density mean gap {g}");
        }
    }

    #[test]
    fn high_density_reaches_tight_gaps_without_overlap() {
        let scn = &generate_suite(SuiteKind::LaneChange, 1, 5)[0];
        let out = augment_density(scn, DensityLevel::High, 9).unwrap();
        for g in lane_mean_gaps(&out) {
            assert!(g <= 15.0, "high density mean gap {g}");
        }
        // Zero initial overlaps.
        let all: Vec<&AgentState> = std::iter::once(&out.ego).chain(out.agents.iter()).collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert!(
                    !obb_overlap(&all[i].footprint(), &all[j].footprint()),
                    "{} overlaps {}",
                    all[i].id,
                    all[j].id
                );
            }
        }
    }

    #[test]
    fn augmentation_preserves_map_route_and_ego() {
        let scn = &generate_suite(SuiteKind::LaneChange, 1, 5)[0];
        for level in [DensityLevel::Low, DensityLevel::Mid, DensityLevel::High] {
            let out = augment_density(scn, level, 3).unwrap();
            assert_eq!(out.ego, scn.ego);
            assert_eq!(out.route.lanes(), scn.route.lanes());
            assert_eq!(out.horizon_steps, scn.horizon_steps);
            assert_eq!(out.id, scn.id);
            // Original agents are a prefix, untouched.
            assert_eq!(&out.agents[..scn.agents.len()], &scn.agents[..]);
            // Map serialization identical (structural diff empty).
            let a = scenario_to_json(scn);
            let b = scenario_to_json(&out);
            let lanes_a = a.split("\"ego\"").next().unwrap().to_string();
            let lanes_b = b.split("\"ego\"").next().unwrap().to_string();
            assert_eq!(lanes_a, lanes_b);
        }
    }

    #[test]
    fn same_seed_same_output() {
        let scn = crate::scenario::tests_support::two_lane_scenario(9.0, 13.0);
        let a = augment_density(&scn, DensityLevel::Mid, 77).unwrap();
        let b = augment_density(&scn, DensityLevel::Mid, 77).unwrap();
        assert_eq!(scenario_to_json(&a), scenario_to_json(&b));
        let c = augment_density(&scn, DensityLevel::Mid, 78).unwrap();
        assert_ne!(scenario_to_json(&a), scenario_to_json(&c));
    }
}
