//! Drivable-area compliance.

use super::MetricThresholds;
use crate::engine::Snapshot;
use crate::map::LaneGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivableReport {
    pub violation: bool,
    /// Cumulative time with at least one footprint vertex off-road [s].
    pub outside_time: f64,
    /// Largest instantaneous excursion beyond the drivable area [m].
    pub max_excursion: f64,
}

/// Violation iff any ego footprint vertex stays off the drivable-area
/// union for more than the cumulative budget, or exceeds the excursion
/// bound at any single step.
pub fn drivable_area_compliance(
    snapshots: &[Snapshot],
    graph: &LaneGraph,
    thresholds: &MetricThresholds,
    dt: f64,
) -> DrivableReport {
    let mut outside_time = 0.0;
    let mut max_excursion = 0.0f64;
    for snap in snapshots {
        let mut any_outside = false;
        for v in snap.ego.footprint().corners() {
            let d = graph.distance_outside(v);
            if d > 0.0 {
                any_outside = true;
                max_excursion = max_excursion.max(d);
            }
        }
        if any_outside {
            outside_time += dt;
        }
    }
    let violation = outside_time > thresholds.drivable_max_outside_time + 1e-9
        || max_excursion > thresholds.drivable_max_excursion;
    DrivableReport {
        violation,
        outside_time,
        max_excursion,
    }
}
