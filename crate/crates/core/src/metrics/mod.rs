//! Per-scenario driving metrics, the composite closed-loop score with hard
//! multipliers, sim-agent realism measures and benchmark aggregation.

mod collisions;
mod drivable;
mod kinematics;
mod realism;
mod report;
mod ttc;

pub use collisions::{classify_at_fault, detect_collisions, CollisionEvent};
pub use drivable::{drivable_area_compliance, DrivableReport};
pub use kinematics::{comfort_score, progress_score, speed_limit_score, ComfortLimits, ComfortReport};
pub use realism::{
    ade, background_ade, realism_report, simulated_positions, RealismError, RealismReport,
    ADE_HORIZON_STEPS,
};
pub use report::{
    aggregate_benchmark, AggregateRow, BenchmarkReport, DeltaRow, ScenarioRecord, TagAggregateRow,
};
pub use ttc::{min_ttc_of_step, time_to_collision_score, TtcReport};

use crate::engine::{BackgroundKind, RolloutLog, Snapshot};
use crate::scenario::Scenario;
use serde::{Deserialize, Serialize};

/// Weights of the soft metrics in the composite score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricWeights {
    pub ttc: f64,
    pub progress: f64,
    pub speed_limit: f64,
    pub comfort: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self {
            ttc: 5.0,
            progress: 5.0,
            speed_limit: 4.0,
            comfort: 2.0,
        }
    }
}

/// All configurable thresholds of the metric suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricThresholds {
    /// Minimum acceptable time to collision [s].
    pub ttc_threshold: f64,
    /// Constant-velocity projection horizon of the TTC check [s].
    pub ttc_projection_horizon: f64,
    /// Cumulative off-drivable time before a violation fires [s].
    pub drivable_max_outside_time: f64,
    /// Instantaneous off-drivable excursion before a violation fires [m].
    pub drivable_max_excursion: f64,
    pub comfort: ComfortLimits,
}

impl Default for MetricThresholds {
    fn default() -> Self {
        Self {
            ttc_threshold: 0.95,
            ttc_projection_horizon: 3.0,
            drivable_max_outside_time: 0.3,
            drivable_max_excursion: 0.5,
            comfort: ComfortLimits::default(),
        }
    }
}

/// Soft metric values in [0, 1] (TTC and comfort are binary).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftMetrics {
    pub ttc_score: f64,
    pub progress_score: f64,
    pub comfort_score: f64,
    pub speed_limit_score: f64,
}

/// Binary conditions that zero the composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardMultipliers {
    pub at_fault_collision: bool,
    pub drivable_area_violation: bool,
}

impl HardMultipliers {
    pub fn any(&self) -> bool {
        self.at_fault_collision || self.drivable_area_violation
    }
}

/// Composite closed-loop score in [0, 100], labeled by the background the
/// rollout ran against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopScore {
    pub soft: SoftMetrics,
    pub hard: HardMultipliers,
    pub composite: f64,
    pub background: BackgroundKind,
}

/// Weighted soft-metric combination, zeroed by any hard multiplier.
pub fn compose_cls(
    soft: &SoftMetrics,
    hard: &HardMultipliers,
    weights: &MetricWeights,
) -> f64 {
    if hard.any() {
        return 0.0;
    }
    let total = weights.ttc + weights.progress + weights.speed_limit + weights.comfort;
    let acc = weights.ttc * soft.ttc_score
        + weights.progress * soft.progress_score
        + weights.speed_limit * soft.speed_limit_score
        + weights.comfort * soft.comfort_score;
    100.0 * acc / total
}

/// Everything the metric suite derives from one rollout.
#[derive(Debug, Clone)]
pub struct RolloutEvaluation {
    pub soft: SoftMetrics,
    pub hard: HardMultipliers,
    pub composite: f64,
    pub min_ttc: Option<f64>,
    pub progress_m: f64,
    pub reference_progress: f64,
    pub collisions: Vec<CollisionEvent>,
    pub comfort: ComfortReport,
    pub planner_error: bool,
}

impl RolloutEvaluation {
    pub fn score(&self, background: BackgroundKind) -> ClosedLoopScore {
        ClosedLoopScore {
            soft: self.soft,
            hard: self.hard,
            composite: self.composite,
            background,
        }
    }
}

/// Reference progress for the progress score: the logged expert's own
/// progress when available, otherwise the achievable distance (remaining
/// route capped by the speed limit over the horizon).
pub fn default_reference_progress(scenario: &Scenario) -> f64 {
    let route = &scenario.route;
    let graph = &scenario.lane_graph;
    let start = route.progress_of(scenario.ego.pose.position(), graph);
    if let Some(logged) = scenario.ego_logged_future() {
        let mut max_p = 0.0f64;
        for s in logged.iter().take(scenario.horizon_steps as usize) {
            max_p = max_p.max(route.progress_of(s.pose.position(), graph) - start);
        }
        return max_p.max(1.0);
    }
    let limit = route
        .lanes()
        .iter()
        .map(|l| graph.lane(*l).unwrap().speed_limit)
        .fold(f64::NEG_INFINITY, f64::max);
    let remaining = (route.total_length() - start).max(0.0);
    remaining.min(limit * scenario.duration()).max(1.0)
}

/// Evaluate a snapshot sequence against the full metric suite. The same
/// path scores both real rollouts and the centerline planner's internal
/// proposal rollouts.
pub fn evaluate_snapshots(
    snapshots: &[Snapshot],
    scenario: &Scenario,
    weights: &MetricWeights,
    thresholds: &MetricThresholds,
    reference_progress: f64,
    planner_error: bool,
) -> RolloutEvaluation {
    let dt = scenario.dt;
    let graph = &scenario.lane_graph;
    let route = &scenario.route;

    let collisions = detect_collisions(snapshots);
    let at_fault = collisions
        .iter()
        .any(|e| classify_at_fault(e, snapshots, route, graph));
    let drivable = drivable_area_compliance(snapshots, graph, thresholds, dt);
    let hard = HardMultipliers {
        at_fault_collision: at_fault,
        drivable_area_violation: drivable.violation,
    };

    let ttc = time_to_collision_score(snapshots, thresholds, dt);
    let progress = progress_score(snapshots, route, graph, reference_progress);
    let comfort = comfort_score(snapshots, dt, &thresholds.comfort);
    let speed = speed_limit_score(snapshots, graph);

    let soft = SoftMetrics {
        ttc_score: ttc.score,
        progress_score: progress.0,
        comfort_score: if comfort.ok { 1.0 } else { 0.0 },
        speed_limit_score: speed,
    };
    let composite = if planner_error {
        0.0
    } else {
        compose_cls(&soft, &hard, weights)
    };
    RolloutEvaluation {
        soft,
        hard,
        composite,
        min_ttc: ttc.min_ttc,
        progress_m: progress.1,
        reference_progress,
        collisions,
        comfort,
        planner_error,
    }
}

/// Evaluate a finished rollout log.
pub fn evaluate_rollout(
    log: &RolloutLog,
    scenario: &Scenario,
    weights: &MetricWeights,
    thresholds: &MetricThresholds,
) -> RolloutEvaluation {
    let reference = default_reference_progress(scenario);
    evaluate_snapshots(
        &log.snapshots,
        scenario,
        weights,
        thresholds,
        reference,
        log.planner_error(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn soft(ttc: f64, progress: f64, comfort: f64, speed: f64) -> SoftMetrics {
        SoftMetrics {
            ttc_score: ttc,
            progress_score: progress,
            comfort_score: comfort,
            speed_limit_score: speed,
        }
    }

    const NO_FLAGS: HardMultipliers = HardMultipliers {
        at_fault_collision: false,
        drivable_area_violation: false,
    };

    #[test]
    fn perfect_soft_metrics_score_100() {
        let c = compose_cls(&soft(1.0, 1.0, 1.0, 1.0), &NO_FLAGS, &MetricWeights::default());
        assert_eq!(c, 100.0);
    }

    #[test]
    fn worked_composite_example() {
        // ttc=1, progress=0.8, comfort=1, speed=1 with weights (5,5,4,2):
        // (5 + 4 + 2 + 4) / 16 * 100 = 93.75 exactly.
        let c = compose_cls(&soft(1.0, 0.8, 1.0, 1.0), &NO_FLAGS, &MetricWeights::default());
        assert_eq!(c, 93.75);
    }

    #[test]
    fn any_hard_flag_zeroes_the_score() {
        for (a, d) in [(true, false), (false, true), (true, true)] {
            let hard = HardMultipliers {
                at_fault_collision: a,
                drivable_area_violation: d,
            };
            let c = compose_cls(&soft(1.0, 1.0, 1.0, 1.0), &hard, &MetricWeights::default());
            assert_eq!(c, 0.0);
        }
    }

    proptest! {
        #[test]
        fn hard_multiplier_dominance_and_monotonicity(
            ttc in 0.0f64..=1.0,
            progress in 0.0f64..=1.0,
            comfort in 0.0f64..=1.0,
            speed in 0.0f64..=1.0,
            bump in 0.0f64..=1.0,
            flag_a in any::<bool>(),
            flag_d in any::<bool>(),
        ) {
            let w = MetricWeights::default();
            let s = soft(ttc, progress, comfort, speed);
            let hard = HardMultipliers { at_fault_collision: flag_a, drivable_area_violation: flag_d };
            let c = compose_cls(&s, &hard, &w);
            if flag_a || flag_d {
                prop_assert_eq!(c, 0.0);
            } else {
                prop_assert!((0.0..=100.0).contains(&c));
                // Raising any single soft metric never lowers the composite.
                let raised = soft((ttc + bump).min(1.0), progress, comfort, speed);
                prop_assert!(compose_cls(&raised, &hard, &w) >= c - 1e-12);
                let raised = soft(ttc, (progress + bump).min(1.0), comfort, speed);
                prop_assert!(compose_cls(&raised, &hard, &w) >= c - 1e-12);
                let raised = soft(ttc, progress, (comfort + bump).min(1.0), speed);
                prop_assert!(compose_cls(&raised, &hard, &w) >= c - 1e-12);
                let raised = soft(ttc, progress, comfort, (speed + bump).min(1.0));
                prop_assert!(compose_cls(&raised, &hard, &w) >= c - 1e-12);
            }
        }
    }
}
