//! The deterministic closed-loop stepping engine: a 10 Hz plan/track loop
//! with background agents advanced on their native cadence.

mod background;
mod tracker;
mod world;

pub use background::{
    Background, BackgroundKind, IdmBackgroundConfig, LaneChangeExec, LearnedBackground,
};
pub use tracker::{
    track, PlannedTrajectory, TrackerMode, TrajSample, MAX_ACCEL, MAX_CURVATURE, MAX_DECEL,
    MIN_PLAN_HORIZON, WHEELBASE,
};
pub use world::{HistoryFrame, RolloutLog, Snapshot, Termination, WorldState, HISTORY_STEPS};

use crate::planners::{Planner, PlannerObservation};
use crate::scenario::Scenario;
use std::time::Instant;

/// Advance the world one tick: the ego executes its planned trajectory
/// through the tracker, every background agent advances from the same
/// pre-step snapshot (synchronous update), and the history rotates.
pub fn step(
    world: &WorldState,
    planner_traj: &PlannedTrajectory,
    bg: &mut Background,
    scenario: &Scenario,
    tracker_mode: TrackerMode,
) -> WorldState {
    let ego = track(&world.ego, planner_traj, tracker_mode, scenario.dt);
    let agents = bg.step_agents(world, scenario);
    let history = world.rotated_history();
    let step_index = world.step_index + 1;
    WorldState {
        step_index,
        sim_time: step_index as f64 * scenario.dt,
        ego,
        agents,
        history,
    }
}

/// Run one scenario to completion (or planner failure).
///
/// Deterministic for fixed (scenario, planner, background, tracker mode,
/// seed): every source of randomness is seeded at construction and the
/// loop itself is purely sequential. A planner that returns an error or an
/// invalid trajectory truncates the rollout with a `PlannerError`
/// termination; the scenario is scored zero downstream.
pub fn run_scenario(
    scenario: &Scenario,
    planner: &mut dyn Planner,
    bg: &mut Background,
    tracker_mode: TrackerMode,
) -> RolloutLog {
    let mut world = WorldState::initial(scenario);
    let mut log = RolloutLog {
        scenario_id: scenario.id.clone(),
        dt: scenario.dt,
        snapshots: vec![Snapshot::of(&world)],
        termination: Termination::Completed,
        decode_counts: Default::default(),
        planner_latency_us: Vec::new(),
    };
    for _ in 0..scenario.horizon_steps {
        let started = Instant::now();
        let obs = PlannerObservation {
            world: &world,
            lane_graph: &scenario.lane_graph,
            route: &scenario.route,
            logged_ego: scenario.ego_logged_future(),
            sim_time: world.sim_time,
            dt: scenario.dt,
        };
        let traj = match planner.plan(&obs) {
            Ok(t) => t,
            Err(e) => {
                log.termination = Termination::PlannerError {
                    step: world.step_index,
                    message: e.to_string(),
                };
                break;
            }
        };
        log.planner_latency_us
            .push(started.elapsed().as_micros() as u64);
        if let Err(msg) = traj.validate(world.sim_time, scenario.dt) {
            log.termination = Termination::PlannerError {
                step: world.step_index,
                message: msg,
            };
            break;
        }
        world = step(&world, &traj, bg, scenario, tracker_mode);
        log.snapshots.push(Snapshot::of(&world));
    }
    log.decode_counts = bg.decode_counts();
    log
}
