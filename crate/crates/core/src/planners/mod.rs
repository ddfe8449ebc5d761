//! Planner plugin surface and the reference planners: constant velocity,
//! expert log replay, rule-based car following, and the proposal-scoring
//! centerline planner.

mod centerline;
mod constant;
mod idm_planner;
mod replay;

pub use centerline::{CenterlinePlanner, Proposal, PROPOSAL_HORIZON_STEPS};
pub use constant::ConstantVelocityPlanner;
pub use idm_planner::IdmPlanner;
pub use replay::LogReplayPlanner;

use crate::engine::{PlannedTrajectory, WorldState};
use crate::map::{LaneGraph, Route};
use crate::scenario::TrajectorySample;
use thiserror::Error;

/// Read-only view handed to a planner each tick.
pub struct PlannerObservation<'a> {
    pub world: &'a WorldState,
    pub lane_graph: &'a LaneGraph,
    pub route: &'a Route,
    /// The ego's logged expert future, when the scenario provides one.
    pub logged_ego: Option<&'a Vec<TrajectorySample>>,
    pub sim_time: f64,
    pub dt: f64,
}

#[derive(Debug, Error)]
#[error("planner failure: {0}")]
pub struct PlannerError(pub String);

/// The contract every planner implements. Any error (or invalid
/// trajectory) terminates the rollout and zeroes the scenario score.
pub trait Planner: Send {
    fn name(&self) -> &'static str;
    fn plan(&mut self, obs: &PlannerObservation) -> Result<PlannedTrajectory, PlannerError>;
}

/// Instantiate a planner by its config name.
pub fn build_planner(
    name: &str,
    params: &serde_json::Value,
) -> Result<Box<dyn Planner>, PlannerError> {
    match name {
        "constant_velocity" => Ok(Box::new(ConstantVelocityPlanner::default())),
        "log_replay" => Ok(Box::new(LogReplayPlanner::default())),
        "idm" => {
            let planner: IdmPlanner = if params.is_null() {
                IdmPlanner::default()
            } else {
                serde_json::from_value(params.clone())
                    .map_err(|e| PlannerError(format!("bad idm planner params: {e}")))?
            };
            Ok(Box::new(planner))
        }
        "centerline" => {
            let planner: CenterlinePlanner = if params.is_null() {
                CenterlinePlanner::default()
            } else {
                serde_json::from_value(params.clone())
                    .map_err(|e| PlannerError(format!("bad centerline planner params: {e}")))?
            };
            Ok(Box::new(planner))
        }
        other => Err(PlannerError(format!("unknown planner '{other}'"))),
    }
}

pub const PLANNER_NAMES: &[&str] = &["constant_velocity", "log_replay", "idm", "centerline"];
