//! Agent and scenario types: the immutable inputs to a closed-loop rollout.

use crate::geom::{OrientedRect, Pose2D};
use crate::map::{LaneGraph, MapError, Route};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct AgentId(pub u64);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Vehicle,
    Static,
}

/// Kinematic state of one agent at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub pose: Pose2D,
    /// Scalar speed along the heading, >= 0.
    pub speed: f64,
    pub acceleration: f64,
    pub length: f64,
    pub width: f64,
    pub kind: AgentKind,
}

impl AgentState {
    pub fn footprint(&self) -> OrientedRect {
        OrientedRect::new(self.pose.position(), self.pose.heading, self.length, self.width)
    }

    /// Velocity vector (speed along heading).
    pub fn velocity(&self) -> crate::geom::Vec2 {
        self.pose.direction() * self.speed
    }
}

/// One timestamped sample of a logged trajectory (10 Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub pose: Pose2D,
    pub speed: f64,
}

/// Ground-truth future for one agent, sample k holding the state at
/// t = (k+1) * dt relative to the scenario start.
pub type LoggedFutures = BTreeMap<AgentId, Vec<TrajectorySample>>;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("agent {0}: {1} must be positive")]
    BadDimension(AgentId, &'static str),
    #[error("agent {0}: speed must be >= 0")]
    NegativeSpeed(AgentId),
    #[error("duplicate agent id {0}")]
    DuplicateAgent(AgentId),
    #[error("horizon_steps must be >= 1")]
    BadHorizon,
    #[error("dt must be positive")]
    BadDt,
    #[error("logged future for agent {0} has {1} samples, needs >= {2}")]
    ShortLoggedFuture(AgentId, usize, usize),
    #[error("logged future references unknown agent {0}")]
    UnknownLoggedAgent(AgentId),
}

/// A complete simulation scenario. Immutable after construction; safe to
/// share between concurrent rollouts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    /// Scenario-type tag, e.g. "lane_change".
    pub tag: String,
    pub lane_graph: LaneGraph,
    pub ego: AgentState,
    pub agents: Vec<AgentState>,
    pub route: Route,
    pub horizon_steps: u32,
    pub dt: f64,
    pub logged_futures: Option<LoggedFutures>,
}

pub const DEFAULT_HORIZON_STEPS: u32 = 150;
pub const DEFAULT_DT: f64 = 0.1;

impl Scenario {
    /// Validate the cross-field invariants. Construction helpers and the
    /// file loader both funnel through this.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.horizon_steps == 0 {
            return Err(ScenarioError::BadHorizon);
        }
        if self.dt <= 0.0 {
            return Err(ScenarioError::BadDt);
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in std::iter::once(&self.ego).chain(self.agents.iter()) {
            if a.length <= 0.0 {
                return Err(ScenarioError::BadDimension(a.id, "length"));
            }
            if a.width <= 0.0 {
                return Err(ScenarioError::BadDimension(a.id, "width"));
            }
            if a.speed < 0.0 {
                return Err(ScenarioError::NegativeSpeed(a.id));
            }
            if !seen.insert(a.id) {
                return Err(ScenarioError::DuplicateAgent(a.id));
            }
        }
        if let Some(futures) = &self.logged_futures {
            for (id, samples) in futures {
                if !seen.contains(id) {
                    return Err(ScenarioError::UnknownLoggedAgent(*id));
                }
                if samples.len() < self.horizon_steps as usize {
                    return Err(ScenarioError::ShortLoggedFuture(
                        *id,
                        samples.len(),
                        self.horizon_steps as usize,
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.horizon_steps as f64 * self.dt
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        if self.ego.id == id {
            return Some(&self.ego);
        }
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn ego_logged_future(&self) -> Option<&Vec<TrajectorySample>> {
        self.logged_futures.as_ref()?.get(&self.ego.id)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_scenario() -> Scenario {
        tests_support::straight_scenario(10.0)
    }

    #[test]
    fn default_duration_is_fifteen_seconds() {
        let s = minimal_scenario();
        assert!((s.duration() - 15.0).abs() < 1e-12);
        s.validate().unwrap();
    }

    #[test]
    fn short_logged_future_rejected() {
        let mut s = minimal_scenario();
        let mut futures = LoggedFutures::new();
        futures.insert(
            AgentId(0),
            vec![
                TrajectorySample {
                    pose: Pose2D::new(0.0, 0.0, 0.0),
                    speed: 0.0,
                };
                10
            ],
        );
        s.logged_futures = Some(futures);
        assert!(matches!(
            s.validate(),
            Err(ScenarioError::ShortLoggedFuture(_, 10, 150))
        ));
    }

    #[test]
    fn duplicate_agent_rejected() {
        let mut s = minimal_scenario();
        let dup = s.ego;
        s.agents.push(dup);
        assert!(matches!(s.validate(), Err(ScenarioError::DuplicateAgent(_))));
    }
}
