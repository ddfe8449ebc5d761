//! World state, rollout logs and history bookkeeping.

use crate::scenario::{AgentId, AgentState, Scenario};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

/// Number of past steps retained in the history ring buffer (1 s at 10 Hz).
pub const HISTORY_STEPS: usize = 10;

/// One retained past frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFrame {
    pub ego: AgentState,
    pub agents: Vec<AgentState>,
}

/// The live world advanced by the engine. Carries a ring buffer of the
/// last second of states for policies that consume history.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub step_index: u32,
    pub sim_time: f64,
    pub ego: AgentState,
    pub agents: Vec<AgentState>,
    pub history: VecDeque<HistoryFrame>,
}

impl WorldState {
    pub fn initial(scenario: &Scenario) -> Self {
        Self {
            step_index: 0,
            sim_time: 0.0,
            ego: scenario.ego,
            agents: scenario.agents.clone(),
            history: VecDeque::new(),
        }
    }

    /// The frame `seconds` ago. Histories shorter than requested pad by
    /// repeating the oldest known state (the current one if none).
    pub fn frame_seconds_ago(&self, seconds: f64, dt: f64) -> HistoryFrame {
        let steps_back = (seconds / dt).round() as usize;
        if steps_back == 0 || self.history.is_empty() {
            return HistoryFrame {
                ego: self.ego,
                agents: self.agents.clone(),
            };
        }
        // history is ordered oldest -> newest; newest is 1 step back.
        let len = self.history.len();
        let idx = if steps_back >= len { 0 } else { len - steps_back };
        self.history[idx].clone()
    }

    pub(crate) fn rotated_history(&self) -> VecDeque<HistoryFrame> {
        let mut h = self.history.clone();
        h.push_back(HistoryFrame {
            ego: self.ego,
            agents: self.agents.clone(),
        });
        while h.len() > HISTORY_STEPS {
            h.pop_front();
        }
        h
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        if self.ego.id == id {
            return Some(&self.ego);
        }
        self.agents.iter().find(|a| a.id == id)
    }
}

/// A serializable world snapshot (no history).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step_index: u32,
    pub sim_time: f64,
    pub ego: AgentState,
    pub agents: Vec<AgentState>,
}

impl Snapshot {
    pub fn of(world: &WorldState) -> Self {
        Self {
            step_index: world.step_index,
            sim_time: world.sim_time,
            ego: world.ego,
            agents: world.agents.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum Termination {
    Completed,
    PlannerError { step: u32, message: String },
}

/// Complete record of one closed-loop rollout: a snapshot per step plus
/// bookkeeping. Planner latencies are runtime telemetry and deliberately
/// excluded from serialization so logs stay byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutLog {
    pub scenario_id: String,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    pub decode_counts: BTreeMap<AgentId, u32>,
    #[serde(skip)]
    pub planner_latency_us: Vec<u64>,
}

impl RolloutLog {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn planner_error(&self) -> bool {
        matches!(self.termination, Termination::PlannerError { .. })
    }

    /// Canonical serialization used for byte-level determinism checks.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("rollout log serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pose2D;
    use crate::scenario::AgentKind;

    fn state(x: f64) -> AgentState {
        AgentState {
            id: AgentId(0),
            pose: Pose2D::new(x, 0.0, 0.0),
            speed: 0.0,
            acceleration: 0.0,
            length: 4.0,
            width: 2.0,
            kind: AgentKind::Vehicle,
        }
    }

    #[test]
    fn history_caps_at_ten_frames() {
        let mut w = WorldState {
            step_index: 0,
            sim_time: 0.0,
            ego: state(0.0),
            agents: vec![],
            history: VecDeque::new(),
        };
        for i in 0..25 {
            w = WorldState {
                step_index: w.step_index + 1,
                sim_time: (w.step_index + 1) as f64 * 0.1,
                ego: state(i as f64),
                agents: vec![],
                history: w.rotated_history(),
            };
        }
        assert_eq!(w.history.len(), HISTORY_STEPS);
        // Newest retained frame is the previous step's ego.
        assert_eq!(w.history.back().unwrap().ego.pose.x, 23.0);
    }

    #[test]
    fn short_history_pads_with_oldest() {
        let w0 = WorldState {
            step_index: 0,
            sim_time: 0.0,
            ego: state(7.0),
            agents: vec![],
            history: VecDeque::new(),
        };
        // No history at all: padding returns the current state.
        assert_eq!(w0.frame_seconds_ago(1.0, 0.1).ego.pose.x, 7.0);

        let w1 = WorldState {
            step_index: 1,
            sim_time: 0.1,
            ego: state(8.0),
            agents: vec![],
            history: w0.rotated_history(),
        };
        // 1 s requested, only 0.1 s available: repeat the oldest frame.
        assert_eq!(w1.frame_seconds_ago(1.0, 0.1).ego.pose.x, 7.0);
        assert_eq!(w1.frame_seconds_ago(0.1, 0.1).ego.pose.x, 7.0);
    }
}
