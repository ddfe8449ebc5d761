//! Scenario files: a versioned JSON schema that validates strictly
//! (unknown fields rejected) and round-trips losslessly.

use crate::geom::{Pose2D, Vec2};
use crate::map::{Lane, LaneGraph, LaneId, Polyline, Route};
use crate::scenario::{
    AgentId, AgentKind, AgentState, LoggedFutures, Scenario, ScenarioError, TrajectorySample,
};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("schema violation in {path}: {source}")]
    Schema {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: unsupported scenario format version {found}, expected {expected}")]
    Version {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("invalid scenario in {path}: {source}")]
    Invalid {
        path: String,
        source: ScenarioError,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaneDoc {
    id: u32,
    centerline: Vec<[f64; 2]>,
    width: f64,
    speed_limit: f64,
    #[serde(default)]
    successors: Vec<u32>,
    #[serde(default)]
    left_neighbor: Option<u32>,
    #[serde(default)]
    right_neighbor: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    id: u64,
    x: f64,
    y: f64,
    heading: f64,
    speed: f64,
    #[serde(default)]
    acceleration: f64,
    length: f64,
    width: f64,
    kind: AgentKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoggedFutureDoc {
    agent: u64,
    /// Samples at 10 Hz: [x, y, heading, speed], sample k at t=(k+1)*dt.
    samples: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    version: u32,
    id: String,
    tag: String,
    horizon_steps: u32,
    dt: f64,
    lanes: Vec<LaneDoc>,
    ego: AgentDoc,
    agents: Vec<AgentDoc>,
    route: Vec<u32>,
    #[serde(default)]
    logged_futures: Vec<LoggedFutureDoc>,
}

fn agent_to_doc(a: &AgentState) -> AgentDoc {
    AgentDoc {
        id: a.id.0,
        x: a.pose.x,
        y: a.pose.y,
        heading: a.pose.heading,
        speed: a.speed,
        acceleration: a.acceleration,
        length: a.length,
        width: a.width,
        kind: a.kind,
    }
}

fn doc_to_agent(d: &AgentDoc) -> AgentState {
    AgentState {
        id: AgentId(d.id),
        pose: Pose2D::new(d.x, d.y, d.heading),
        speed: d.speed,
        acceleration: d.acceleration,
        length: d.length,
        width: d.width,
        kind: d.kind,
    }
}

fn scenario_to_doc(s: &Scenario) -> ScenarioDoc {
    ScenarioDoc {
        version: SCENARIO_FORMAT_VERSION,
        id: s.id.clone(),
        tag: s.tag.clone(),
        horizon_steps: s.horizon_steps,
        dt: s.dt,
        lanes: s
            .lane_graph
            .lanes()
            .map(|l| LaneDoc {
                id: l.id.0,
                centerline: l.centerline.points().iter().map(|p| [p.x, p.y]).collect(),
                width: l.width,
                speed_limit: l.speed_limit,
                successors: l.successors.iter().map(|s| s.0).collect(),
                left_neighbor: l.left_neighbor.map(|n| n.0),
                right_neighbor: l.right_neighbor.map(|n| n.0),
            })
            .collect(),
        ego: agent_to_doc(&s.ego),
        agents: s.agents.iter().map(agent_to_doc).collect(),
        route: s.route.lanes().iter().map(|l| l.0).collect(),
        logged_futures: s
            .logged_futures
            .as_ref()
            .map(|futures| {
                futures
                    .iter()
                    .map(|(id, samples)| LoggedFutureDoc {
                        agent: id.0,
                        samples: samples
                            .iter()
                            .map(|t| [t.pose.x, t.pose.y, t.pose.heading, t.speed])
                            .collect(),
                    })
                    .collect()
            })
            .unwrap_or_default(),
    }
}

fn doc_to_scenario(doc: ScenarioDoc, path: &str) -> Result<Scenario, ScenarioIoError> {
    let lanes: Vec<Lane> = doc
        .lanes
        .iter()
        .map(|l| Lane {
            id: LaneId(l.id),
            centerline: Polyline::new(l.centerline.iter().map(|p| Vec2::new(p[0], p[1])).collect()),
            width: l.width,
            speed_limit: l.speed_limit,
            successors: l.successors.iter().map(|s| LaneId(*s)).collect(),
            left_neighbor: l.left_neighbor.map(LaneId),
            right_neighbor: l.right_neighbor.map(LaneId),
        })
        .collect();
    let graph = LaneGraph::new(lanes).map_err(|e| ScenarioIoError::Invalid {
        path: path.to_string(),
        source: e.into(),
    })?;
    let route = Route::new(doc.route.iter().map(|r| LaneId(*r)).collect(), &graph).map_err(|e| {
        ScenarioIoError::Invalid {
            path: path.to_string(),
            source: e.into(),
        }
    })?;
    let logged_futures = if doc.logged_futures.is_empty() {
        None
    } else {
        let mut futures = LoggedFutures::new();
        for f in &doc.logged_futures {
            futures.insert(
                AgentId(f.agent),
                f.samples
                    .iter()
                    .map(|s| TrajectorySample {
                        pose: Pose2D::new(s[0], s[1], s[2]),
                        speed: s[3],
                    })
                    .collect(),
            );
        }
        Some(futures)
    };
    let scenario = Scenario {
        id: doc.id,
        tag: doc.tag,
        lane_graph: graph,
        ego: doc_to_agent(&doc.ego),
        agents: doc.agents.iter().map(doc_to_agent).collect(),
        route,
        horizon_steps: doc.horizon_steps,
        dt: doc.dt,
        logged_futures,
    };
    scenario.validate().map_err(|e| ScenarioIoError::Invalid {
        path: path.to_string(),
        source: e,
    })?;
    Ok(scenario)
}

/// Serialize a scenario to its canonical JSON document.
pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(&scenario_to_doc(s)).expect("scenario serializes")
}

pub fn save_scenario(s: &Scenario, path: &Path) -> Result<(), ScenarioIoError> {
    std::fs::write(path, scenario_to_json(s)).map_err(|source| ScenarioIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioIoError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioIoError::Io {
        path: display.clone(),
        source,
    })?;
    let doc: ScenarioDoc =
        serde_json::from_str(&text).map_err(|source| ScenarioIoError::Schema {
            path: display.clone(),
            source,
        })?;
    if doc.version != SCENARIO_FORMAT_VERSION {
        return Err(ScenarioIoError::Version {
            path: display,
            found: doc.version,
            expected: SCENARIO_FORMAT_VERSION,
        });
    }
    doc_to_scenario(doc, &display)
}

/// Load every `*.json` scenario in a directory (sorted by file name) or a
/// single scenario file.
pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>, ScenarioIoError> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(|source| ScenarioIoError::Io {
                path: path.display().to_string(),
                source,
            })?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
            .collect();
        files.sort();
        files.iter().map(|f| load_scenario(f)).collect()
    } else {
        Ok(vec![load_scenario(path)?])
    }
}
