//! Background traffic models: log replay, IDM and the learned token policy.

use super::world::WorldState;
use crate::geom::Pose2D;
use crate::idm::{self, IdmParams};
use crate::mobil::{mobil_decide, LaneChange, MobilParams};
use crate::map::LaneId;
use crate::scenario::{AgentId, AgentKind, AgentState, Scenario};
use crate::token::{
    decode_step, decode_step_sampled, extract_features, initial_prev_token, upsample_token,
    DecodeMode, TokenPolicyModel, TokenVocabulary,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which background traffic model a rollout runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundKind {
    NonReactiveReplay,
    IdmReactive,
    LearnedReactive,
}

impl BackgroundKind {
    /// Score column label for this background.
    pub fn label(self) -> &'static str {
        match self {
            BackgroundKind::NonReactiveReplay => "CLS-NR",
            BackgroundKind::IdmReactive => "CLS-R",
            BackgroundKind::LearnedReactive => "CLS-SR",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BackgroundKind::NonReactiveReplay => "non_reactive_replay",
            BackgroundKind::IdmReactive => "idm_reactive",
            BackgroundKind::LearnedReactive => "learned_reactive",
        }
    }
}

impl std::str::FromStr for BackgroundKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "non_reactive_replay" => Ok(BackgroundKind::NonReactiveReplay),
            "idm_reactive" => Ok(BackgroundKind::IdmReactive),
            "learned_reactive" => Ok(BackgroundKind::LearnedReactive),
            other => Err(format!("unknown background '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdmBackgroundConfig {
    pub params: IdmParams,
    /// Override the desired speed with the current lane's speed limit.
    pub v0_from_speed_limit: bool,
    /// Optional MOBIL lane changing; off by default.
    pub mobil: Option<MobilParams>,
}

impl Default for IdmBackgroundConfig {
    fn default() -> Self {
        Self {
            params: IdmParams::default(),
            v0_from_speed_limit: true,
            mobil: None,
        }
    }
}

/// Runtime state of the active background model for one rollout.
pub enum Background<'a> {
    Replay,
    Idm {
        config: IdmBackgroundConfig,
        lane_changes: BTreeMap<AgentId, LaneChangeExec>,
    },
    Learned(LearnedBackground<'a>),
}

/// In-progress rule-based lane change (only with MOBIL enabled).
#[derive(Debug, Clone)]
pub struct LaneChangeExec {
    pub target: LaneId,
    pub initial_lateral: f64,
    pub elapsed: f64,
    pub duration: f64,
}

pub struct LearnedBackground<'a> {
    pub model: &'a TokenPolicyModel,
    pub vocab: &'a TokenVocabulary,
    pub mode: DecodeMode,
    rng: ChaCha8Rng,
    caches: BTreeMap<AgentId, AgentCache>,
}

#[derive(Debug, Clone)]
struct AgentCache {
    samples: [Pose2D; 5],
    cursor: usize,
    prev_token: usize,
    decode_count: u32,
}

impl<'a> LearnedBackground<'a> {
    pub fn new(
        model: &'a TokenPolicyModel,
        vocab: &'a TokenVocabulary,
        mode: DecodeMode,
        seed: u64,
    ) -> Self {
        Self {
            model,
            vocab,
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            caches: BTreeMap::new(),
        }
    }
}

impl<'a> Background<'a> {
    pub fn kind(&self) -> BackgroundKind {
        match self {
            Background::Replay => BackgroundKind::NonReactiveReplay,
            Background::Idm { .. } => BackgroundKind::IdmReactive,
            Background::Learned(_) => BackgroundKind::LearnedReactive,
        }
    }

    /// Advance every background agent one tick from the world at time t.
    /// All agents read the same pre-step snapshot.
    pub fn step_agents(&mut self, world: &WorldState, scenario: &Scenario) -> Vec<AgentState> {
        match self {
            Background::Replay => world
                .agents
                .iter()
                .map(|a| replay_step(a, world, scenario))
                .collect(),
            Background::Idm {
                config,
                lane_changes,
            } => world
                .agents
                .iter()
                .map(|a| idm_step(a, world, scenario, config, lane_changes))
                .collect(),
            Background::Learned(lb) => {
                let decode_now = world.step_index % 5 == 0;
                world
                    .agents
                    .iter()
                    .map(|a| learned_step(a, world, scenario, lb, decode_now))
                    .collect()
            }
        }
    }

    /// Per-agent decode counts (empty for rule-based backgrounds).
    pub fn decode_counts(&self) -> BTreeMap<AgentId, u32> {
        match self {
            Background::Learned(lb) => lb
                .caches
                .iter()
                .map(|(id, c)| (*id, c.decode_count))
                .collect(),
            _ => BTreeMap::new(),
        }
    }
}

fn replay_step(agent: &AgentState, world: &WorldState, scenario: &Scenario) -> AgentState {
    if agent.kind == AgentKind::Static {
        return *agent;
    }
    let sample = scenario
        .logged_futures
        .as_ref()
        .and_then(|f| f.get(&agent.id))
        .and_then(|samples| samples.get(world.step_index as usize));
    match sample {
        Some(s) => AgentState {
            pose: s.pose,
            speed: s.speed,
            acceleration: (s.speed - agent.speed) / scenario.dt,
            ..*agent
        },
        // Agents without a logged future (e.g. inserted by augmentation)
        // continue ballistically under replay.
        None => idm::ballistic_step(agent, scenario.dt),
    }
}

fn idm_step(
    agent: &AgentState,
    world: &WorldState,
    scenario: &Scenario,
    config: &IdmBackgroundConfig,
    lane_changes: &mut BTreeMap<AgentId, LaneChangeExec>,
) -> AgentState {
    if agent.kind == AgentKind::Static {
        return *agent;
    }
    let graph = &scenario.lane_graph;
    let mut params = config.params;
    if config.v0_from_speed_limit {
        if let Some((lane_id, _)) = graph.locate(agent.pose) {
            params.v0 = graph.lane(lane_id).unwrap().speed_limit;
        }
    }

    // Optional MOBIL execution: blend laterally onto the target lane while
    // IDM keeps running longitudinally on it.
    if let Some(exec) = lane_changes.get_mut(&agent.id) {
        let target_lane = graph.lane(exec.target).unwrap();
        let proj = target_lane.centerline.project(agent.pose.position());
        let leader = idm::select_leader(
            agent,
            exec.target,
            proj.arc,
            idm::world_agents(&world.ego, &world.agents),
            graph,
        );
        let (gap, dv) = leader.map(|l| (l.gap.max(1e-3), l.dv)).unwrap_or((f64::INFINITY, 0.0));
        let accel = idm::idm_acceleration(agent.speed, gap, dv, &params).unwrap_or(idm::IDM_MIN_ACCEL);
        let speed = (agent.speed + accel * scenario.dt).max(0.0);
        exec.elapsed += scenario.dt;
        let f = (exec.elapsed / exec.duration).clamp(0.0, 1.0);
        let blend = f * f * (10.0 - 15.0 * f + 6.0 * f * f) * f; // quintic ease
        let lateral = exec.initial_lateral * (1.0 - blend);
        let arc = proj.arc + speed * scenario.dt;
        let center = target_lane.centerline.point_at(arc);
        let tangent = target_lane.centerline.tangent_at(arc);
        let normal = crate::geom::Vec2::unit_from_angle(tangent).perp();
        let pos = center + normal * lateral;
        let done = exec.elapsed >= exec.duration;
        let next = AgentState {
            pose: Pose2D::new(pos.x, pos.y, tangent),
            speed,
            acceleration: accel,
            ..*agent
        };
        if done {
            lane_changes.remove(&agent.id);
        }
        return next;
    }

    // MOBIL decision once per second, when enabled.
    if let Some(mp) = &config.mobil {
        if world.step_index % 10 == 0 {
            let others: Vec<AgentState> = world
                .agents
                .iter()
                .filter(|a| a.id != agent.id)
                .copied()
                .collect();
            let decision = mobil_decide(agent, &world.ego, &others, graph, mp, &params);
            if decision != LaneChange::Keep {
                if let Some((lane_id, _)) = graph.locate(agent.pose) {
                    let lane = graph.lane(lane_id).unwrap();
                    let target = match decision {
                        LaneChange::ChangeLeft => lane.left_neighbor,
                        LaneChange::ChangeRight => lane.right_neighbor,
                        LaneChange::Keep => None,
                    };
                    if let Some(target) = target {
                        let tl = graph.lane(target).unwrap();
                        let proj = tl.centerline.project(agent.pose.position());
                        lane_changes.insert(
                            agent.id,
                            LaneChangeExec {
                                target,
                                initial_lateral: proj.lateral,
                                elapsed: 0.0,
                                duration: 3.0,
                            },
                        );
                    }
                }
            }
        }
    }

    idm::idm_agent_step(agent, &world.ego, &world.agents, graph, &params, scenario.dt)
}

fn learned_step(
    agent: &AgentState,
    world: &WorldState,
    scenario: &Scenario,
    lb: &mut LearnedBackground,
    decode_now: bool,
) -> AgentState {
    if agent.kind == AgentKind::Static {
        return *agent;
    }
    let have_cache = lb.caches.contains_key(&agent.id);
    if decode_now || !have_cache {
        let prev = lb
            .caches
            .get(&agent.id)
            .map(|c| c.prev_token)
            .unwrap_or_else(|| initial_prev_token(agent, lb.vocab));
        let features = extract_features(
            agent,
            &world.ego,
            &world.agents,
            &scenario.lane_graph,
            prev,
        );
        let token_idx = match lb.mode {
            DecodeMode::Argmax => decode_step(&features, lb.model),
            DecodeMode::Sample { temperature, top_k } => {
                decode_step_sampled(&features, lb.model, temperature, top_k, &mut lb.rng)
            }
        };
        let samples = upsample_token(agent.pose, lb.vocab.token(token_idx));
        let count = lb.caches.get(&agent.id).map(|c| c.decode_count).unwrap_or(0);
        lb.caches.insert(
            agent.id,
            AgentCache {
                samples,
                cursor: 0,
                prev_token: token_idx,
                decode_count: count + 1,
            },
        );
    }
    let cache = lb.caches.get_mut(&agent.id).unwrap();
    let pose = cache.samples[cache.cursor.min(4)];
    cache.cursor += 1;
    let dist = (pose.position() - agent.pose.position()).norm();
    let speed = dist / scenario.dt;
    AgentState {
        pose,
        speed,
        acceleration: (speed - agent.speed) / scenario.dt,
        ..*agent
    }
}
