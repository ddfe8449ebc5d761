//! Categorical next-token policy: linear feature weights plus a bigram
//! token-transition bias, decoded greedily for deterministic simulation.

use super::vocab::{MotionSegment, TokenVocabulary};
use crate::geom::normalize_angle;
use crate::map::LaneGraph;
use crate::scenario::AgentState;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Number of scalar context features.
pub const FEATURE_DIM: usize = 9;
/// Half opening angle of the front perception sector.
pub const FRONT_SECTOR_HALF_ANGLE: f64 = 30.0 * std::f64::consts::PI / 180.0;
/// Range of all perception sectors; missing neighbors are encoded at this
/// sentinel distance.
pub const SECTOR_RANGE: f64 = 50.0;
/// Arc-length offset at which the centerline curvature is sampled.
const CURVATURE_LOOKAHEAD: f64 = 10.0;

/// Per-agent context snapshot consumed by the policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextFeatures {
    pub speed: f64,
    pub prev_token: usize,
    /// Signed lateral offset to the nearest centerline [m].
    pub lateral_offset: f64,
    /// Heading error against that centerline [rad].
    pub heading_error: f64,
    /// Centerline curvature 10 m ahead [1/m].
    pub curvature_ahead: f64,
    /// Bumper gap to the nearest agent in the front sector [m].
    pub front_gap: f64,
    /// Closing speed toward that agent [m/s], positive when approaching.
    pub front_closing: f64,
    /// Center distance to the nearest agent in the left sector [m].
    pub left_distance: f64,
    /// Center distance to the nearest agent in the right sector [m].
    pub right_distance: f64,
}

impl ContextFeatures {
    pub fn to_vector(&self) -> [f64; FEATURE_DIM] {
        [
            self.speed,
            self.prev_token as f64,
            self.lateral_offset,
            self.heading_error,
            self.curvature_ahead,
            self.front_gap,
            self.front_closing,
            self.left_distance,
            self.right_distance,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Extract the policy context for `me` against the rest of the scene.
/// Neighbors are searched in three body-frame sectors (front +-30 deg,
/// left, right) out to [`SECTOR_RANGE`]; absent neighbors read as the
/// sentinel max range with zero closing speed.
pub fn extract_features(
    me: &AgentState,
    ego: &AgentState,
    agents: &[AgentState],
    graph: &LaneGraph,
    prev_token: usize,
) -> ContextFeatures {
    let (lateral_offset, heading_error, curvature_ahead) = match graph.locate(me.pose) {
        Some((lane_id, proj)) => {
            let lane = graph.lane(lane_id).unwrap();
            (
                proj.lateral,
                normalize_angle(me.pose.heading - proj.tangent_heading),
                lane.centerline.curvature_at(proj.arc + CURVATURE_LOOKAHEAD),
            )
        }
        None => (0.0, 0.0, 0.0),
    };

    let mut front: Option<(f64, &AgentState)> = None;
    let mut left = SECTOR_RANGE;
    let mut right = SECTOR_RANGE;
    for other in std::iter::once(ego).chain(agents.iter()) {
        if other.id == me.id {
            continue;
        }
        let rel = me.pose.to_local(other.pose.position());
        let dist = rel.norm();
        if dist > SECTOR_RANGE || dist < 1e-9 {
            continue;
        }
        let bearing = rel.y.atan2(rel.x);
        if bearing.abs() <= FRONT_SECTOR_HALF_ANGLE {
            match front {
                Some((d, _)) if d <= dist => {}
                _ => front = Some((dist, other)),
            }
        } else if bearing > FRONT_SECTOR_HALF_ANGLE && bearing < std::f64::consts::PI * 5.0 / 6.0 {
            left = left.min(dist);
        } else if bearing < -FRONT_SECTOR_HALF_ANGLE
            && bearing > -std::f64::consts::PI * 5.0 / 6.0
        {
            right = right.min(dist);
        }
    }
    let (front_gap, front_closing) = match front {
        Some((dist, other)) => {
            let gap = (dist - (me.length + other.length) / 2.0).max(0.0);
            let los = (other.pose.position() - me.pose.position()) * (1.0 / dist);
            let closing = (me.velocity() - other.velocity()).dot(los);
            (gap, closing)
        }
        None => (SECTOR_RANGE, 0.0),
    };

    ContextFeatures {
        speed: me.speed,
        prev_token,
        lateral_offset,
        heading_error,
        curvature_ahead,
        front_gap,
        front_closing,
        left_distance: left,
        right_distance: right,
    }
}

/// Initial previous-token for an agent entering the simulation: the token
/// nearest to its current instantaneous motion over one token interval.
/// Computable identically at training and inference time.
pub fn initial_prev_token(me: &AgentState, vocab: &TokenVocabulary) -> usize {
    vocab.nearest(&MotionSegment::new(me.speed * vocab.token_dt, 0.0, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub epochs: usize,
}

/// Linear-plus-bigram categorical model over the token vocabulary.
/// Logits are `W x + b + B[prev]` with `x` the standardized feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenPolicyModel {
    pub vocab_size: usize,
    /// V x FEATURE_DIM.
    pub weights: Vec<Vec<f64>>,
    /// V.
    pub bias: Vec<f64>,
    /// V x V transition bias, indexed by previous token.
    pub bigram: Vec<Vec<f64>>,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub hyper: TrainHyper,
}

impl TokenPolicyModel {
    pub fn zeros(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            weights: vec![vec![0.0; FEATURE_DIM]; vocab_size],
            bias: vec![0.0; vocab_size],
            bigram: vec![vec![0.0; vocab_size]; vocab_size],
            feature_mean: vec![0.0; FEATURE_DIM],
            feature_scale: vec![1.0; FEATURE_DIM],
            hyper: TrainHyper {
                learning_rate: 0.0,
                epochs: 0,
            },
        }
    }

    pub fn standardize(&self, raw: &[f64; FEATURE_DIM]) -> [f64; FEATURE_DIM] {
        std::array::from_fn(|i| (raw[i] - self.feature_mean[i]) / self.feature_scale[i])
    }

    pub fn logits_from_raw(&self, raw: &[f64; FEATURE_DIM], prev: usize) -> Vec<f64> {
        let x = self.standardize(raw);
        let prev = prev.min(self.vocab_size - 1);
        (0..self.vocab_size)
            .map(|k| {
                let mut z = self.bias[k] + self.bigram[prev][k];
                for (w, xi) in self.weights[k].iter().zip(x.iter()) {
                    z += w * xi;
                }
                z
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.bias.iter().all(|v| v.is_finite())
            && self.weights.iter().flatten().all(|v| v.is_finite())
            && self.bigram.iter().flatten().all(|v| v.is_finite())
    }
}

/// Decode behavior: greedy argmax (deterministic, the default) or seeded
/// temperature sampling over the top-k tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DecodeMode {
    Argmax,
    Sample { temperature: f64, top_k: usize },
}

impl Default for DecodeMode {
    fn default() -> Self {
        DecodeMode::Argmax
    }
}

/// Logits for a feature context.
pub fn decode_logits(features: &ContextFeatures, model: &TokenPolicyModel) -> Vec<f64> {
    model.logits_from_raw(&features.to_vector(), features.prev_token)
}

/// Greedy decode: the maximum-probability token, ties broken by the lowest
/// index. A pure function of (features, prev token, model).
pub fn decode_step(features: &ContextFeatures, model: &TokenPolicyModel) -> usize {
    let logits = decode_logits(features, model);
    argmax(&logits)
}

/// Stochastic decode used by the optional sampling mode.
pub fn decode_step_sampled<R: Rng>(
    features: &ContextFeatures,
    model: &TokenPolicyModel,
    temperature: f64,
    top_k: usize,
    rng: &mut R,
) -> usize {
    let logits = decode_logits(features, model);
    let mut idx: Vec<usize> = (0..logits.len()).collect();
    idx.sort_by(|&a, &b| logits[b].partial_cmp(&logits[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(top_k.max(1));
    let t = temperature.max(1e-6);
    let m = idx.iter().map(|&i| logits[i]).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = idx.iter().map(|&i| ((logits[i] - m) / t).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut pick = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        pick -= w;
        if pick <= 0.0 {
            return idx[k];
        }
    }
    *idx.last().unwrap()
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
