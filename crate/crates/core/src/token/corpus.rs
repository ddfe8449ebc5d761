//! Corpus extraction from logged scenario futures: motion segments for
//! vocabulary construction and teacher-forced training samples.

use super::policy::{extract_features, initial_prev_token};
use super::tokenizer::{tokenize_trajectory, TokenizeError};
use super::train::{TrainSample, TrainingCorpus};
use super::vocab::{MotionSegment, TokenVocabulary};
use crate::geom::{normalize_angle, Pose2D};
use crate::scenario::{AgentState, Scenario};

/// All 0.5 s motion segments of every logged trajectory (ego included),
/// expressed in the agent frame at each block start.
pub fn vocabulary_corpus(scenarios: &[Scenario]) -> Vec<MotionSegment> {
    let mut out = Vec::new();
    for scenario in scenarios {
        let futures = match &scenario.logged_futures {
            Some(f) => f,
            None => continue,
        };
        for (id, samples) in futures {
            let start = match scenario.agent(*id) {
                Some(a) => a.pose,
                None => continue,
            };
            let blocks = samples.len() / 5;
            let mut prev = start;
            for b in 0..blocks {
                let next = samples[b * 5 + 4].pose;
                let local = prev.to_local(next.position());
                out.push(MotionSegment::new(
                    local.x,
                    local.y,
                    normalize_angle(next.heading - prev.heading),
                ));
                prev = next;
            }
        }
    }
    out
}

/// Logged world state at one 10 Hz step: every vehicle moved onto its
/// logged sample (step 0 is the initial scene).
fn logged_world_at(scenario: &Scenario, step: usize) -> (Vec<AgentState>, AgentState) {
    let futures = scenario.logged_futures.as_ref().expect("caller checked");
    let at = |state: &AgentState| -> AgentState {
        if step == 0 {
            return *state;
        }
        match futures.get(&state.id).and_then(|s| s.get(step - 1)) {
            Some(sample) => AgentState {
                pose: sample.pose,
                speed: sample.speed,
                ..*state
            },
            None => *state,
        }
    };
    let ego = at(&scenario.ego);
    let agents = scenario.agents.iter().map(at).collect();
    (agents, ego)
}

/// Teacher-forced training corpus: tokenize every logged trajectory
/// (optionally with top-k matching noise), then pair each block's token
/// with the policy features extracted from the logged world at the block
/// start.
pub fn build_training_corpus(
    scenarios: &[Scenario],
    vocab: &TokenVocabulary,
    noise_top_k: usize,
    seed: u64,
) -> Result<TrainingCorpus, TokenizeError> {
    let mut samples = Vec::new();
    for scenario in scenarios {
        let futures = match &scenario.logged_futures {
            Some(f) => f,
            None => continue,
        };
        for (id, logged) in futures {
            let me0 = match scenario.agent(*id) {
                Some(a) => *a,
                None => continue,
            };
            let usable = (logged.len() / 5) * 5;
            if usable == 0 {
                continue;
            }
            let poses: Vec<Pose2D> = logged[..usable].iter().map(|s| s.pose).collect();
            let agent_seed = crate::derive_seed(seed, &[&scenario.id, &id.to_string()]);
            let tokens = tokenize_trajectory(me0.pose, &poses, vocab, noise_top_k, agent_seed)?;

            let mut prev = initial_prev_token(&me0, vocab);
            for (block, &target) in tokens.iter().enumerate() {
                let step = block * 5;
                let (agents, ego) = logged_world_at(scenario, step);
                let me = if *id == scenario.ego.id {
                    ego
                } else {
                    *agents.iter().find(|a| a.id == *id).unwrap()
                };
                let features =
                    extract_features(&me, &ego, &agents, &scenario.lane_graph, prev);
                samples.push(TrainSample {
                    features: features.to_vector(),
                    prev,
                    target,
                });
                prev = target;
            }
        }
    }
    Ok(TrainingCorpus {
        vocab_hash: vocab.content_hash(),
        samples,
    })
}
