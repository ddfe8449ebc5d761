//! Teacher-forced cross-entropy training of the next-token policy.

use super::policy::{TokenPolicyModel, TrainHyper, FEATURE_DIM};
use super::vocab::TokenVocabulary;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One teacher-forced step: raw (unstandardized) features, the previous
/// token and the ground-truth next token.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSample {
    pub features: [f64; FEATURE_DIM],
    pub prev: usize,
    pub target: usize,
}

/// A tokenized training corpus, bound to the vocabulary it was built with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingCorpus {
    pub vocab_hash: String,
    pub samples: Vec<TrainSample>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.5,
            batch_size: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("corpus vocabulary hash {corpus} does not match vocabulary {vocab}")]
    VocabularyMismatch { corpus: String, vocab: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("sample references token {0} outside vocabulary of size {1}")]
    TokenOutOfRange(usize, usize),
}

/// Mean cross-entropy of the model over a sample set, in nats.
pub fn cross_entropy(model: &TokenPolicyModel, samples: &[TrainSample]) -> f64 {
    let mut total = 0.0;
    for s in samples {
        let logits = model.logits_from_raw(&s.features, s.prev);
        total += log_sum_exp(&logits) - logits[s.target];
    }
    total / samples.len() as f64
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Train a fresh model on the corpus with mini-batch gradient descent and
/// seeded shuffling. Returns the model plus the loss curve: entry `k` is
/// the full-corpus cross-entropy after `k` epochs, so entry 0 is the
/// zero-initialized (uniform) loss `ln V`.
pub fn train(
    corpus: &TrainingCorpus,
    vocab: &TokenVocabulary,
    cfg: &TrainConfig,
) -> Result<(TokenPolicyModel, Vec<f64>), TrainError> {
    if corpus.vocab_hash != vocab.content_hash() {
        return Err(TrainError::VocabularyMismatch {
            corpus: corpus.vocab_hash.clone(),
            vocab: vocab.content_hash(),
        });
    }
    if corpus.samples.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let v = vocab.size();
    for s in &corpus.samples {
        if s.prev >= v || s.target >= v {
            return Err(TrainError::TokenOutOfRange(s.prev.max(s.target), v));
        }
    }

    let mut model = TokenPolicyModel::zeros(v);
    model.hyper = TrainHyper {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
    };
    // Standardization constants fitted on the corpus and frozen.
    let n = corpus.samples.len() as f64;
    for d in 0..FEATURE_DIM {
        let mean = corpus.samples.iter().map(|s| s.features[d]).sum::<f64>() / n;
        let var = corpus
            .samples
            .iter()
            .map(|s| (s.features[d] - mean).powi(2))
            .sum::<f64>()
            / n;
        model.feature_mean[d] = mean;
        model.feature_scale[d] = var.sqrt().max(1e-6);
    }

    let mut curve = Vec::with_capacity(cfg.epochs + 1);
    curve.push(cross_entropy(&model, &corpus.samples));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.samples.len()).collect();
    let batch = cfg.batch_size.max(1);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let scale = cfg.learning_rate / chunk.len() as f64;
            // Accumulate softmax gradients over the mini-batch.
            let mut grad_bias = vec![0.0f64; v];
            let mut grad_w = vec![[0.0f64; FEATURE_DIM]; v];
            let mut grad_bigram: Vec<(usize, Vec<f64>)> = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let s = &corpus.samples[i];
                let x = model.standardize(&s.features);
                let logits = model.logits_from_raw(&s.features, s.prev);
                let lse = log_sum_exp(&logits);
                let mut g = vec![0.0f64; v];
                for k in 0..v {
                    g[k] = (logits[k] - lse).exp();
                }
                g[s.target] -= 1.0;
                for k in 0..v {
                    grad_bias[k] += g[k];
                    for d in 0..FEATURE_DIM {
                        grad_w[k][d] += g[k] * x[d];
                    }
                }
                grad_bigram.push((s.prev, g));
            }
            for k in 0..v {
                model.bias[k] -= scale * grad_bias[k];
                for d in 0..FEATURE_DIM {
                    model.weights[k][d] -= scale * grad_w[k][d];
                }
            }
            for (prev, g) in grad_bigram {
                for k in 0..v {
                    model.bigram[prev][k] -= scale * g[k];
                }
            }
        }
        curve.push(cross_entropy(&model, &corpus.samples));
    }
    Ok((model, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::vocab::{MotionSegment, TokenVocabulary};

    fn vocab(n: usize) -> TokenVocabulary {
        TokenVocabulary::from_segments(
            (0..n)
                .map(|i| MotionSegment::new(i as f64, 0.0, 0.0))
                .collect(),
        )
    }

    fn flat_features(speed: f64) -> [f64; FEATURE_DIM] {
        [speed, 0.0, 0.0, 0.0, 0.0, 50.0, 0.0, 50.0, 50.0]
    }

    #[test]
    fn zero_model_loss_is_ln_v() {
        let v = vocab(8);
        let corpus = TrainingCorpus {
            vocab_hash: v.content_hash(),
            samples: (0..100)
                .map(|i| TrainSample {
                    features: flat_features(5.0 + (i % 3) as f64),
                    prev: i % 8,
                    target: (i + 1) % 8,
                })
                .collect(),
        };
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (_, curve) = train(&corpus, &v, &cfg).unwrap();
        assert!((curve[0] - (8.0f64).ln()).abs() < 1e-6);
    }

    #[test]
    fn deterministic_transition_is_learned_quickly() {
        // A single repeated transition: prev 3 -> target 3. The bigram
        // bias alone can represent this exactly.
        let v = vocab(8);
        let corpus = TrainingCorpus {
            vocab_hash: v.content_hash(),
            samples: (0..256)
                .map(|_| TrainSample {
                    features: flat_features(6.0),
                    prev: 3,
                    target: 3,
                })
                .collect(),
        };
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 0.5,
            batch_size: 64,
            seed: 1,
        };
        let (model, curve) = train(&corpus, &v, &cfg).unwrap();
        assert!(
            *curve.last().unwrap() < 0.05,
            "final loss {} not < 0.05",
            curve.last().unwrap()
        );
        assert!(model.is_finite());
    }

    #[test]
    fn loss_curve_is_non_increasing_within_band() {
        let v = vocab(6);
        let samples: Vec<TrainSample> = (0..400)
            .map(|i| TrainSample {
                features: flat_features((i % 5) as f64 * 2.0),
                prev: i % 6,
                target: (i * 7 + 1) % 6,
            })
            .collect();
        let corpus = TrainingCorpus {
            vocab_hash: v.content_hash(),
            samples,
        };
        let cfg = TrainConfig {
            epochs: 25,
            learning_rate: 0.3,
            batch_size: 64,
            seed: 9,
        };
        let (_, curve) = train(&corpus, &v, &cfg).unwrap();
        for w in curve.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-3,
                "loss increased beyond band: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn trained_loss_never_worse_than_uniform() {
        let v = vocab(6);
        let samples: Vec<TrainSample> = (0..300)
            .map(|i| TrainSample {
                features: flat_features((i % 4) as f64),
                prev: i % 6,
                target: (i * 5 + 2) % 6,
            })
            .collect();
        let corpus = TrainingCorpus {
            vocab_hash: v.content_hash(),
            samples,
        };
        let (model, _) = train(&corpus, &v, &TrainConfig::default()).unwrap();
        assert!(cross_entropy(&model, &corpus.samples) <= (6.0f64).ln() + 1e-9);
    }

    #[test]
    fn vocabulary_mismatch_is_rejected() {
        let v = vocab(6);
        let corpus = TrainingCorpus {
            vocab_hash: "deadbeef".into(),
            samples: vec![TrainSample {
                features: flat_features(1.0),
                prev: 0,
                target: 0,
            }],
        };
        assert!(matches!(
            train(&corpus, &v, &TrainConfig::default()),
            Err(TrainError::VocabularyMismatch { .. })
        ));
    }
}
