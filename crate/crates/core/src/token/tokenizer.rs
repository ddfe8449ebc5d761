//! Trajectory tokenization and 2 Hz -> 10 Hz upsampling.

use super::vocab::{MotionSegment, MotionToken, TokenVocabulary};
use crate::geom::{normalize_angle, Pose2D};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TokenizeError {
    #[error("trajectory length {0} is not a positive multiple of 5 samples")]
    BadLength(usize),
    #[error("noise_top_k must be >= 1")]
    BadTopK,
}

/// Advance a pose by one motion token: the displacement is applied in the
/// pose's own frame, the heading change added directly.
pub fn apply_token(start: Pose2D, token: &MotionToken) -> Pose2D {
    start.compose(token.dx, token.dy, token.dheading)
}

/// Tokenize a 10 Hz future into 2 Hz motion tokens.
///
/// `future` holds the poses after `start` at 0.1 s spacing; its length must
/// be a multiple of 5 (one token per 0.5 s block). For every block the
/// ground-truth block displacement is expressed in the current rollout
/// frame, the nearest token is chosen (or, with `noise_top_k > 1`, a
/// seeded-uniform pick among the top-k nearest), and the rollout state
/// advances by the chosen token before matching continues.
pub fn tokenize_trajectory(
    start: Pose2D,
    future: &[Pose2D],
    vocab: &TokenVocabulary,
    noise_top_k: usize,
    seed: u64,
) -> Result<Vec<usize>, TokenizeError> {
    if noise_top_k == 0 {
        return Err(TokenizeError::BadTopK);
    }
    if future.is_empty() || future.len() % 5 != 0 {
        return Err(TokenizeError::BadLength(future.len()));
    }
    let blocks = future.len() / 5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rollout = start;
    let mut gt_prev = start;
    let mut out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let gt_next = future[b * 5 + 4];
        let delta_world = gt_next.position() - gt_prev.position();
        let local = delta_world.rotated(-rollout.heading);
        let seg = MotionSegment::new(
            local.x,
            local.y,
            normalize_angle(gt_next.heading - gt_prev.heading),
        );
        let token = if noise_top_k == 1 {
            vocab.nearest(&seg)
        } else {
            let candidates = vocab.k_nearest(&seg, noise_top_k);
            candidates[rng.random_range(0..candidates.len())]
        };
        rollout = apply_token(rollout, vocab.token(token));
        gt_prev = gt_next;
        out.push(token);
    }
    Ok(out)
}

/// Replay a token sequence from a start pose; returns the pose after each
/// token (the 2 Hz block endpoints).
pub fn reconstruct_endpoints(
    start: Pose2D,
    tokens: &[usize],
    vocab: &TokenVocabulary,
) -> Vec<Pose2D> {
    let mut pose = start;
    tokens
        .iter()
        .map(|&t| {
            pose = apply_token(pose, vocab.token(t));
            pose
        })
        .collect()
}

/// Upsample one 0.5 s token into five 0.1 s pose samples: linear
/// interpolation of the displacement in the start frame and of the heading
/// change. The final sample lands exactly on the token endpoint.
pub fn upsample_token(start: Pose2D, token: &MotionToken) -> [Pose2D; 5] {
    std::array::from_fn(|i| {
        let f = (i + 1) as f64 / 5.0;
        start.compose(token.dx * f, token.dy * f, token.dheading * f)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::vocab::build_vocabulary;
    use approx::assert_relative_eq;

    fn two_token_vocab() -> TokenVocabulary {
        TokenVocabulary::from_segments(vec![
            MotionSegment::zero(),
            MotionSegment::new(5.0, 0.0, 0.0),
        ])
    }

    fn straight_future(step_per_sample: f64, samples: usize) -> Vec<Pose2D> {
        (1..=samples)
            .map(|k| Pose2D::new(step_per_sample * k as f64, 0.0, 0.0))
            .collect()
    }

    #[test]
    fn stationary_trajectory_is_all_zero_tokens() {
        let vocab = two_token_vocab();
        let future = vec![Pose2D::new(0.0, 0.0, 0.0); 30];
        let tokens =
            tokenize_trajectory(Pose2D::new(0.0, 0.0, 0.0), &future, &vocab, 1, 0).unwrap();
        assert!(tokens.iter().all(|&t| t == 0));
        // Perfect reconstruction.
        let ends = reconstruct_endpoints(Pose2D::new(0.0, 0.0, 0.0), &tokens, &vocab);
        for p in ends {
            assert_relative_eq!(p.x, 0.0);
            assert_relative_eq!(p.y, 0.0);
        }
    }

    #[test]
    fn straight_blocks_nearest_neighbor() {
        // 2.6 m per 0.5 s block: every block displacement is 2.6 m, which
        // is closer to the 5 m token than to the zero token.
        let vocab = two_token_vocab();
        let future = straight_future(0.52, 30);
        let tokens =
            tokenize_trajectory(Pose2D::new(0.0, 0.0, 0.0), &future, &vocab, 1, 0).unwrap();
        assert_eq!(tokens.len(), 6);
        assert!(tokens.iter().all(|&t| t == 1), "tokens: {tokens:?}");
    }

    #[test]
    fn noisy_tokenization_is_seed_reproducible() {
        let corpus: Vec<MotionSegment> = (0..100)
            .map(|i| MotionSegment::new((i % 11) as f64 * 0.5, ((i % 3) as f64 - 1.0) * 0.2, 0.0))
            .collect();
        let vocab = build_vocabulary(&corpus, 8, 5).unwrap();
        let future = straight_future(0.45, 40);
        let a = tokenize_trajectory(Pose2D::new(0.0, 0.0, 0.0), &future, &vocab, 6, 77).unwrap();
        let b = tokenize_trajectory(Pose2D::new(0.0, 0.0, 0.0), &future, &vocab, 6, 77).unwrap();
        assert_eq!(a, b);
        let c = tokenize_trajectory(Pose2D::new(0.0, 0.0, 0.0), &future, &vocab, 6, 78).unwrap();
        // Different seed is allowed to differ; it must still be valid.
        assert_eq!(c.len(), a.len());
    }

    #[test]
    fn rejects_non_multiple_of_five() {
        let vocab = two_token_vocab();
        let future = straight_future(0.5, 7);
        assert!(matches!(
            tokenize_trajectory(Pose2D::new(0.0, 0.0, 0.0), &future, &vocab, 1, 0),
            Err(TokenizeError::BadLength(7))
        ));
    }

    #[test]
    fn zero_token_upsamples_to_identical_poses() {
        let vocab = two_token_vocab();
        let start = Pose2D::new(3.0, 4.0, 1.0);
        for p in upsample_token(start, vocab.token(0)) {
            assert_relative_eq!(p.x, 3.0);
            assert_relative_eq!(p.y, 4.0);
            assert_relative_eq!(p.heading, 1.0);
        }
    }

    #[test]
    fn straight_token_upsamples_linearly() {
        let vocab = two_token_vocab();
        let start = Pose2D::new(0.0, 0.0, 0.0);
        let samples = upsample_token(start, vocab.token(1));
        for (i, p) in samples.iter().enumerate() {
            assert_relative_eq!(p.x, (i + 1) as f64, epsilon = 1e-12);
            assert_relative_eq!(p.y, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn upsample_endpoint_matches_frame_composition_oracle() {
        // Token (3, 1, 0.2) from heading pi/2: endpoint via explicit
        // rotation-matrix composition.
        let token = MotionToken {
            index: 0,
            dx: 3.0,
            dy: 1.0,
            dheading: 0.2,
        };
        let h = std::f64::consts::FRAC_PI_2;
        let start = Pose2D::new(1.0, 2.0, h);
        let samples = upsample_token(start, &token);
        let end = samples[4];
        let ox = 1.0 + 3.0 * h.cos() - 1.0 * h.sin();
        let oy = 2.0 + 3.0 * h.sin() + 1.0 * h.cos();
        assert_relative_eq!(end.x, ox, epsilon = 1e-9);
        assert_relative_eq!(end.y, oy, epsilon = 1e-9);
        assert_relative_eq!(end.heading, h + 0.2, epsilon = 1e-12);
        // Intermediate headings interpolate linearly.
        assert_relative_eq!(samples[1].heading, h + 0.08, epsilon = 1e-12);
    }
}
