//! Motion-token vocabulary: k-means over 0.5 s agent-frame motion segments.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Duration one token spans.
pub const TOKEN_DT: f64 = 0.5;
/// Weight applied to the heading component of the token metric [m/rad].
pub const HEADING_WEIGHT: f64 = 5.0;
/// K-means iteration budget.
const KMEANS_ITERS: usize = 50;

/// A 0.5 s relative motion: forward/left displacement in the agent frame
/// plus heading change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionSegment {
    pub dx: f64,
    pub dy: f64,
    pub dheading: f64,
}

impl MotionSegment {
    pub fn new(dx: f64, dy: f64, dheading: f64) -> Self {
        Self { dx, dy, dheading }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    fn embed(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dheading * HEADING_WEIGHT]
    }
}

/// One vocabulary entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionToken {
    pub index: usize,
    pub dx: f64,
    pub dy: f64,
    pub dheading: f64,
}

impl MotionToken {
    pub fn segment(&self) -> MotionSegment {
        MotionSegment::new(self.dx, self.dy, self.dheading)
    }
}

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("corpus has {0} distinct segments, need at least {1}")]
    CorpusTooSmall(usize, usize),
    #[error("vocabulary size must be >= 1")]
    BadSize,
}

/// Fixed action vocabulary of motion tokens. Tokens are sorted by weighted
/// magnitude, so index 0 is always the zero-motion token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenVocabulary {
    tokens: Vec<MotionToken>,
    pub token_dt: f64,
}

/// Centroids closer than this (weighted metric) to the origin collapse
/// onto the exact zero-motion token, so a standstill never splits between
/// an epsilon-motion centroid and the canonical zero.
const ZERO_SNAP_RADIUS: f64 = 0.05;

impl TokenVocabulary {
    pub fn from_segments(segments: Vec<MotionSegment>) -> Self {
        let mut segs = segments;
        for s in segs.iter_mut() {
            if weighted_dist2(&s.embed(), &MotionSegment::zero().embed())
                < ZERO_SNAP_RADIUS * ZERO_SNAP_RADIUS
            {
                *s = MotionSegment::zero();
            }
        }
        // Ensure a zero-motion token exists.
        if !segs
            .iter()
            .any(|s| weighted_dist2(&s.embed(), &MotionSegment::zero().embed()) < 1e-18)
        {
            segs.push(MotionSegment::zero());
        }
        // Deduplicate exact triples.
        segs.sort_by(|a, b| {
            let ka = (norm2(&a.embed()), a.dx, a.dy, a.dheading);
            let kb = (norm2(&b.embed()), b.dx, b.dy, b.dheading);
            ka.partial_cmp(&kb).unwrap()
        });
        segs.dedup_by(|a, b| a.dx == b.dx && a.dy == b.dy && a.dheading == b.dheading);
        let tokens = segs
            .into_iter()
            .enumerate()
            .map(|(index, s)| MotionToken {
                index,
                dx: s.dx,
                dy: s.dy,
                dheading: s.dheading,
            })
            .collect();
        Self {
            tokens,
            token_dt: TOKEN_DT,
        }
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[MotionToken] {
        &self.tokens
    }

    pub fn token(&self, index: usize) -> &MotionToken {
        &self.tokens[index]
    }

    /// Index of the zero-motion token (index 0 by the sort invariant, but
    /// computed defensively).
    pub fn zero_token(&self) -> usize {
        self.nearest(&MotionSegment::zero())
    }

    /// Nearest token under the weighted metric; ties go to the lowest index.
    pub fn nearest(&self, seg: &MotionSegment) -> usize {
        let q = seg.embed();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for t in &self.tokens {
            let d = weighted_dist2(&t.segment().embed(), &q);
            if d < best_d {
                best_d = d;
                best = t.index;
            }
        }
        best
    }

    /// Indices of the `k` nearest tokens, closest first; ties by index.
    pub fn k_nearest(&self, seg: &MotionSegment, k: usize) -> Vec<usize> {
        let q = seg.embed();
        let mut scored: Vec<(f64, usize)> = self
            .tokens
            .iter()
            .map(|t| (weighted_dist2(&t.segment().embed(), &q), t.index))
            .collect();
        scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
        scored.into_iter().take(k).map(|(_, i)| i).collect()
    }

    /// Distance (weighted, in meters) from a segment to its nearest token.
    pub fn quantization_residual(&self, seg: &MotionSegment) -> f64 {
        let idx = self.nearest(seg);
        weighted_dist2(&self.tokens[idx].segment().embed(), &seg.embed()).sqrt()
    }

    /// Stable content fingerprint, embedded in model files so that a model
    /// can refuse to load against the wrong vocabulary.
    pub fn content_hash(&self) -> String {
        let mut bytes = Vec::with_capacity(self.tokens.len() * 24 + 8);
        bytes.extend_from_slice(&self.token_dt.to_bits().to_le_bytes());
        for t in &self.tokens {
            bytes.extend_from_slice(&t.dx.to_bits().to_le_bytes());
            bytes.extend_from_slice(&t.dy.to_bits().to_le_bytes());
            bytes.extend_from_slice(&t.dheading.to_bits().to_le_bytes());
        }
        format!("{:016x}", crate::stable_hash(&bytes))
    }
}

fn weighted_dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dh = a[2] - b[2];
    dx * dx + dy * dy + dh * dh
}

fn norm2(a: &[f64; 3]) -> f64 {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

/// Quantization error (mean squared weighted distance to the nearest
/// centroid) of a vocabulary over a corpus.
pub fn quantization_error(vocab: &TokenVocabulary, corpus: &[MotionSegment]) -> f64 {
    if corpus.is_empty() {
        return 0.0;
    }
    corpus
        .iter()
        .map(|s| {
            let i = vocab.nearest(s);
            weighted_dist2(&vocab.token(i).segment().embed(), &s.embed())
        })
        .sum::<f64>()
        / corpus.len() as f64
}

/// Build a vocabulary of (at least) `v` tokens from a corpus of motion
/// segments: seeded k-means++ with 50 Lloyd iterations in the weighted
/// embedding space, a zero-motion token appended when k-means produced
/// none. The corpus must contain at least `v` distinct segments.
pub fn build_vocabulary(
    corpus: &[MotionSegment],
    v: usize,
    seed: u64,
) -> Result<TokenVocabulary, VocabError> {
    if v == 0 {
        return Err(VocabError::BadSize);
    }
    let mut distinct: Vec<[f64; 3]> = corpus.iter().map(|s| s.embed()).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < v {
        return Err(VocabError::CorpusTooSmall(distinct.len(), v));
    }

    let points: Vec<[f64; 3]> = corpus.iter().map(|s| s.embed()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(&points, v, &mut rng);

    let mut assignment = vec![0usize; points.len()];
    for _ in 0..KMEANS_ITERS {
        // Assign.
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, cen) in centroids.iter().enumerate() {
                let d = weighted_dist2(p, cen);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assignment[i] = best;
        }
        // Update.
        let mut sums = vec![[0.0f64; 3]; v];
        let mut counts = vec![0usize; v];
        for (i, p) in points.iter().enumerate() {
            let c = assignment[i];
            for k in 0..3 {
                sums[c][k] += p[k];
            }
            counts[c] += 1;
        }
        let mut moved = 0.0f64;
        for c in 0..v {
            if counts[c] > 0 {
                let new = [
                    sums[c][0] / counts[c] as f64,
                    sums[c][1] / counts[c] as f64,
                    sums[c][2] / counts[c] as f64,
                ];
                moved = moved.max(weighted_dist2(&new, &centroids[c]));
                centroids[c] = new;
            } else {
                // Empty cluster: re-seed at the point farthest from its
                // nearest centroid (deterministic).
                let far = farthest_point(&points, &centroids);
                centroids[c] = points[far];
                moved = f64::INFINITY;
            }
        }
        if moved < 1e-18 {
            break;
        }
    }

    let segments = centroids
        .iter()
        .map(|c| MotionSegment::new(c[0], c[1], c[2] / HEADING_WEIGHT))
        .collect();
    Ok(TokenVocabulary::from_segments(segments))
}

fn kmeans_pp_init(points: &[[f64; 3]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let n = points.len();
    let mut centroids: Vec<[f64; 3]> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut dist = vec![f64::INFINITY; n];
    while centroids.len() < k {
        let last = centroids.last().unwrap();
        let mut sum = 0.0;
        for i in 0..n {
            dist[i] = dist[i].min(weighted_dist2(&points[i], last));
            sum += dist[i];
        }
        let pick = if sum <= 0.0 {
            // All mass on existing centroids; take the first non-duplicate.
            farthest_point(points, &centroids)
        } else {
            let threshold = rng.random::<f64>() * sum;
            let mut acc = 0.0;
            let mut sel = n - 1;
            for i in 0..n {
                acc += dist[i];
                if acc >= threshold {
                    sel = i;
                    break;
                }
            }
            sel
        };
        centroids.push(points[pick]);
    }
    centroids
}

fn farthest_point(points: &[[f64; 3]], centroids: &[[f64; 3]]) -> usize {
    let mut best = 0;
    let mut best_d = -1.0;
    for (i, p) in points.iter().enumerate() {
        let d = centroids
            .iter()
            .map(|c| weighted_dist2(p, c))
            .fold(f64::INFINITY, f64::min);
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn all_zero_corpus_gives_single_zero_token() {
        let corpus = vec![MotionSegment::zero(); 32];
        let v = build_vocabulary(&corpus, 1, 7).unwrap();
        assert_eq!(v.size(), 1);
        assert_relative_eq!(v.token(0).dx, 0.0);
        assert_relative_eq!(v.token(0).dy, 0.0);
        assert_relative_eq!(v.token(0).dheading, 0.0);
    }

    #[test]
    fn two_point_corpus_recovers_both_centroids() {
        let mut corpus = vec![MotionSegment::zero(); 50];
        corpus.extend(vec![MotionSegment::new(5.0, 0.0, 0.0); 50]);
        let v = build_vocabulary(&corpus, 2, 3).unwrap();
        assert_eq!(v.size(), 2);
        assert_relative_eq!(v.token(0).dx, 0.0, epsilon = 1e-9);
        assert_relative_eq!(v.token(1).dx, 5.0, epsilon = 1e-9);
        assert_relative_eq!(v.token(1).dy, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_token_appended_and_sorted_first() {
        let corpus: Vec<MotionSegment> = (1..=40)
            .map(|i| MotionSegment::new(2.0 + i as f64 * 0.1, 0.0, 0.0))
            .collect();
        let v = build_vocabulary(&corpus, 4, 11).unwrap();
        // k-means centroids are all > 2 m, so the zero token is appended.
        assert_eq!(v.size(), 5);
        assert_eq!(v.zero_token(), 0);
        assert_relative_eq!(v.token(0).dx, 0.0);
    }

    #[test]
    fn corpus_too_small_is_an_error() {
        let corpus = vec![MotionSegment::zero(), MotionSegment::new(1.0, 0.0, 0.0)];
        assert!(matches!(
            build_vocabulary(&corpus, 8, 0),
            Err(VocabError::CorpusTooSmall(2, 8))
        ));
    }

    #[test]
    fn build_is_deterministic_for_fixed_seed() {
        let corpus: Vec<MotionSegment> = (0..200)
            .map(|i| {
                MotionSegment::new(
                    (i % 13) as f64 * 0.5,
                    ((i % 7) as f64 - 3.0) * 0.1,
                    ((i % 5) as f64 - 2.0) * 0.02,
                )
            })
            .collect();
        let a = build_vocabulary(&corpus, 8, 42).unwrap();
        let b = build_vocabulary(&corpus, 8, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn quantization_error_close_to_restart_oracle() {
        // Independent k-means with 20 random restarts as the oracle.
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut corpus = Vec::new();
        for _ in 0..300 {
            corpus.push(MotionSegment::new(
                rng.random_range(0.0..6.0),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.1..0.1),
            ));
        }
        let v = build_vocabulary(&corpus, 8, 1).unwrap();
        let ours = quantization_error(&v, &corpus);

        let mut oracle_best = f64::INFINITY;
        let points: Vec<[f64; 3]> = corpus.iter().map(|s| s.embed()).collect();
        for restart in 0..20 {
            let mut orng = ChaCha8Rng::seed_from_u64(1000 + restart);
            // Plain Lloyd's with uniform random init.
            let mut cents: Vec<[f64; 3]> =
                (0..8).map(|_| points[orng.random_range(0..points.len())]).collect();
            for _ in 0..100 {
                let mut sums = vec![[0.0; 3]; 8];
                let mut counts = vec![0usize; 8];
                for p in &points {
                    let mut best = 0;
                    let mut bd = f64::INFINITY;
                    for (c, cen) in cents.iter().enumerate() {
                        let d = weighted_dist2(p, cen);
                        if d < bd {
                            bd = d;
                            best = c;
                        }
                    }
                    for k in 0..3 {
                        sums[best][k] += p[k];
                    }
                    counts[best] += 1;
                }
                for c in 0..8 {
                    if counts[c] > 0 {
                        for k in 0..3 {
                            cents[c][k] = sums[c][k] / counts[c] as f64;
                        }
                    }
                }
            }
            let err = points
                .iter()
                .map(|p| {
                    cents
                        .iter()
                        .map(|c| weighted_dist2(p, c))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum::<f64>()
                / points.len() as f64;
            oracle_best = oracle_best.min(err);
        }
        assert!(
            ours <= oracle_best * 1.05 + 1e-12,
            "quantization error {ours} exceeds oracle {oracle_best} + 5%"
        );
    }
}
