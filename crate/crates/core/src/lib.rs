//! Deterministic object-level closed-loop driving simulation and planner
//! benchmarking.
//!
//! The library is organized around a small number of building blocks:
//!
//! * [`geom`] / [`map`] / [`scenario`] — planar geometry, lane graphs and
//!   the scenario types shared by everything else.
//! * [`idm`] / [`mobil`] — rule-based background traffic primitives.
//! * [`token`] — the tokenized learned traffic agent: motion-token
//!   vocabulary, tokenizer, categorical next-token policy and training.
//! * [`engine`] — the closed-loop stepping engine (10 Hz plan/track loop
//!   with swappable background models).
//! * [`planners`] — the planner plugin trait and the reference planners.
//! * [`metrics`] — per-scenario driving metrics, the composite closed-loop
//!   score, realism metrics and benchmark aggregation.
//! * [`io`] / [`generate`] / [`augment`] / [`runner`] / [`svg`] — scenario
//!   files, synthetic suite generators, density augmentation, the benchmark
//!   runner and snapshot rendering.

pub mod augment;
pub mod engine;
pub mod generate;
pub mod geom;
pub mod idm;
pub mod io;
pub mod map;
pub mod metrics;
pub mod mobil;
pub mod planners;
pub mod runner;
pub mod scenario;
pub mod svg;
pub mod token;

pub use geom::{OrientedRect, Pose2D, Vec2};
pub use map::{Lane, LaneGraph, LaneId, Route};
pub use scenario::{AgentId, AgentKind, AgentState, Scenario};

/// FNV-1a 64-bit hash. Used for stable content fingerprints and
/// per-rollout seed derivation; deliberately not `DefaultHasher`, whose
/// output is unspecified across releases.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives an independent sub-seed from a master seed and a set of labels.
/// Rollouts seeded this way are reproducible regardless of execution order.
pub fn derive_seed(master: u64, labels: &[&str]) -> u64 {
    let mut buf = master.to_le_bytes().to_vec();
    for l in labels {
        buf.push(0x1f);
        buf.extend_from_slice(l.as_bytes());
    }
    stable_hash(&buf)
}
