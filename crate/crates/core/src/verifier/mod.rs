//! Numerical checks of the bound and of the facts it rests on: the bound
//! itself on every node of a weight, the Muckenhoupt corollary, the
//! telescoping induction over dyadic levels, local concavity, midpoint
//! concavity, and containment of admissible segments in the enlarged domain.
//!
//! Randomized checks are reproducible: trial `i` draws from its own
//! [`GENERATOR`] stream seeded with `seed + i`.

mod concavity;
mod report;
mod theorem;
mod triples;

pub use concavity::{
    extremal_segment, hessian_at, hessian_scan, hessian_scan_with, midpoint_concavity,
    midpoint_slack, segment_containment, strip_grid, symmetric_eigenvalues, ExtremalOutcome,
    HessianOptions, HessianSample,
};
pub use report::{Detail, Location, VerificationReport};
pub use theorem::{induction_chain, level_sums, measured_params, verify_corollary, verify_theorem};
pub use triples::{Triple, TripleSampler, MAX_REJECTIONS};

pub const GENERATOR: &str = "ChaCha8 (rand_chacha, seed_from_u64)";

/// Relative slack allowed for `<w^q>_I <= B` at each node.
pub const THEOREM_TOL: f64 = 1e-9;
/// Relative to the corollary constant.
pub const COROLLARY_TOL: f64 = 1e-9;
/// Largest Hessian eigenvalue allowed, relative to `|B|`.
pub const HESSIAN_TOL: f64 = 1e-6;
pub const MIDPOINT_TOL: f64 = 1e-9;
/// Relative to `eps`.
pub const SEGMENT_TOL: f64 = 1e-9;
/// Rounding allowance for each `S(n) - S(n+1)`, relative to `S(0)`.
pub const CHAIN_MONOTONE_TOL: f64 = 1e-12;
pub const CHAIN_TERMINAL_TOL: f64 = 1e-9;
/// Points checked along each segment.
pub const SEGMENT_POINTS: usize = 64;
/// Floor for a measured RH characteristic: a constant weight measures
/// exactly 1, and any larger value gives a valid (weaker) class bound.
pub const MIN_MEASURED_DELTA: f64 = 1.0 + 1e-9;
