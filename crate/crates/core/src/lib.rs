//! Dyadic weights, their Reverse Hölder / Muckenhoupt / doubling
//! characteristics, and an explicit Bellman-function upper bound for
//! `<w^q>` over dyadically doubling Reverse Hölder weights, together with
//! numerical checks of the bound and of the concavity facts behind it.

pub mod bellman;
pub mod characteristics;
pub mod dyadic;
pub mod error;
pub mod search;
pub mod verifier;
pub mod weight_io;

pub use bellman::{
    b_max, b_max_gradient, corollary_constant, corollary_threshold, in_omega, make_params, r_minus,
    u_branch, BellmanParams, BoundValue, Branch, CorollaryVariant, DomainPoint,
};
pub use characteristics::{
    aq_characteristic, doubling_constant, profile, rh_characteristic, WeightProfile,
};
pub use dyadic::{node_pair, power_averages, AverageTable, DyadicWeight, NodeIndex};
pub use error::{Error, Result};
pub use search::{local_search, multi_start, sample_weight, SearchConfig, SearchResult};
pub use verifier::{
    hessian_scan, induction_chain, segment_containment, verify_corollary, verify_theorem,
    VerificationReport,
};
