use thiserror::Error;

use crate::dyadic::NodeIndex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("weight has no leaves")]
    EmptyWeight,

    #[error("leaf count {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("leaf {index} is not finite ({value})")]
    NonFiniteLeaf { index: usize, value: f64 },

    #[error("leaf {index} is not strictly positive ({value})")]
    NonPositiveLeaf { index: usize, value: f64 },

    #[error("depth field {declared} does not match {leaves} leaves")]
    DepthMismatch { declared: u32, leaves: usize },

    #[error("malformed weight file: {0}")]
    MalformedWeightFile(String),

    #[error("node (level {}, offset {}) is outside a depth-{depth} tree", node.level, node.offset)]
    NodeOutOfRange { node: NodeIndex, depth: u32 },

    #[error("{name} = {value} is outside its domain: {expected}")]
    Parameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("t = {0} is outside (0, 1]")]
    TOutOfRange(f64),

    #[error("t = {0} is below solver range (negative branch exceeds the bracket floor)")]
    BelowSolverRange(f64),

    #[error("root solve for t = {t} did not reach residual tolerance (residual {residual:e})")]
    SolverResidual { t: f64, residual: f64 },

    #[error("point ({x1}, {x2}) lies outside the domain with bound {bound}")]
    OutsideDomain { x1: f64, x2: f64, bound: f64 },

    #[error("q = {q} is outside the admissible interval ({lower}, {upper})")]
    QOutOfRange { q: f64, lower: f64, upper: f64 },

    #[error("the two forms of the bound disagree at ({x1}, {x2}): {form1} vs {form2}")]
    FormMismatch {
        x1: f64,
        x2: f64,
        form1: f64,
        form2: f64,
    },

    #[error("corollary index {q_muck} must exceed the threshold {threshold}")]
    BelowCorollaryThreshold { q_muck: f64, threshold: f64 },

    #[error("node (level {}, offset {}) maps outside the enlarged domain", node.level, node.offset)]
    NodeOutsideDomain { node: NodeIndex },

    #[error("grid is degenerate: {0}")]
    DegenerateGrid(&'static str),

    #[error("sampler gave up after {0} consecutive rejections")]
    SamplerExhausted(usize),

    #[error("measured ratio {ratio} exceeds the bound")]
    BoundExceeded { ratio: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_param(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value,
            expected,
        })
    }
}
