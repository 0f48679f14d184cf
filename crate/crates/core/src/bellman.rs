//! The explicit upper Bellman function and its constants.
//!
//! Everything here is built on the two solution branches `u±(t)` of
//!
//! ```text
//! (1 - p u)^{1/p} / (1 - u) = t,     0 < t <= 1.
//! ```
//!
//! The left-hand side equals 1 at `u = 0`, decreases to 0 on `[0, 1/p]` and
//! increases from 0 (as `u -> -inf`) to 1 on `(-inf, 0]`, so each branch is
//! the root of a strictly monotone function on a known bracket.
//!
//! Given `p > 1`, `delta > 1` and a doubling bound `Q >= 2`:
//!
//! ```text
//! H   = (Q^p - 1) / (Q - 1)
//! eps = (H / p) ((p - 1) / (H - 1))^{(p-1)/p} delta
//! s±  = u±(1 / eps)
//! r-  = u-(x2^{1/p} / (eps x1))
//! B(x1, x2) = x1^q (1 - q r-) / (1 - q s-) ((1 - s-) / (1 - r-))^q
//!           = x2^{q/p} (1 - q r-) / (1 - q s-) ((1 - p s-) / (1 - p r-))^{q/p}
//! ```
//!
//! for `q` in `(1/s-, 0)` and `(x1, x2)` in
//! `Omega_eps = { x1^p <= x2 <= eps^p x1^p }`.

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};

/// Relative slack used by every domain-membership test.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Relative agreement required between the two closed forms of the bound.
pub const FORM_AGREEMENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Step tolerance, scaled by `max(1, |u|)`.
    pub abs_tol: f64,
    /// Required `|lhs(u) - t| / max(1, t)` at the returned root, unless the
    /// lhs is too steep there for any double to do better.
    pub residual_tol: f64,
    /// Lowest value the negative-branch bracket may reach.
    pub floor: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            residual_tol: 1e-12,
            floor: -1e12,
            max_iter: 400,
        }
    }
}

/// `(1 - p u)^{1/p} / (1 - u)`, defined for `u <= 1/p`.
pub fn implicit_lhs(u: f64, p: f64) -> f64 {
    (1.0 - p * u).max(0.0).powf(1.0 / p) / (1.0 - u)
}

/// d/du of [`implicit_lhs`].
fn implicit_lhs_derivative(u: f64, p: f64, value: f64) -> f64 {
    value * u * (1.0 - p) / ((1.0 - u) * (1.0 - p * u))
}

pub fn u_branch(t: f64, p: f64, branch: Branch) -> Result<f64> {
    u_branch_with(t, p, branch, &SolverOptions::default())
}

/// Solves the implicit equation on the requested branch.
///
/// `t = 0` is accepted on the positive branch only, where it maps to `1/p`.
pub fn u_branch_with(t: f64, p: f64, branch: Branch, opts: &SolverOptions) -> Result<f64> {
    check_param("p", p, p > 1.0, "p > 1")?;
    if !(t.is_finite() && (0.0..=1.0).contains(&t)) {
        return Err(Error::TOutOfRange(t));
    }
    if t == 1.0 {
        return Ok(0.0);
    }
    let u = match branch {
        Branch::Plus => {
            if t == 0.0 {
                return Ok(1.0 / p);
            }
            safeguarded_newton(t, p, 0.0, 1.0 / p, -1.0, opts)
        }
        Branch::Minus => {
            if t == 0.0 {
                return Err(Error::BelowSolverRange(t));
            }
            let mut lo = -1.0f64;
            while implicit_lhs(lo, p) > t {
                lo *= 2.0;
                if lo < opts.floor {
                    return Err(Error::BelowSolverRange(t));
                }
            }
            safeguarded_newton(t, p, lo, 0.0, 1.0, opts)
        }
    };
    let value = implicit_lhs(u, p);
    let residual = (value - t).abs();
    // near u = 1/p the lhs can jump by more than the tolerance between adjacent doubles
    let attainable = (implicit_lhs(u.next_up(), p) - value)
        .abs()
        .max((implicit_lhs(u.next_down(), p) - value).abs());
    if residual > (opts.residual_tol * t.max(1.0)).max(attainable) {
        return Err(Error::SolverResidual { t, residual });
    }
    Ok(u)
}

/// Newton iteration kept inside a shrinking bracket, falling back to
/// bisection whenever the step leaves the bracket or stalls.
/// `sign` is `+1` when the lhs increases on the bracket and `-1` otherwise.
fn safeguarded_newton(
    t: f64,
    p: f64,
    mut lo: f64,
    mut hi: f64,
    sign: f64,
    opts: &SolverOptions,
) -> f64 {
    let g = |u: f64| {
        let v = implicit_lhs(u, p);
        (sign * (v - t), sign * implicit_lhs_derivative(u, p, v))
    };
    let mut x = if hi - lo > 2.0 {
        // wide negative bracket: start from the large-|u| asymptote
        -(t / p.powf(1.0 / p)).powf(p / (1.0 - p))
    } else {
        0.5 * (lo + hi)
    };
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    let mut dx_old = hi - lo;
    let mut dx = dx_old;
    // bisection can wander off a point Newton already nailed, so keep the best
    let mut best = (f64::INFINITY, x);
    for _ in 0..opts.max_iter {
        let (gx, dgx) = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx.abs() < best.0 {
            best = (gx.abs(), x);
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - gx / dgx;
        let use_bisection = !(newton > lo && newton < hi)
            || !dgx.is_finite()
            || (2.0 * gx).abs() > (dx_old * dgx).abs();
        dx_old = dx;
        let next = if use_bisection {
            dx = 0.5 * (hi - lo);
            lo + dx
        } else {
            dx = newton - x;
            newton
        };
        let scale = next.abs().max(1.0);
        if dx.abs() <= opts.abs_tol * scale || hi - lo <= opts.abs_tol * scale {
            let (gn, _) = g(next);
            if gn.abs() < best.0 {
                best = (gn.abs(), next);
            }
            // one more Newton step: the lhs is steep near u = 1/p
            let (g_best, dg_best) = g(best.1);
            let polished = best.1 - g_best / dg_best;
            if polished.is_finite() && g(polished).0.abs() < best.0 {
                return polished;
            }
            return best.1;
        }
        x = next;
    }
    best.1
}

/// Constants derived from `(p, delta, Q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellmanParams {
    pub p: f64,
    pub delta: f64,
    pub big_q: f64,
    pub h: f64,
    pub eps: f64,
    pub s_minus: f64,
    pub s_plus: f64,
}

/// Residual bound demanded of `s±` at construction.
const PARAM_RESIDUAL: f64 = 1e-10;

pub fn make_params(p: f64, delta: f64, big_q: f64) -> Result<BellmanParams> {
    check_param("p", p, p > 1.0, "p > 1")?;
    check_param("delta", delta, delta > 1.0, "delta > 1")?;
    check_param("bigQ", big_q, big_q >= 2.0, "bigQ >= 2")?;
    let h = (big_q.powf(p) - 1.0) / (big_q - 1.0);
    let eps = (h / p) * ((p - 1.0) / (h - 1.0)).powf((p - 1.0) / p) * delta;
    assert!(h > 1.0, "H = {h} must exceed 1");
    assert!(eps > 1.0 && eps.is_finite(), "eps = {eps} must exceed 1");
    let t = 1.0 / eps;
    let s_minus = u_branch(t, p, Branch::Minus)?;
    let s_plus = u_branch(t, p, Branch::Plus)?;
    for s in [s_minus, s_plus] {
        let residual = (implicit_lhs(s, p) - t).abs();
        if residual > PARAM_RESIDUAL {
            return Err(Error::SolverResidual { t, residual });
        }
    }
    assert!(s_minus < 0.0 && s_plus > 0.0 && s_plus <= 1.0 / p);
    Ok(BellmanParams {
        p,
        delta,
        big_q,
        h,
        eps,
        s_minus,
        s_plus,
    })
}

impl BellmanParams {
    /// Open interval `(1/s-, 0)` of admissible negative exponents.
    pub fn q_interval(&self) -> (f64, f64) {
        (1.0 / self.s_minus, 0.0)
    }

    pub fn midpoint_q(&self) -> f64 {
        0.5 / self.s_minus
    }

    pub fn check_q(&self, q: f64) -> Result<()> {
        let (lower, upper) = self.q_interval();
        if q.is_finite() && q > lower && q < upper {
            Ok(())
        } else {
            Err(Error::QOutOfRange { q, lower, upper })
        }
    }
}

/// A point `(x1, x2) = (<w>, <w^p>)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainPoint {
    pub x1: f64,
    pub x2: f64,
}

impl DomainPoint {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        check_param("x1", x1, x1 > 0.0, "x1 > 0")?;
        check_param("x2", x2, x2 > 0.0, "x2 > 0")?;
        Ok(Self { x1, x2 })
    }

    /// `x2^{1/p} / x1`, the quantity bounded above by the domain constant.
    pub fn rh_ratio(&self, p: f64) -> f64 {
        self.x2.powf(1.0 / p) / self.x1
    }

    pub fn midpoint(&self, other: &DomainPoint) -> DomainPoint {
        DomainPoint {
            x1: 0.5 * (self.x1 + other.x1),
            x2: 0.5 * (self.x2 + other.x2),
        }
    }

    /// `(1 - s) self + s other`.
    pub fn lerp(&self, other: &DomainPoint, s: f64) -> DomainPoint {
        DomainPoint {
            x1: (1.0 - s) * self.x1 + s * other.x1,
            x2: (1.0 - s) * self.x2 + s * other.x2,
        }
    }
}

/// `x1^p <= x2 <= bound^p x1^p`, each side with relative slack [`DOMAIN_SLACK`].
pub fn in_omega(point: &DomainPoint, bound: f64, p: f64) -> bool {
    let lower = point.x1.powf(p);
    let upper = bound.powf(p) * lower;
    point.x2 >= lower * (1.0 - DOMAIN_SLACK) && point.x2 <= upper * (1.0 + DOMAIN_SLACK)
}

fn check_in_eps(point: &DomainPoint, params: &BellmanParams) -> Result<()> {
    if in_omega(point, params.eps, params.p) {
        Ok(())
    } else {
        Err(Error::OutsideDomain {
            x1: point.x1,
            x2: point.x2,
            bound: params.eps,
        })
    }
}

/// `u-(x2^{1/p} / (eps x1))`, clamped to `[s-, 0]` at the two boundaries.
pub fn r_minus(point: &DomainPoint, params: &BellmanParams) -> Result<f64> {
    check_in_eps(point, params)?;
    Ok(r_minus_unchecked(point, params)?.0)
}

fn r_minus_unchecked(point: &DomainPoint, params: &BellmanParams) -> Result<(f64, f64)> {
    let t = point.rh_ratio(params.p) / params.eps;
    let r = if t >= 1.0 {
        0.0
    } else if t <= 1.0 / params.eps {
        params.s_minus
    } else {
        u_branch(t, params.p, Branch::Minus)?
    };
    Ok((r, t))
}

/// Both closed forms of the bound at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    /// The form in `x1`; this is the reported value.
    pub value: f64,
    pub form2: f64,
    pub r_minus: f64,
}

pub fn b_max(point: &DomainPoint, q: f64, params: &BellmanParams) -> Result<BoundValue> {
    params.check_q(q)?;
    check_in_eps(point, params)?;
    let (r, _) = r_minus_unchecked(point, params)?;
    let (p, s) = (params.p, params.s_minus);
    let common = (1.0 - q * r) / (1.0 - q * s);
    let form1 = point.x1.powf(q) * common * ((1.0 - s) / (1.0 - r)).powf(q);
    let form2 = point.x2.powf(q / p) * common * ((1.0 - p * s) / (1.0 - p * r)).powf(q / p);
    if (form1 - form2).abs() > FORM_AGREEMENT * form1.abs().max(form2.abs()) {
        return Err(Error::FormMismatch {
            x1: point.x1,
            x2: point.x2,
            form1,
            form2,
        });
    }
    Ok(BoundValue {
        value: form1,
        form2,
        r_minus: r,
    })
}

/// Closed-form gradient `(dB/dx1, dB/dx2)`.
///
/// With `C = (1 - s)^q / (1 - q s)`, implicit differentiation of `r-(t)`
/// gives `dB/dt = C x1^q q (1 - q) / (1 - p) (1 - r)^{1-q} (1 - p r)^{1-1/p}`,
/// which stays finite at `r = 0`.
pub fn b_max_gradient(point: &DomainPoint, q: f64, params: &BellmanParams) -> Result<[f64; 2]> {
    params.check_q(q)?;
    check_in_eps(point, params)?;
    let (r, t) = r_minus_unchecked(point, params)?;
    let (p, s) = (params.p, params.s_minus);
    let scale = (1.0 - s).powf(q) / (1.0 - q * s) * point.x1.powf(q);
    let value = scale * (1.0 - q * r) * (1.0 - r).powf(-q);
    let d_dt = scale * q * (1.0 - q) / (1.0 - p)
        * (1.0 - r).powf(1.0 - q)
        * (1.0 - p * r).powf(1.0 - 1.0 / p);
    Ok([
        q * value / point.x1 - d_dt * t / point.x1,
        d_dt * t / (p * point.x2),
    ])
}

/// Which power of the weight the Muckenhoupt bound is stated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorollaryVariant {
    /// `[w]_{A_q}`
    W,
    /// `[w^p]_{A_q}`
    WPowP,
}

impl CorollaryVariant {
    fn factor(self, p: f64) -> f64 {
        match self {
            CorollaryVariant::W => 1.0,
            CorollaryVariant::WPowP => p,
        }
    }
}

/// Smallest Muckenhoupt index (excluded) for which the constant applies:
/// `1 - s-` or `1 - p s-`.
pub fn corollary_threshold(params: &BellmanParams, variant: CorollaryVariant) -> f64 {
    1.0 - variant.factor(params.p) * params.s_minus
}

/// `((q - 1) / (q - 1 + k s-))^{q - 1}` with `k = 1` or `k = p`.
pub fn corollary_constant(
    q_muck: f64,
    params: &BellmanParams,
    variant: CorollaryVariant,
) -> Result<f64> {
    let threshold = corollary_threshold(params, variant);
    if !(q_muck.is_finite() && q_muck > threshold) {
        return Err(Error::BelowCorollaryThreshold { q_muck, threshold });
    }
    let m = q_muck - 1.0;
    let a = variant.factor(params.p) * params.s_minus;
    Ok((-m * (a / m).ln_1p()).exp())
}
