use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bellman::{b_max, b_max_gradient, in_omega, BellmanParams, DomainPoint};
use crate::error::{Error, Result};

use super::report::{Detail, Location, ReportBuilder, VerificationReport};
use super::triples::{Triple, TripleSampler};
use super::{HESSIAN_TOL, MIDPOINT_TOL, SEGMENT_POINTS, SEGMENT_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianOptions {
    /// Central-difference step relative to each coordinate.
    pub rel_step: f64,
}

impl Default for HessianOptions {
    fn default() -> Self {
        Self { rel_step: 1e-5 }
    }
}

/// Symmetrized Hessian at one point and its eigenvalues (ascending).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianSample {
    pub value: f64,
    pub matrix: [[f64; 2]; 2],
    pub eigenvalues: [f64; 2],
}

/// Hessian of the bound at `point`, by central differences of the
/// closed-form gradient.
pub fn hessian_at(
    point: &DomainPoint,
    q: f64,
    params: &BellmanParams,
    opts: &HessianOptions,
) -> Result<HessianSample> {
    let value = b_max(point, q, params)?.value;
    let h1 = opts.rel_step * point.x1;
    let h2 = opts.rel_step * point.x2;
    let grad = |x1: f64, x2: f64| b_max_gradient(&DomainPoint::new(x1, x2)?, q, params);
    let e1 = grad(point.x1 + h1, point.x2)?;
    let w1 = grad(point.x1 - h1, point.x2)?;
    let e2 = grad(point.x1, point.x2 + h2)?;
    let w2 = grad(point.x1, point.x2 - h2)?;
    let a = (e1[0] - w1[0]) / (2.0 * h1);
    let d = (e2[1] - w2[1]) / (2.0 * h2);
    let b = 0.5 * ((e1[1] - w1[1]) / (2.0 * h1) + (e2[0] - w2[0]) / (2.0 * h2));
    Ok(HessianSample {
        value,
        matrix: [[a, b], [b, d]],
        eigenvalues: symmetric_eigenvalues(a, b, d),
    })
}

/// Eigenvalues of `[[a, b], [b, d]]`, ascending.
pub fn symmetric_eigenvalues(a: f64, b: f64, d: f64) -> [f64; 2] {
    let mean = 0.5 * (a + d);
    let radius = (0.5 * (a - d)).hypot(b);
    let det = a * d - b * b;
    // the root of smaller magnitude comes from the determinant
    let (lo, hi) = if mean >= 0.0 {
        let hi = mean + radius;
        (if hi == 0.0 { 0.0 } else { det / hi }, hi)
    } else {
        let lo = mean - radius;
        (lo, det / lo)
    };
    [lo.min(hi), lo.max(hi)]
}

/// Grid over the strip `x1 in [0.5, 2]`,
/// `x2 = x1^p (1 + t (eps^p - 1))`, `t in [margin, 1 - margin]`.
pub fn strip_grid(
    params: &BellmanParams,
    nx: usize,
    ny: usize,
    region_margin: f64,
) -> Vec<DomainPoint> {
    let lift = params.eps.powf(params.p) - 1.0;
    let mut points = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        let x1 = 0.5 + 1.5 * i as f64 / (nx - 1).max(1) as f64;
        for j in 0..ny {
            let t = region_margin + (1.0 - 2.0 * region_margin) * j as f64 / (ny - 1).max(1) as f64;
            points.push(DomainPoint {
                x1,
                x2: x1.powf(params.p) * (1.0 + t * lift),
            });
        }
    }
    points
}

pub fn hessian_scan(
    params: &BellmanParams,
    q: f64,
    grid: (usize, usize),
    region_margin: f64,
) -> Result<VerificationReport> {
    hessian_scan_with(params, q, grid, region_margin, &HessianOptions::default())
}

/// Local concavity over the shrunk strip: the largest eigenvalue, relative to
/// `|B|`, must stay below [`HESSIAN_TOL`].
pub fn hessian_scan_with(
    params: &BellmanParams,
    q: f64,
    (nx, ny): (usize, usize),
    region_margin: f64,
    opts: &HessianOptions,
) -> Result<VerificationReport> {
    if nx < 8 || ny < 8 {
        return Err(Error::DegenerateGrid("grid dimensions must be at least 8"));
    }
    if !(region_margin > 0.0 && region_margin < 0.5) {
        return Err(Error::DegenerateGrid("region_margin must lie in (0, 0.5)"));
    }
    params.check_q(q)?;
    let samples: Vec<(DomainPoint, HessianSample)> = strip_grid(params, nx, ny, region_margin)
        .into_par_iter()
        .map(|pt| hessian_at(&pt, q, params, opts).map(|h| (pt, h)))
        .collect::<Result<_>>()?;

    let mut report = ReportBuilder::new("hessian_scan", HESSIAN_TOL);
    report
        .bellman(params)
        .param("q", q)
        .param("nx", nx as f64)
        .param("ny", ny as f64)
        .param("region_margin", region_margin)
        .param("rel_step", opts.rel_step);
    let mut min_eig = f64::INFINITY;
    for (pt, h) in samples {
        let scale = h.value.abs();
        min_eig = min_eig.min(h.eigenvalues[0] / scale);
        report.record(Detail {
            location: pt.into(),
            measured: h.eigenvalues[1],
            bound: 0.0,
            slack: -h.eigenvalues[1] / scale,
        });
    }
    report.param("min_relative_eigenvalue", min_eig);
    Ok(report.finish())
}

/// `B(mid) - (B(x+) + B(x-)) / 2`.
pub fn midpoint_slack(
    params: &BellmanParams,
    q: f64,
    minus: &DomainPoint,
    plus: &DomainPoint,
) -> Result<f64> {
    let mid = minus.midpoint(plus);
    let at_mid = b_max(&mid, q, params)?.value;
    let ends = 0.5 * (b_max(minus, q, params)?.value + b_max(plus, q, params)?.value);
    Ok(at_mid - ends)
}

/// Smallest and largest `x2^{1/p} / x1` over `n` equally spaced points of
/// the closed segment.
fn segment_ratio_range(minus: &DomainPoint, plus: &DomainPoint, p: f64, n: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..n {
        let f = minus.lerp(plus, k as f64 / (n - 1) as f64).rh_ratio(p);
        lo = lo.min(f);
        hi = hi.max(f);
    }
    (lo, hi)
}

fn segment_inside(params: &BellmanParams, triple: &Triple) -> bool {
    (0..SEGMENT_POINTS).all(|k| {
        let pt = triple
            .minus
            .lerp(&triple.plus, k as f64 / (SEGMENT_POINTS - 1) as f64);
        in_omega(&pt, params.eps, params.p)
    })
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64))
}

fn sampler(params: &BellmanParams) -> TripleSampler {
    TripleSampler::new(params.p, params.delta, params.big_q)
}

const ADMISSIBILITY_NOTE: &str =
    "pairs drawn from the necessary conditions x1 <= Q x1± and x1± <= 2 x1, a superset of realizable pairs";

/// Midpoint concavity on random admissible pairs. Margin is the smallest
/// `slack / |B(mid)|`; a segment leaving the enlarged domain counts as `-1`.
pub fn midpoint_concavity(
    params: &BellmanParams,
    q: f64,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if trials == 0 {
        return Err(Error::Parameter {
            name: "trials",
            value: 0.0,
            expected: "trials >= 1",
        });
    }
    params.check_q(q)?;
    let sampler = sampler(params);
    let outcomes: Vec<Detail> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let triple = sampler.draw(&mut rng)?;
            let location = Location::Segment {
                trial,
                minus: triple.minus,
                plus: triple.plus,
            };
            let at_mid = b_max(&triple.mid, q, params)?.value;
            let slack = midpoint_slack(params, q, &triple.minus, &triple.plus)?;
            let rel = if segment_inside(params, &triple) {
                slack / at_mid.abs()
            } else {
                -1.0
            };
            Ok(Detail {
                location,
                measured: at_mid - slack,
                bound: at_mid,
                slack: rel,
            })
        })
        .collect::<Result<_>>()?;
    let mut report = ReportBuilder::new("midpoint_concavity", MIDPOINT_TOL).seed(seed);
    report
        .bellman(params)
        .param("q", q)
        .param("trials", trials as f64);
    report.note(ADMISSIBILITY_NOTE);
    for d in outcomes {
        report.record(d);
    }
    Ok(report.finish())
}

/// Worst-case segment through `x- = (1, delta^p)` and `x = (k, k^p delta^p)`,
/// both on the upper boundary, extended to `x+ = 2x - x-`.
/// `k = Q` is the first extremal configuration, `k = 2` the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalOutcome {
    pub factor: f64,
    pub minus: DomainPoint,
    pub plus: DomainPoint,
    pub argmax: DomainPoint,
    pub max_ratio: f64,
    /// `eps - max_ratio`
    pub gap: f64,
}

pub fn extremal_segment(params: &BellmanParams, factor: f64) -> ExtremalOutcome {
    let p = params.p;
    let dp = params.delta.powf(p);
    let minus = DomainPoint { x1: 1.0, x2: dp };
    let mid = DomainPoint {
        x1: factor,
        x2: factor.powf(p) * dp,
    };
    let plus = DomainPoint {
        x1: 2.0 * mid.x1 - minus.x1,
        x2: 2.0 * mid.x2 - minus.x2,
    };
    let ratio = |s: f64| minus.lerp(&plus, s).rh_ratio(p);
    let (s, max_ratio) = maximize_unimodal(ratio, 4096);
    ExtremalOutcome {
        factor,
        minus,
        plus,
        argmax: minus.lerp(&plus, s),
        max_ratio,
        gap: params.eps - max_ratio,
    }
}

/// Dense scan of `[0, 1]` followed by golden-section refinement around the
/// best sample.
fn maximize_unimodal(f: impl Fn(f64) -> f64, samples: usize) -> (f64, f64) {
    let (mut best_k, mut best) = (0, f64::NEG_INFINITY);
    for k in 0..=samples {
        let v = f(k as f64 / samples as f64);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let step = 1.0 / samples as f64;
    let mut a = (best_k as f64 - 1.0).max(0.0) * step;
    let mut b = (best_k as f64 + 1.0).min(samples as f64) * step;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a < 1e-15 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let s = 0.5 * (a + b);
    let v = f(s);
    if v >= best {
        (s, v)
    } else {
        (best_k as f64 * step, best)
    }
}

/// Segments between admissible pairs stay inside the enlarged domain.
/// Margin is `min(eps - max f, min f - 1)` with `f = x2^{1/p} / x1`, over the
/// random trials and the two extremal configurations.
pub fn segment_containment(
    params: &BellmanParams,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if trials == 0 {
        return Err(Error::Parameter {
            name: "trials",
            value: 0.0,
            expected: "trials >= 1",
        });
    }
    let sampler = sampler(params);
    let eps = params.eps;
    let outcomes: Vec<Detail> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let triple = sampler.draw(&mut rng)?;
            let (lo, hi) =
                segment_ratio_range(&triple.minus, &triple.plus, params.p, SEGMENT_POINTS);
            Ok(Detail {
                location: Location::Segment {
                    trial,
                    minus: triple.minus,
                    plus: triple.plus,
                },
                measured: hi,
                bound: eps,
                slack: (eps - hi).min(lo - 1.0),
            })
        })
        .collect::<Result<_>>()?;

    let mut report = ReportBuilder::new("segment_containment", SEGMENT_TOL * eps).seed(seed);
    report.bellman(params).param("trials", trials as f64);
    report.note(ADMISSIBILITY_NOTE);
    for d in outcomes {
        report.record(d);
    }
    for (name, factor) in [("case1", params.big_q), ("case2", 2.0)] {
        let ext = extremal_segment(params, factor);
        report.param(&format!("{name}_max_ratio"), ext.max_ratio);
        report.param(&format!("{name}_gap"), ext.gap);
        let detail = Detail {
            location: Location::Extremal {
                factor,
                minus: ext.minus,
                plus: ext.plus,
            },
            measured: ext.max_ratio,
            bound: eps,
            slack: ext.gap,
        };
        report.record(detail);
        report.annotate(detail);
    }
    Ok(report.finish())
}
