use crate::bellman::{
    b_max, corollary_constant, corollary_threshold, make_params, BellmanParams, CorollaryVariant,
    DomainPoint,
};
use crate::characteristics::{aq_characteristic, doubling_constant, rh_characteristic};
use crate::dyadic::{AverageCache, DyadicWeight, NodeIndex};
use crate::error::{Error, Result};

use super::report::{Detail, Location, ReportBuilder, VerificationReport};
use super::{
    CHAIN_MONOTONE_TOL, CHAIN_TERMINAL_TOL, COROLLARY_TOL, MIN_MEASURED_DELTA, THEOREM_TOL,
};

/// Parameters for `w`: `delta` defaults to the measured RH characteristic
/// (floored at [`MIN_MEASURED_DELTA`]) and `Q` to `max(Db(w), 2)`.
pub fn measured_params(
    w: &DyadicWeight,
    p: f64,
    delta: Option<f64>,
    big_q: Option<f64>,
) -> Result<BellmanParams> {
    let delta = match delta {
        Some(d) => d,
        None => rh_characteristic(w, p)?.value.max(MIN_MEASURED_DELTA),
    };
    let big_q = big_q.unwrap_or_else(|| doubling_constant(w).value.max(2.0));
    make_params(p, delta, big_q)
}

fn node_point(cache: &AverageCache, p: f64, node: NodeIndex) -> Result<DomainPoint> {
    DomainPoint::new(cache.table(1.0).at(node), cache.table(p).at(node))
}

fn bound_at(cache: &AverageCache, params: &BellmanParams, q: f64, node: NodeIndex) -> Result<f64> {
    let point = node_point(cache, params.p, node)?;
    match b_max(&point, q, params) {
        Ok(v) => Ok(v.value),
        Err(Error::OutsideDomain { .. }) => Err(Error::NodeOutsideDomain { node }),
        Err(e) => Err(e),
    }
}

/// Checks `<w^q>_I <= B(<w>_I, <w^p>_I)` on every node.
///
/// Margin is the smallest relative slack `(B - <w^q>) / B` over the tree; the
/// root's absolute slack is the first detail. A node outside the enlarged
/// domain means `delta` or `Q` is too small for `w`; it is recorded as a
/// violation with slack `(eps - f) / eps`, `f = <w^p>^{1/p} / <w>`.
pub fn verify_theorem(
    w: &DyadicWeight,
    p: f64,
    q: f64,
    delta: Option<f64>,
    big_q: Option<f64>,
) -> Result<VerificationReport> {
    let params = measured_params(w, p, delta, big_q)?;
    params.check_q(q)?;
    let cache = AverageCache::new(w);
    let powers_q = cache.table(q);

    let mut report = ReportBuilder::new("theorem", THEOREM_TOL);
    report.bellman(&params).param("q", q);
    if delta.is_none() {
        report.note("delta measured from the weight");
    }
    if big_q.is_none() {
        report.note("bigQ = max(measured doubling, 2)");
    }
    let mut outside = 0;
    for node in NodeIndex::all(w.depth()) {
        let measured = powers_q.at(node);
        let detail = match bound_at(&cache, &params, q, node) {
            Ok(bound) => Detail {
                location: node.into(),
                measured,
                bound,
                slack: (bound - measured) / bound.abs(),
            },
            Err(Error::NodeOutsideDomain { .. }) => {
                outside += 1;
                let f = node_point(&cache, p, node)?.rh_ratio(p);
                Detail {
                    location: node.into(),
                    measured: f,
                    bound: params.eps,
                    slack: (params.eps - f) / params.eps,
                }
            }
            Err(e) => return Err(e),
        };
        if node.is_root() {
            report.annotate(Detail {
                slack: detail.bound - detail.measured,
                ..detail
            });
            report.param("root_margin", detail.bound - detail.measured);
        }
        report.record(detail);
    }
    if outside > 0 {
        report
            .param("nodes_outside_domain", outside as f64)
            .note("some nodes lie outside the enlarged domain: delta or bigQ is too small for this weight");
    }
    Ok(report.finish())
}

/// Compares the Muckenhoupt characteristic of `w` (or `w^p`) with the
/// corollary constant built from the measured `delta` and `max(Db, 2)`.
pub fn verify_corollary(
    w: &DyadicWeight,
    p: f64,
    q_muck: f64,
    variant: CorollaryVariant,
) -> Result<VerificationReport> {
    let params = measured_params(w, p, None, None)?;
    let constant = corollary_constant(q_muck, &params, variant)?;
    let measured = match variant {
        CorollaryVariant::W => aq_characteristic(w, q_muck)?,
        CorollaryVariant::WPowP => aq_characteristic(&w.powf(p)?, q_muck)?,
    };
    let name = match variant {
        CorollaryVariant::W => "corollary_w",
        CorollaryVariant::WPowP => "corollary_w_pow_p",
    };
    let mut report = ReportBuilder::new(name, COROLLARY_TOL * constant).keep_all(true);
    report
        .bellman(&params)
        .param("q_muck", q_muck)
        .param("threshold", corollary_threshold(&params, variant))
        .param("constant", constant)
        .param(
            "log10_constant",
            -(q_muck - 1.0)
                * (variant_factor(variant, p) * params.s_minus / (q_muck - 1.0)).ln_1p()
                / std::f64::consts::LN_10,
        );
    if constant.is_infinite() {
        report.note("the constant exceeds the double range (JSON null); see log10_constant");
    }
    report.record(Detail {
        location: measured.argmax.into(),
        measured: measured.value,
        bound: constant,
        slack: constant - measured.value,
    });
    Ok(report.finish())
}

fn variant_factor(variant: CorollaryVariant, p: f64) -> f64 {
    match variant {
        CorollaryVariant::W => 1.0,
        CorollaryVariant::WPowP => p,
    }
}

/// Level sums `S(n) = sum_{I in D_n} |I| B(<w>_I, <w^p>_I)` for `n = 0..=depth`.
pub fn level_sums(w: &DyadicWeight, q: f64, params: &BellmanParams) -> Result<Vec<f64>> {
    params.check_q(q)?;
    let cache = AverageCache::new(w);
    (0..=w.depth())
        .map(|level| {
            let mut total = 0.0;
            for offset in 0..1usize << level {
                total += bound_at(&cache, params, q, NodeIndex::new(level, offset))?;
            }
            Ok(total * NodeIndex::new(level, 0).measure())
        })
        .collect()
}

/// The telescoping chain behind the dyadic induction: `S(n)` must not
/// increase with `n`, and at full depth it must equal `<w^q>_J` because the
/// bound is exact for constant weights.
pub fn induction_chain(
    w: &DyadicWeight,
    p: f64,
    q: f64,
    params: &BellmanParams,
) -> Result<VerificationReport> {
    if (params.p - p).abs() > 0.0 {
        return Err(Error::Parameter {
            name: "p",
            value: p,
            expected: "p must match the Bellman parameters",
        });
    }
    let sums = level_sums(w, q, params)?;
    let scale = sums[0].abs();
    let mut report = ReportBuilder::new("induction_chain", CHAIN_MONOTONE_TOL).keep_all(true);
    report.bellman(params).param("q", q);
    for (n, pair) in sums.windows(2).enumerate() {
        report.record(Detail {
            location: Location::Level {
                level: n as u32 + 1,
            },
            measured: pair[1],
            bound: pair[0],
            slack: (pair[0] - pair[1]) / scale,
        });
    }
    let target = crate::dyadic::power_averages(w, q).root();
    let last = *sums.last().expect("at least the root level");
    let terminal_err = (last - target).abs() / target.abs();
    report.param("terminal_relative_error", terminal_err);
    let terminal = Detail {
        location: Location::Terminal,
        measured: target,
        bound: last,
        slack: if terminal_err > CHAIN_TERMINAL_TOL {
            -terminal_err
        } else {
            0.0
        },
    };
    report.record(terminal);
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(leaves: &[f64]) -> DyadicWeight {
        DyadicWeight::new(leaves.to_vec()).unwrap()
    }

    #[test]
    fn constant_weight_theorem_is_tight() {
        let c = DyadicWeight::constant(3, 1.7).unwrap();
        let r = verify_theorem(&c, 2.0, -0.3, None, None).unwrap();
        assert!(r.passed);
        assert_eq!(r.margin, 0.0);
        assert_eq!(r.params["root_margin"], 0.0);
    }

    #[test]
    fn two_leaf_theorem() {
        let two = w(&[1.0, 3.0]);
        let r = verify_theorem(&two, 2.0, -0.5, None, None).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.params["delta"] - 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(r.params["bigQ"], 2.0);
        let root = r.details[0];
        assert!((root.measured - (1.0 + 3f64.powf(-0.5)) / 2.0).abs() < 1e-15);
        assert!(root.bound > root.measured);
    }

    #[test]
    fn theorem_rejects_boundary_q() {
        let two = w(&[1.0, 3.0]);
        let params = measured_params(&two, 2.0, None, None).unwrap();
        let q = 1.0 / params.s_minus;
        assert!(matches!(
            verify_theorem(&two, 2.0, q, None, None),
            Err(Error::QOutOfRange { .. })
        ));
    }

    #[test]
    fn underestimated_delta_is_reported() {
        let two = w(&[1.0, 9.0]);
        // measured delta is ~1.28; delta = 1.01 puts the root outside the enlarged domain
        let r = verify_theorem(&two, 2.0, -0.1, Some(1.01), Some(2.0)).unwrap();
        assert!(!r.passed);
        assert_eq!(r.violations, 1);
        assert_eq!(r.params["nodes_outside_domain"], 1.0);
        assert_eq!(
            r.worst_case,
            Some(Location::Node {
                level: 0,
                offset: 0
            })
        );
        let params = measured_params(&two, 2.0, Some(1.01), Some(2.0)).unwrap();
        assert_eq!(
            induction_chain(&two, 2.0, -0.1, &params).unwrap_err(),
            Error::NodeOutsideDomain {
                node: NodeIndex::ROOT
            }
        );
    }

    #[test]
    fn corollary_constant_weight() {
        let c = DyadicWeight::constant(2, 4.0).unwrap();
        for variant in [CorollaryVariant::W, CorollaryVariant::WPowP] {
            let params = measured_params(&c, 2.0, None, None).unwrap();
            let q = corollary_threshold(&params, variant) + 0.5;
            let r = verify_corollary(&c, 2.0, q, variant).unwrap();
            assert!(r.passed);
            assert!((r.details[0].measured - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn corollary_at_threshold_is_error() {
        let two = w(&[1.0, 3.0]);
        let params = measured_params(&two, 2.0, None, None).unwrap();
        let thr = corollary_threshold(&params, CorollaryVariant::W);
        assert!(matches!(
            verify_corollary(&two, 2.0, thr, CorollaryVariant::W),
            Err(Error::BelowCorollaryThreshold { .. })
        ));
    }

    #[test]
    fn chain_constant_and_two_leaf() {
        let c = DyadicWeight::constant(4, 0.6).unwrap();
        let params = measured_params(&c, 3.0, None, None).unwrap();
        let sums = level_sums(&c, -0.2, &params).unwrap();
        for s in &sums {
            assert!((s - 0.6f64.powf(-0.2)).abs() < 1e-15);
        }
        assert!(induction_chain(&c, 3.0, -0.2, &params).unwrap().passed);

        let two = w(&[1.0, 3.0]);
        let params = measured_params(&two, 2.0, None, None).unwrap();
        let sums = level_sums(&two, -0.5, &params).unwrap();
        assert!(sums[0] >= sums[1]);
        assert!((sums[1] - (1.0 + 3f64.powf(-0.5)) / 2.0).abs() < 1e-15);
        let r = induction_chain(&two, 2.0, -0.5, &params).unwrap();
        assert!(r.passed);
        assert!(r.params["terminal_relative_error"] < 1e-15);
    }
}
