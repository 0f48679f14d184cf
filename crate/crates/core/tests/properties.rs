use dyadic_bellman::bellman::implicit_lhs;
use dyadic_bellman::characteristics::{
    aq_characteristic_within, doubling_constant_within, rh_characteristic_within,
};
use dyadic_bellman::verifier::TripleSampler;
use dyadic_bellman::*;
use proptest::prelude::*;

fn leaves(max_depth: u32) -> impl Strategy<Value = Vec<f64>> {
    (0..=max_depth).prop_flat_map(|d| prop::collection::vec(0.01f64..100.0, 1usize << d))
}

fn weight(max_depth: u32) -> impl Strategy<Value = DyadicWeight> {
    leaves(max_depth).prop_map(|v| DyadicWeight::new(v).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Mean of `leaf^r` over the leaves of a node, straight from the leaf list.
fn raw_mean(w: &DyadicWeight, node: NodeIndex, r: f64) -> f64 {
    let width = w.leaves().len() >> node.level;
    let slice = &w.leaves()[node.offset * width..(node.offset + 1) * width];
    slice.iter().map(|v| v.powf(r)).sum::<f64>() / width as f64
}

fn brute_rh(w: &DyadicWeight, p: f64) -> f64 {
    NodeIndex::all(w.depth())
        .map(|n| raw_mean(w, n, p).powf(1.0 / p) / raw_mean(w, n, 1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn brute_aq(w: &DyadicWeight, q: f64) -> f64 {
    NodeIndex::all(w.depth())
        .map(|n| raw_mean(w, n, 1.0) * raw_mean(w, n, -1.0 / (q - 1.0)).powf(q - 1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn brute_db(w: &DyadicWeight) -> f64 {
    if w.depth() == 0 {
        return 1.0;
    }
    NodeIndex::all(w.depth())
        .filter_map(|n| {
            n.parent()
                .map(|parent| raw_mean(w, parent, 1.0) / raw_mean(w, n, 1.0))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The twelve parameter combinations used throughout.
fn combo() -> impl Strategy<Value = BellmanParams> {
    (
        prop::sample::select(vec![1.5, 2.0, 3.0]),
        prop::sample::select(vec![2.0, 4.0]),
        prop::sample::select(vec![1.1, 1.5]),
    )
        .prop_map(|(p, big_q, delta)| make_params(p, delta, big_q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parent_is_mean_of_children(w in weight(7), r in -3.0f64..4.0) {
        let table = power_averages(&w, r);
        for node in NodeIndex::all(w.depth().saturating_sub(1)).filter(|_| w.depth() > 0) {
            let (a, b) = node.children();
            let v = table.at(node);
            prop_assert!((v - 0.5 * (table.at(a) + table.at(b))).abs() <= 4.0 * f64::EPSILON * v);
        }
    }

    #[test]
    fn jensen_at_every_node(w in weight(7), p in 1.01f64..6.0) {
        let first = power_averages(&w, 1.0);
        let power = power_averages(&w, p);
        for node in NodeIndex::all(w.depth()) {
            prop_assert!(first.at(node).powf(p) <= power.at(node) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn zero_exponent_gives_ones(w in weight(6)) {
        prop_assert!(power_averages(&w, 0.0).values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn averages_scale(w in weight(6), c in 0.01f64..100.0, r in -3.0f64..3.0) {
        let base = power_averages(&w, r);
        let scaled = power_averages(&w.scaled(c).unwrap(), r);
        for (a, b) in base.values().iter().zip(scaled.values()) {
            prop_assert!(rel(c.powf(r) * a, *b) <= 1e-12);
        }
    }

    #[test]
    fn characteristics_are_scale_invariant(w in weight(6), c in 0.01f64..100.0, p in 1.1f64..4.0, q in 1.1f64..5.0) {
        let s = w.scaled(c).unwrap();
        prop_assert!(rel(rh_characteristic(&w, p).unwrap().value, rh_characteristic(&s, p).unwrap().value) <= 1e-12);
        prop_assert!(rel(aq_characteristic(&w, q).unwrap().value, aq_characteristic(&s, q).unwrap().value) <= 1e-12);
        prop_assert!(rel(doubling_constant(&w).value, doubling_constant(&s).value) <= 1e-12);
    }

    #[test]
    fn characteristics_match_brute_force(w in weight(4), p in 1.1f64..4.0, q in 1.1f64..5.0) {
        prop_assert!(rel(rh_characteristic(&w, p).unwrap().value, brute_rh(&w, p)) <= 1e-12);
        prop_assert!(rel(aq_characteristic(&w, q).unwrap().value, brute_aq(&w, q)) <= 1e-12);
        prop_assert!(rel(doubling_constant(&w).value, brute_db(&w)) <= 1e-12);
    }

    #[test]
    fn characteristics_grow_with_refinement(w in weight(6), p in 1.1f64..4.0, q in 1.1f64..5.0) {
        let mut last = [f64::NEG_INFINITY; 3];
        for m in 0..=w.depth() {
            let now = [
                rh_characteristic_within(&w, p, m).unwrap().value,
                aq_characteristic_within(&w, q, m).unwrap().value,
                doubling_constant_within(&w, m).value,
            ];
            for k in 0..3 {
                prop_assert!(now[k] >= last[k]);
            }
            last = now;
        }
    }

    #[test]
    fn branches_have_the_right_sign_and_solve(t in 0.01f64..=1.0, p in 1.05f64..6.0) {
        let minus = match u_branch(t, p, Branch::Minus) {
            Err(Error::BelowSolverRange(_)) => return Ok(()),
            other => other.unwrap(),
        };
        let plus = u_branch(t, p, Branch::Plus).unwrap();
        prop_assert!(minus <= 0.0);
        prop_assert!((0.0..=1.0 / p).contains(&plus));
        for u in [minus, plus] {
            // either a small residual or the root sits between u and a neighbouring double
            let g = |v: f64| implicit_lhs(v, p) - t;
            let straddles = g(u.next_down()) * g(u) <= 0.0 || g(u) * g(u.next_up()) <= 0.0;
            prop_assert!(g(u).abs() <= 1e-12 || straddles, "p = {p}, t = {t}, u = {u}");
        }
    }

    #[test]
    fn branches_are_monotone(t in 0.01f64..0.99, dt in 1e-4f64..0.01, p in 1.5f64..6.0) {
        let (a, b) = (t, (t + dt).min(1.0));
        prop_assert!(u_branch(a, p, Branch::Minus).unwrap() < u_branch(b, p, Branch::Minus).unwrap());
        prop_assert!(u_branch(a, p, Branch::Plus).unwrap() > u_branch(b, p, Branch::Plus).unwrap());
    }

    #[test]
    fn round_trip_through_lhs(u in prop_oneof![-50.0f64..-1e-6, 1e-6f64..0.49], p in 1.05f64..6.0) {
        prop_assume!(u < 1.0 / p - 1e-6);
        let t = implicit_lhs(u, p);
        let branch = if u < 0.0 { Branch::Minus } else { Branch::Plus };
        let back = u_branch(t, p, branch).unwrap();
        prop_assert!((back - u).abs() <= 1e-6 * u.abs().max(1.0), "u = {u}, back = {back}");
    }

    #[test]
    fn bound_forms_agree_and_dominate_lower_boundary(params in combo(), x1 in 0.1f64..10.0, tau in 0.0f64..=1.0) {
        let q = params.midpoint_q();
        let x2 = x1.powf(params.p) * (1.0 + tau * (params.eps.powf(params.p) - 1.0));
        let v = b_max(&DomainPoint::new(x1, x2).unwrap(), q, &params).unwrap();
        prop_assert!(rel(v.value, v.form2) <= 1e-9);
        prop_assert!(v.value >= x1.powf(q) * (1.0 - 1e-12));
    }

    #[test]
    fn bound_is_homogeneous(params in combo(), x1 in 0.1f64..10.0, tau in 0.0f64..=1.0, c in 0.1f64..10.0) {
        let q = params.midpoint_q();
        let x2 = x1.powf(params.p) * (1.0 + tau * (params.eps.powf(params.p) - 1.0));
        let base = b_max(&DomainPoint::new(x1, x2).unwrap(), q, &params).unwrap().value;
        let scaled = DomainPoint::new(c * x1, c.powf(params.p) * x2).unwrap();
        prop_assert!(rel(c.powf(q) * base, b_max(&scaled, q, &params).unwrap().value) <= 1e-10);
    }

    #[test]
    fn corollary_constant_decreases_in_q(params in combo(), a in 0.01f64..20.0, b in 0.01f64..20.0) {
        for variant in [CorollaryVariant::W, CorollaryVariant::WPowP] {
            let thr = corollary_threshold(&params, variant);
            let (lo, hi) = (thr + a.min(b), thr + a.max(b));
            let c_lo = corollary_constant(lo, &params, variant).unwrap();
            let c_hi = corollary_constant(hi, &params, variant).unwrap();
            prop_assert!(c_hi <= c_lo * (1.0 + 1e-14));
            prop_assert!(c_hi >= 1.0);
        }
    }

    #[test]
    fn midpoint_concavity_on_admissible_pairs(params in combo(), seed in any::<u64>()) {
        use rand::SeedableRng;
        let q = params.midpoint_q();
        let sampler = TripleSampler::new(params.p, params.delta, params.big_q);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t = sampler.draw(&mut rng).unwrap();
        let slack = verifier::midpoint_slack(&params, q, &t.minus, &t.plus).unwrap();
        prop_assert!(slack >= -1e-9);
    }
}
