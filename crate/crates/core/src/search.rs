//! Random dyadically doubling Reverse Hölder weights, and a hill climb that
//! pushes `<w^q>_J / B(<w>_J, <w^p>_J)` upward inside the class to see how
//! much room the bound leaves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellman::{b_max, make_params, BellmanParams, DomainPoint};
use crate::characteristics::{doubling_from_table, profile, rh_from_tables, WeightProfile};
use crate::dyadic::{power_averages, DyadicWeight};
use crate::error::{check_param, Error, Result};
use crate::verifier::GENERATOR;

/// Ratios above `1 + RATIO_SLACK` would contradict the bound.
pub const RATIO_SLACK: f64 = 1e-9;

/// Final value of the annealed step multiplier (it starts at 1).
const FINAL_ETA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub depth: u32,
    pub p: f64,
    pub q: f64,
    pub delta_cap: f64,
    pub q_cap: f64,
    pub iterations: usize,
    pub step_scale: f64,
    pub seed: u64,
    /// Muckenhoupt index used for the reported profile.
    #[serde(default = "default_q_muck")]
    pub q_muck: f64,
}

fn default_q_muck() -> f64 {
    2.0
}

impl SearchConfig {
    pub fn new(depth: u32, p: f64, q: f64, delta_cap: f64, q_cap: f64) -> Self {
        Self {
            depth,
            p,
            q,
            delta_cap,
            q_cap,
            iterations: 1000,
            step_scale: 0.5,
            seed: 0,
            q_muck: default_q_muck(),
        }
    }

    /// Checks ranges and returns the parameters the caps induce.
    pub fn validate(&self) -> Result<BellmanParams> {
        check_param(
            "depth",
            self.depth as f64,
            self.depth >= 1 && self.depth <= 20,
            "1 <= depth <= 20",
        )?;
        check_param(
            "step_scale",
            self.step_scale,
            self.step_scale > 0.0,
            "step_scale > 0",
        )?;
        check_param("q_muck", self.q_muck, self.q_muck > 1.0, "q_muck > 1")?;
        let params = make_params(self.p, self.delta_cap, self.q_cap)?;
        params.check_q(self.q)?;
        Ok(params)
    }
}

pub fn sample_weight(config: &SearchConfig) -> Result<DyadicWeight> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok(sample_with(config, &mut rng))
}

/// Top-down multiplicative splits `a -> (a(1+θ), a(1-θ))`.
///
/// `|θ| < 1 - 1/Q` keeps every parent/child ratio below the doubling cap. A
/// split raises `<w^p>` on every ancestor, so each proposal is checked along
/// the path to the root and `θ` is halved until it fits (at worst the node
/// is not split).
fn sample_with(config: &SearchConfig, rng: &mut ChaCha8Rng) -> DyadicWeight {
    let p = config.p;
    let theta_max = (1.0 - 1.0 / config.q_cap) * (1.0 - 1e-9);
    // room for the rounding between these running sums and a fresh measurement
    let cap = config.delta_cap * (1.0 - 64.0 * f64::EPSILON);
    let mut first: Vec<Vec<f64>> = vec![vec![1.0]];
    let mut power: Vec<Vec<f64>> = vec![vec![1.0]];
    for level in 0..config.depth as usize {
        let parents = first[level].clone();
        first.push(parents.iter().flat_map(|&a| [a, a]).collect());
        power.push(
            parents
                .iter()
                .flat_map(|&a| [a.powf(p), a.powf(p)])
                .collect(),
        );
        for (offset, &a) in parents.iter().enumerate() {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let mut theta = sign * theta_max * rng.random::<f64>();
            while theta != 0.0 {
                let (lo, hi) = (a * (1.0 - theta), a * (1.0 + theta));
                let (lo_p, hi_p) = (lo.powf(p), hi.powf(p));
                let gain = 0.5 * (lo_p + hi_p) - a.powf(p);
                let fits = (0..=level).all(|l| {
                    let o = offset >> (level - l);
                    let share = gain * (0.5f64).powi((level - l) as i32);
                    (power[l][o] + share).powf(1.0 / p) / first[l][o] <= cap
                });
                if fits {
                    for l in 0..=level {
                        power[l][offset >> (level - l)] += gain * (0.5f64).powi((level - l) as i32);
                    }
                    first[level + 1][2 * offset] = hi;
                    first[level + 1][2 * offset + 1] = lo;
                    power[level + 1][2 * offset] = hi_p;
                    power[level + 1][2 * offset + 1] = lo_p;
                    break;
                }
                theta *= 0.5;
            }
        }
    }
    DyadicWeight::new(first.pop().expect("leaf level")).expect("splits keep leaves positive")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub config: SearchConfig,
    pub best_weight: DyadicWeight,
    pub best_ratio: f64,
    pub initial_ratio: f64,
    pub accepted: usize,
    pub measured_profile: WeightProfile,
    pub trace: Vec<TracePoint>,
    pub generator: String,
}

/// Measured `(rh, doubling)` and the ratio `<w^q> / B` under `params`.
fn evaluate(w: &DyadicWeight, q: f64, params: &BellmanParams) -> Result<(f64, f64, f64)> {
    let depth = w.depth();
    let first = power_averages(w, 1.0);
    let power = power_averages(w, params.p);
    let rh = rh_from_tables(&first, &power, params.p, depth).value;
    let db = doubling_from_table(&first, depth).value;
    let point = DomainPoint::new(first.root(), power.root())?;
    let ratio = if rh <= params.delta * (1.0 + 1e-12) {
        power_averages(w, q).root() / b_max(&point, q, params)?.value
    } else {
        f64::NAN
    };
    Ok((rh, db, ratio))
}

/// The ratio `<w^q>_J / B(<w>_J, <w^p>_J)` for the caps of `config`.
pub fn bound_ratio(w: &DyadicWeight, config: &SearchConfig) -> Result<f64> {
    let params = config.validate()?;
    let (_, _, ratio) = evaluate(w, config.q, &params)?;
    Ok(ratio)
}

/// Hill climb over leaf values. Each step multiplies one leaf by
/// `exp(eta * N(0,1) * step_scale)` with `eta` shrinking geometrically from 1
/// to 1e-3; a step is kept only if the weight stays within both caps and the
/// ratio strictly increases.
pub fn local_search(config: &SearchConfig) -> Result<SearchResult> {
    let params = config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best = sample_with(config, &mut rng);
    let (_, _, initial_ratio) = evaluate(&best, config.q, &params)?;
    let mut best_ratio = initial_ratio;
    let mut trace = vec![TracePoint {
        iteration: 0,
        ratio: best_ratio,
    }];
    let n = best.leaves().len();
    let decay = if config.iterations > 0 {
        FINAL_ETA.powf(1.0 / config.iterations as f64)
    } else {
        1.0
    };
    let mut eta = 1.0;
    let mut accepted = 0;
    for iteration in 1..=config.iterations {
        let leaf = rng.random_range(0..n);
        let z: f64 = rng.sample(StandardNormal);
        let factor = (eta * z * config.step_scale).exp();
        eta *= decay;
        let mut leaves = best.leaves().to_vec();
        leaves[leaf] *= factor;
        let Ok(candidate) = DyadicWeight::new(leaves) else {
            continue;
        };
        let (rh, db, ratio) = evaluate(&candidate, config.q, &params)?;
        let feasible = rh <= config.delta_cap && db <= config.q_cap;
        if feasible && ratio > best_ratio {
            best = candidate;
            best_ratio = ratio;
            accepted += 1;
            trace.push(TracePoint { iteration, ratio });
        }
    }
    if best_ratio > 1.0 + RATIO_SLACK {
        return Err(Error::BoundExceeded { ratio: best_ratio });
    }
    let measured_profile = profile(&best, config.p, config.q_muck)?;
    Ok(SearchResult {
        config: *config,
        best_weight: best,
        best_ratio,
        initial_ratio,
        accepted,
        measured_profile,
        trace,
        generator: GENERATOR.to_string(),
    })
}

/// Independent searches with seeds `seed, seed + 1, ...`, run in parallel.
pub fn multi_start(config: &SearchConfig, restarts: usize) -> Result<Vec<SearchResult>> {
    (0..restarts as u64)
        .into_par_iter()
        .map(|i| {
            local_search(&SearchConfig {
                seed: config.seed.wrapping_add(i),
                ..*config
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{doubling_constant, rh_characteristic};

    fn config() -> SearchConfig {
        SearchConfig {
            iterations: 2000,
            seed: 3,
            ..SearchConfig::new(4, 2.0, -0.5, 1.2, 2.0)
        }
    }

    #[test]
    fn sampled_weight_respects_caps() {
        let cfg = SearchConfig {
            seed: 11,
            ..SearchConfig::new(8, 2.0, -0.3, 1.2, 3.0)
        };
        let w = sample_weight(&cfg).unwrap();
        assert_eq!(w.depth(), 8);
        let rh = rh_characteristic(&w, 2.0).unwrap().value;
        let db = doubling_constant(&w).value;
        assert!(rh <= 1.2 * (1.0 + 1e-12), "rh = {rh}");
        assert!(db <= 3.0 * (1.0 + 1e-12), "db = {db}");
        assert!(
            rh > 1.01,
            "sampler should not collapse to a constant weight"
        );
    }

    #[test]
    fn tight_delta_cap_gives_nearly_constant_weight() {
        let cfg = SearchConfig::new(5, 2.0, -0.1, 1.0 + 1e-12, 2.0);
        let w = sample_weight(&cfg).unwrap();
        assert!(w.leaves().iter().all(|&v| (v - 1.0).abs() < 1e-5));
        let rh = rh_characteristic(&w, 2.0).unwrap().value;
        assert!(rh <= 1.0 + 1e-12, "{}", rh - 1.0);
    }

    #[test]
    fn depth_one_theta_bound() {
        for seed in 0..200 {
            let cfg = SearchConfig {
                seed,
                ..SearchConfig::new(1, 2.0, -0.01, 5.0, 2.0)
            };
            let w = sample_weight(&cfg).unwrap();
            let theta = (w.leaves()[0] - 1.0).abs();
            assert!(theta < 0.5);
            assert!((w.leaves()[0] + w.leaves()[1] - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::new(0, 2.0, -0.5, 1.2, 2.0)
            .validate()
            .is_err());
        assert!(SearchConfig::new(4, 2.0, -0.5, 1.2, 1.5)
            .validate()
            .is_err());
        assert!(SearchConfig::new(4, 2.0, -5.0, 1.2, 2.0)
            .validate()
            .is_err());
        assert!(SearchConfig::new(4, 2.0, 0.5, 1.2, 2.0).validate().is_err());
        let mut cfg = config();
        cfg.step_scale = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_iterations_keeps_start() {
        let cfg = SearchConfig {
            iterations: 0,
            ..SearchConfig::new(3, 2.0, -0.1, 1.2, 2.0)
        };
        let r = local_search(&cfg).unwrap();
        assert_eq!(r.best_ratio, r.initial_ratio);
        assert!(r.best_ratio <= 1.0);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn search_bookkeeping() {
        let r = local_search(&config()).unwrap();
        assert!(r.best_ratio <= 1.0 + RATIO_SLACK);
        assert!(r.best_ratio >= r.initial_ratio);
        assert_eq!(r.trace.last().unwrap().ratio, r.best_ratio);
        assert!(r
            .trace
            .windows(2)
            .all(|w| w[0].ratio < w[1].ratio && w[0].iteration < w[1].iteration));
        assert_eq!(r.trace.len(), r.accepted + 1);
        assert!(r.measured_profile.rh_char <= 1.2 * (1.0 + 1e-12));
        assert!(r.measured_profile.doubling <= 2.0 * (1.0 + 1e-12));
    }

    #[test]
    fn search_is_deterministic() {
        let a = local_search(&config()).unwrap();
        let b = local_search(&config()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn restarts_match_single_runs() {
        let cfg = SearchConfig {
            iterations: 200,
            ..config()
        };
        let runs = multi_start(&cfg, 3).unwrap();
        let second = local_search(&SearchConfig { seed: 4, ..cfg }).unwrap();
        assert_eq!(runs[1], second);
    }
}
