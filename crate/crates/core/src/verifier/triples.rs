//! Random point triples `x = (x+ + x-)/2` with all three points in
//! `{x1^p <= x2 <= delta^p x1^p}` and the necessary conditions a parent and
//! its two halves satisfy under a doubling bound `Q`:
//! `x1 <= Q x1±` (equivalently `x1∓ <= (2Q - 1) x1±`) and `x1± <= 2 x1`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bellman::{in_omega, DomainPoint};
use crate::error::{Error, Result};

/// Consecutive failed draws tolerated for a single trial.
pub const MAX_REJECTIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub minus: DomainPoint,
    pub plus: DomainPoint,
    pub mid: DomainPoint,
}

#[derive(Debug, Clone, Copy)]
pub struct TripleSampler {
    pub p: f64,
    pub delta: f64,
    pub big_q: f64,
}

const SLACK: f64 = 1e-12;

impl TripleSampler {
    pub fn new(p: f64, delta: f64, big_q: f64) -> Self {
        Self { p, delta, big_q }
    }

    /// Point at relative height `tau` between the two boundaries of the
    /// `delta` domain above `x1`.
    pub fn point_at(&self, x1: f64, tau: f64) -> DomainPoint {
        let base = x1.powf(self.p);
        DomainPoint {
            x1,
            x2: base * (1.0 + tau * (self.delta.powf(self.p) - 1.0)),
        }
    }

    pub fn is_admissible(&self, minus: &DomainPoint, plus: &DomainPoint) -> bool {
        let mid = minus.midpoint(plus);
        let x1 = mid.x1;
        [minus, plus, &mid]
            .iter()
            .all(|pt| in_omega(pt, self.delta, self.p))
            && x1 <= self.big_q * minus.x1.min(plus.x1) * (1.0 + SLACK)
            && minus.x1.max(plus.x1) <= 2.0 * x1 * (1.0 + SLACK)
    }

    fn propose(&self, rng: &mut ChaCha8Rng) -> (DomainPoint, DomainPoint) {
        let spread = (2.0 * self.big_q - 1.0).ln();
        let x1_minus = rng.random_range((0.1f64).ln()..(10.0f64).ln()).exp();
        let x1_plus = x1_minus * rng.random_range(-spread..spread).exp();
        let minus = self.point_at(x1_minus, rng.random::<f64>());
        let plus = self.point_at(x1_plus, rng.random::<f64>());
        (minus, plus)
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Triple> {
        for _ in 0..MAX_REJECTIONS {
            let (minus, plus) = self.propose(rng);
            if self.is_admissible(&minus, &plus) {
                return Ok(Triple {
                    minus,
                    plus,
                    mid: minus.midpoint(&plus),
                });
            }
        }
        Err(Error::SamplerExhausted(MAX_REJECTIONS))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn draws_are_admissible() {
        let s = TripleSampler::new(2.0, 1.3, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let t = s.draw(&mut rng).unwrap();
            assert!(s.is_admissible(&t.minus, &t.plus));
            assert!(t.mid.x1 <= 3.0 * t.minus.x1.min(t.plus.x1) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejects_doubling_violation() {
        let s = TripleSampler::new(2.0, 1.5, 2.0);
        let minus = s.point_at(1.0, 0.0);
        // x1 = 2.05 > 2 * 1
        let plus = s.point_at(3.1, 0.0);
        assert!(!s.is_admissible(&minus, &plus));
        let plus = s.point_at(2.9, 0.0);
        assert!(s.is_admissible(&minus, &plus));
    }
}
