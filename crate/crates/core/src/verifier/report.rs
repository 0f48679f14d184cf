use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bellman::{BellmanParams, DomainPoint};
use crate::dyadic::NodeIndex;

/// Where a check item was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Location {
    Node {
        level: u32,
        offset: usize,
    },
    Point {
        x1: f64,
        x2: f64,
    },
    Segment {
        trial: usize,
        minus: DomainPoint,
        plus: DomainPoint,
    },
    Extremal {
        factor: f64,
        minus: DomainPoint,
        plus: DomainPoint,
    },
    Level {
        level: u32,
    },
    Terminal,
}

impl From<NodeIndex> for Location {
    fn from(n: NodeIndex) -> Self {
        Location::Node {
            level: n.level,
            offset: n.offset,
        }
    }
}

impl From<DomainPoint> for Location {
    fn from(p: DomainPoint) -> Self {
        Location::Point { x1: p.x1, x2: p.x2 }
    }
}

/// One evaluated item: what was measured, what it was compared against, and
/// the signed slack in the report's margin units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detail {
    pub location: Location,
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
}

/// Outcome of one check. `passed == (margin >= -tolerance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub passed: bool,
    pub margin: f64,
    pub tolerance: f64,
    pub worst_case: Option<Location>,
    pub items: usize,
    pub violations: usize,
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub generator: Option<String>,
    pub details: Vec<Detail>,
    pub notes: Vec<String>,
}

/// Accumulates details, keeping every item only when asked to; otherwise
/// only violations and the current worst item are retained.
pub(crate) struct ReportBuilder {
    name: &'static str,
    tolerance: f64,
    keep_all: bool,
    worst: Option<Detail>,
    items: usize,
    violations: usize,
    details: Vec<Detail>,
    params: BTreeMap<String, f64>,
    seed: Option<u64>,
    notes: Vec<String>,
}

impl ReportBuilder {
    pub fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            keep_all: false,
            worst: None,
            items: 0,
            violations: 0,
            details: Vec::new(),
            params: BTreeMap::new(),
            seed: None,
            notes: Vec::new(),
        }
    }

    pub fn keep_all(mut self, keep: bool) -> Self {
        self.keep_all = keep;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn param(&mut self, name: &str, value: f64) -> &mut Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn bellman(&mut self, params: &BellmanParams) -> &mut Self {
        self.param("p", params.p)
            .param("delta", params.delta)
            .param("bigQ", params.big_q)
            .param("H", params.h)
            .param("eps", params.eps)
            .param("s_minus", params.s_minus)
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    pub fn record(&mut self, detail: Detail) {
        self.items += 1;
        let violated = detail.slack < -self.tolerance || detail.slack.is_nan();
        if violated {
            self.violations += 1;
        }
        if self.keep_all || violated {
            self.details.push(detail);
        }
        let worse = match &self.worst {
            None => true,
            Some(w) => detail.slack < w.slack || detail.slack.is_nan(),
        };
        if worse {
            self.worst = Some(detail);
        }
    }

    /// Retains a detail for the report without counting it as an item.
    pub fn annotate(&mut self, detail: Detail) {
        self.details.push(detail);
    }

    pub fn finish(mut self) -> VerificationReport {
        let (margin, worst_case) = match self.worst {
            Some(w) => (w.slack, Some(w.location)),
            None => (0.0, None),
        };
        if let Some(w) = self.worst {
            if !self.details.iter().any(|d| d == &w) {
                self.details.push(w);
            }
        }
        let generator = self.seed.map(|_| super::GENERATOR.to_string());
        VerificationReport {
            check_name: self.name.to_string(),
            passed: margin >= -self.tolerance,
            margin,
            tolerance: self.tolerance,
            worst_case,
            items: self.items,
            violations: self.violations,
            params: std::mem::take(&mut self.params),
            seed: self.seed,
            generator,
            details: self.details,
            notes: self.notes,
        }
    }
}
