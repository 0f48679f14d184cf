//! Dyadic Reverse Hölder, Muckenhoupt and doubling characteristics.
//!
//! For a weight that is constant on the finest level, every ratio on a
//! deeper subinterval equals its value on the enclosing leaf, so the
//! supremum over the infinite dyadic family is a maximum over the tree.
//! Ties go to the smallest `(level, offset)`.

use serde::{Deserialize, Serialize};

use crate::dyadic::{power_averages, AverageTable, DyadicWeight, NodeIndex};
use crate::error::{check_param, Result};

/// A measured supremum and the node attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub value: f64,
    pub argmax: NodeIndex,
}

fn argmax_within(max_level: u32, mut ratio: impl FnMut(NodeIndex) -> f64) -> Characteristic {
    let mut best = Characteristic {
        value: f64::NEG_INFINITY,
        argmax: NodeIndex::ROOT,
    };
    for node in NodeIndex::all(max_level) {
        let v = ratio(node);
        if v > best.value {
            best = Characteristic {
                value: v,
                argmax: node,
            };
        }
    }
    best
}

fn check_p(p: f64) -> Result<()> {
    check_param("p", p, p > 1.0, "p > 1")
}

fn check_q_muck(q: f64) -> Result<()> {
    check_param("q_muck", q, q > 1.0, "q_muck > 1")
}

/// `sup_I <w^p>_I^{1/p} / <w>_I`.
pub fn rh_characteristic(w: &DyadicWeight, p: f64) -> Result<Characteristic> {
    rh_characteristic_within(w, p, w.depth())
}

/// As [`rh_characteristic`], restricted to nodes of level `<= max_level`.
pub fn rh_characteristic_within(
    w: &DyadicWeight,
    p: f64,
    max_level: u32,
) -> Result<Characteristic> {
    check_p(p)?;
    let first = power_averages(w, 1.0);
    let power = power_averages(w, p);
    Ok(rh_from_tables(&first, &power, p, max_level.min(w.depth())))
}

pub(crate) fn rh_from_tables(
    first: &AverageTable,
    power: &AverageTable,
    p: f64,
    max_level: u32,
) -> Characteristic {
    argmax_within(max_level, |n| power.at(n).powf(1.0 / p) / first.at(n))
}

/// `sup_I <w>_I <w^{-1/(q-1)}>_I^{q-1}`.
pub fn aq_characteristic(w: &DyadicWeight, q_muck: f64) -> Result<Characteristic> {
    aq_characteristic_within(w, q_muck, w.depth())
}

pub fn aq_characteristic_within(
    w: &DyadicWeight,
    q_muck: f64,
    max_level: u32,
) -> Result<Characteristic> {
    check_q_muck(q_muck)?;
    let first = power_averages(w, 1.0);
    let dual = power_averages(w, -1.0 / (q_muck - 1.0));
    Ok(aq_from_tables(
        &first,
        &dual,
        q_muck,
        max_level.min(w.depth()),
    ))
}

pub(crate) fn aq_from_tables(
    first: &AverageTable,
    dual: &AverageTable,
    q_muck: f64,
    max_level: u32,
) -> Characteristic {
    argmax_within(max_level, |n| first.at(n) * dual.at(n).powf(q_muck - 1.0))
}

/// `sup_{I != J} <w>_{parent(I)} / <w>_I`; `1` for a depth-0 weight.
pub fn doubling_constant(w: &DyadicWeight) -> Characteristic {
    doubling_constant_within(w, w.depth())
}

pub fn doubling_constant_within(w: &DyadicWeight, max_level: u32) -> Characteristic {
    let first = power_averages(w, 1.0);
    doubling_from_table(&first, max_level.min(w.depth()))
}

pub(crate) fn doubling_from_table(first: &AverageTable, max_level: u32) -> Characteristic {
    if max_level == 0 {
        return Characteristic {
            value: 1.0,
            argmax: NodeIndex::ROOT,
        };
    }
    argmax_within(max_level, |n| match n.parent() {
        Some(parent) => first.at(parent) / first.at(n),
        None => f64::NEG_INFINITY,
    })
}

/// The three measured characteristics of a weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub p: f64,
    pub q_muck: f64,
    pub depth: u32,
    pub rh_char: f64,
    pub aq_char: f64,
    pub doubling: f64,
    pub rh_argmax: NodeIndex,
    pub aq_argmax: NodeIndex,
    pub doubling_argmax: NodeIndex,
    /// `<w>_J`
    pub mean: f64,
    /// `<w^p>_J`
    pub power_mean: f64,
}

pub fn profile(w: &DyadicWeight, p: f64, q_muck: f64) -> Result<WeightProfile> {
    check_p(p)?;
    check_q_muck(q_muck)?;
    let depth = w.depth();
    let first = power_averages(w, 1.0);
    let power = power_averages(w, p);
    let dual = power_averages(w, -1.0 / (q_muck - 1.0));
    let rh = rh_from_tables(&first, &power, p, depth);
    let aq = aq_from_tables(&first, &dual, q_muck, depth);
    let db = doubling_from_table(&first, depth);
    Ok(WeightProfile {
        p,
        q_muck,
        depth,
        rh_char: rh.value,
        aq_char: aq.value,
        doubling: db.value,
        rh_argmax: rh.argmax,
        aq_argmax: aq.argmax,
        doubling_argmax: db.argmax,
        mean: first.root(),
        power_mean: power.root(),
    })
}
