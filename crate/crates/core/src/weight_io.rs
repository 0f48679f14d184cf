//! Weight file formats.
//!
//! Plain text holds one strictly positive decimal per line (blank lines and
//! `#` comments are skipped); JSON holds `{"depth": n, "leaves": [...]}`.

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicWeight;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightFile {
    depth: u32,
    leaves: Vec<f64>,
}

pub fn parse_text(input: &str) -> Result<DyadicWeight> {
    let mut leaves = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| {
            Error::MalformedWeightFile(format!(
                "line {}: cannot parse {line:?} as a number",
                lineno + 1
            ))
        })?;
        leaves.push(value);
    }
    DyadicWeight::new(leaves)
}

pub fn parse_json(input: &str) -> Result<DyadicWeight> {
    let file: WeightFile =
        serde_json::from_str(input).map_err(|e| Error::MalformedWeightFile(e.to_string()))?;
    let count = file.leaves.len();
    let weight = DyadicWeight::new(file.leaves)?;
    if weight.depth() != file.depth {
        return Err(Error::DepthMismatch {
            declared: file.depth,
            leaves: count,
        });
    }
    Ok(weight)
}

/// Picks the format from the first non-blank character.
pub fn parse(input: &str) -> Result<DyadicWeight> {
    if input.trim_start().starts_with('{') {
        parse_json(input)
    } else {
        parse_text(input)
    }
}

pub fn to_json(w: &DyadicWeight) -> String {
    serde_json::to_string_pretty(&WeightFile {
        depth: w.depth(),
        leaves: w.leaves().to_vec(),
    })
    .expect("weight serializes")
}

pub fn to_text(w: &DyadicWeight) -> String {
    let mut out = String::with_capacity(w.leaves().len() * 24);
    for v in w.leaves() {
        out.push_str(&format!("{v:?}\n"));
    }
    out
}
