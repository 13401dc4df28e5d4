//! Vector distances used to rank gallery items against a query.
//!
//! All sums accumulate in `f64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Manhattan,
    Hassanat,
    Canberra,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Euclidean,
        MetricKind::Manhattan,
        MetricKind::Hassanat,
        MetricKind::Canberra,
    ];

    /// Two-letter code used on the command line and in reports.
    pub fn code(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "ed",
            MetricKind::Manhattan => "md",
            MetricKind::Hassanat => "hd",
            MetricKind::Canberra => "cd",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ed" | "euclidean" => Ok(MetricKind::Euclidean),
            "md" | "manhattan" | "cityblock" => Ok(MetricKind::Manhattan),
            "hd" | "hassanat" => Ok(MetricKind::Hassanat),
            "cd" | "canberra" => Ok(MetricKind::Canberra),
            other => Err(Error::Spec(format!("unknown metric `{other}`"))),
        }
    }
}

pub fn euclidean(v1: &[f64], v2: &[f64]) -> Result<f64> {
    check_len(v1.len(), v2.len())?;
    Ok(v1
        .iter()
        .zip(v2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

pub fn manhattan(v1: &[f64], v2: &[f64]) -> Result<f64> {
    check_len(v1.len(), v2.len())?;
    Ok(v1.iter().zip(v2).map(|(a, b)| (a - b).abs()).sum())
}

/// Per-dimension Hassanat term, in `[0, 1)`.
///
/// Non-negative pairs use `1 - (1 + min) / (1 + max)`; when the minimum is
/// negative both numerator and denominator are shifted by `|min|`.
#[inline]
pub fn hassanat_term(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    // Rearranged as (hi - lo) / (1 + hi [- lo]) to avoid cancellation.
    if lo >= 0.0 {
        (hi - lo) / (1.0 + hi)
    } else {
        (hi - lo) / (1.0 + hi - lo)
    }
}

pub fn hassanat(v1: &[f64], v2: &[f64]) -> Result<f64> {
    check_len(v1.len(), v2.len())?;
    Ok(v1.iter().zip(v2).map(|(&a, &b)| hassanat_term(a, b)).sum())
}

/// Per-dimension Canberra term, in `[0, 1]`, with `term(0, 0) = 0`.
#[inline]
pub fn canberra_term(a: f64, b: f64) -> f64 {
    let denom = a.abs() + b.abs();
    if denom == 0.0 {
        0.0
    } else {
        (a - b).abs() / denom
    }
}

pub fn canberra(v1: &[f64], v2: &[f64]) -> Result<f64> {
    check_len(v1.len(), v2.len())?;
    Ok(v1.iter().zip(v2).map(|(&a, &b)| canberra_term(a, b)).sum())
}

pub fn distance(kind: MetricKind, v1: &[f64], v2: &[f64]) -> Result<f64> {
    match kind {
        MetricKind::Euclidean => euclidean(v1, v2),
        MetricKind::Manhattan => manhattan(v1, v2),
        MetricKind::Hassanat => hassanat(v1, v2),
        MetricKind::Canberra => canberra(v1, v2),
    }
}
