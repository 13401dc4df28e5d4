use serde::{Deserialize, Serialize};

use crate::data::FeatureSet;
use crate::error::{check_len, Error, Result};

/// Per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreParams {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

pub fn zscore_fit(train: &FeatureSet) -> Result<ZScoreParams> {
    if train.len() < 2 {
        return Err(Error::Spec(format!(
            "z-score needs at least 2 training vectors, got {}",
            train.len()
        )));
    }
    let d = train.dim();
    let n = train.len() as f64;
    let mut mean = vec![0.0; d];
    for v in train.vectors() {
        for (m, x) in mean.iter_mut().zip(&v.values) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for v in train.vectors() {
        for ((s, x), m) in var.iter_mut().zip(&v.values).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let stddev = var.into_iter().map(|s| (s / n).sqrt()).collect();
    Ok(ZScoreParams { mean, stddev })
}

/// `(v_i - mean_i) / stddev_i`; constant training dimensions map to 0.
pub fn zscore_apply(params: &ZScoreParams, v: &[f64]) -> Result<Vec<f64>> {
    check_len(params.mean.len(), v.len())?;
    Ok(v.iter()
        .zip(&params.mean)
        .zip(&params.stddev)
        .map(|((x, m), s)| if *s > 0.0 { (x - m) / s } else { 0.0 })
        .collect())
}
