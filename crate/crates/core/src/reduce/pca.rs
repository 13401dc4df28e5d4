use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::FeatureSet;
use crate::error::{check_len, Error, Result};

/// Principal axes of a training set.
///
/// `components` holds one unit-length axis per row, ordered by decreasing
/// variance. Each axis is signed so its largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    /// Population (1/n) variance captured by each component.
    pub variances: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }
}

/// Fits the top-`k` principal components from the SVD of the centered data.
pub fn pca_fit(train: &FeatureSet, k: usize) -> Result<PcaModel> {
    let n = train.len();
    let d = train.dim();
    let max_k = n.saturating_sub(1).min(d);
    if k == 0 || k > max_k {
        return Err(Error::Spec(format!(
            "PCA k={k} out of range 1..={max_k} for {n} vectors of dimension {d}"
        )));
    }
    let mut mean = vec![0.0; d];
    for v in train.vectors() {
        for (m, x) in mean.iter_mut().zip(&v.values) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| train.vectors()[i].values[j] - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Data("SVD did not produce right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut components = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut axis: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let pivot = axis
            .iter()
            .enumerate()
            .fold(0, |best, (j, x)| if x.abs() > axis[best].abs() { j } else { best });
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(axis);
        let s = svd.singular_values[idx];
        variances.push(s * s / n as f64);
    }
    Ok(PcaModel {
        mean,
        components,
        variances,
    })
}

pub fn pca_project(model: &PcaModel, v: &[f64]) -> Result<Vec<f64>> {
    check_len(model.mean.len(), v.len())?;
    Ok(model
        .components
        .iter()
        .map(|axis| {
            axis.iter()
                .zip(v.iter().zip(&model.mean))
                .map(|(a, (x, m))| a * (x - m))
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(n: usize, d: usize, seed: u64) -> FeatureSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureSet::from_rows((0..n).map(|i| {
            let v: Vec<f64> = (0..d).map(|j| rng.gen_range(-1.0..1.0) * (1.0 + j as f64)).collect();
            (format!("{i}"), "c", v)
        }))
        .unwrap()
    }

    #[test]
    fn rank_one_line_reconstructs() {
        let fs = FeatureSet::from_rows(
            [-2.0, -1.0, 0.5, 3.0, 4.0]
                .iter()
                .enumerate()
                .map(|(i, &t)| (format!("{i}"), "c", vec![t, 2.0 * t])),
        )
        .unwrap();
        let model = pca_fit(&fs, 1).unwrap();
        for v in fs.vectors() {
            let p = pca_project(&model, &v.values).unwrap();
            for j in 0..2 {
                let recon = model.mean[j] + p[0] * model.components[0][j];
                assert!((recon - v.values[j]).abs() < 1e-10);
            }
        }
        // largest-magnitude entry positive
        assert!(model.components[0][1] > 0.0);
    }

    #[test]
    fn mean_projects_to_zero() {
        let fs = random_set(20, 5, 4);
        let model = pca_fit(&fs, 3).unwrap();
        let p = pca_project(&model, &model.mean).unwrap();
        assert!(p.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn full_rank_variance_matches_eigendecomposition() {
        let fs = random_set(50, 8, 11);
        let model = pca_fit(&fs, 8).unwrap();
        // Oracle: eigenvalues of the population covariance matrix.
        let n = fs.len() as f64;
        let x = DMatrix::from_fn(50, 8, |i, j| fs.vectors()[i].values[j] - model.mean[j]);
        let cov = x.transpose() * &x / n;
        let mut eig: Vec<f64> = cov.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in model.variances.iter().zip(&eig) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!((model.variances.iter().sum::<f64>() - cov.trace()).abs() < 1e-8);
        assert!(model.variances.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn components_orthonormal_and_projection_variance() {
        let fs = random_set(60, 10, 2);
        let model = pca_fit(&fs, 4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = model.components[a]
                    .iter()
                    .zip(&model.components[b])
                    .map(|(x, y)| x * y)
                    .sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8);
            }
        }
        let proj: Vec<Vec<f64>> = fs
            .vectors()
            .iter()
            .map(|v| pca_project(&model, &v.values).unwrap())
            .collect();
        for c in 0..4 {
            let var = proj.iter().map(|p| p[c] * p[c]).sum::<f64>() / 60.0;
            assert!((var - model.variances[c]).abs() < 1e-6);
        }
    }

    #[test]
    fn k_out_of_range() {
        let fs = random_set(5, 8, 0);
        assert!(pca_fit(&fs, 0).is_err());
        assert!(pca_fit(&fs, 5).is_err());
        assert!(pca_fit(&fs, 4).is_ok());
    }
}
