//! Seeded synthetic datasets for tests, examples and smoke runs.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};

use crate::data::FeatureSet;
use crate::error::Result;
use crate::sparse::{Dictionary, Learner};

/// Well separated Gaussian blobs: class `c` is centred at `separation`
/// along axis `c mod dim`, shifted by `separation * (c / dim)` along the next axis,
/// with per-coordinate noise of standard deviation `spread`.
pub fn separated_clusters(
    classes: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    spread: f64,
    seed: u64,
) -> Result<FeatureSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spread).map_err(|e| crate::Error::Spec(e.to_string()))?;
    FeatureSet::from_rows((0..classes * per_class).map(|i| {
        let c = i / per_class;
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(noise)).collect();
        v[c % dim] += separation;
        if c >= dim {
            v[(c + 1) % dim] += separation * (c / dim) as f64;
        }
        (format!("img{i:04}"), format!("class{c:02}"), v)
    }))
}

/// Parameters of [`sparse_classes`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseClassSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Private atoms owned by each class.
    pub atoms_per_class: usize,
    /// Private atoms mixed into each signal.
    pub sparsity: usize,
    /// Coefficients are drawn uniformly from this range.
    pub coef_range: (f64, f64),
    /// Standard deviation of additive Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl SparseClassSpec {
    pub fn new(classes: usize, per_class: usize, dim: usize, seed: u64) -> Self {
        SparseClassSpec {
            classes,
            per_class,
            dim,
            atoms_per_class: 2,
            sparsity: 2,
            coef_range: (1.0, 2.0),
            noise: 0.1,
            seed,
        }
    }
}

/// Signals built as sparse positive combinations of class-private atoms
/// plus noise. Returns the generating dictionary (class-major columns) and the
/// labelled set.
pub fn sparse_classes(spec: &SparseClassSpec) -> Result<(Dictionary, FeatureSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.classes * spec.atoms_per_class;
    let atoms = DMatrix::from_fn(spec.dim, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let truth = Dictionary::from_columns(atoms, Learner::Ksvd, spec.seed)?;
    let noise = Normal::new(0.0, spec.noise).map_err(|e| crate::Error::Spec(e.to_string()))?;
    let (lo, hi) = spec.coef_range;
    let mut rows = Vec::with_capacity(spec.classes * spec.per_class);
    for c in 0..spec.classes {
        for j in 0..spec.per_class {
            let mut x: Vec<f64> = (0..spec.dim).map(|_| rng.sample(noise)).collect();
            for a in rand::seq::index::sample(&mut rng, spec.atoms_per_class, spec.sparsity).iter() {
                let coef = rng.gen_range(lo..=hi);
                let atom = truth.atoms().column(c * spec.atoms_per_class + a);
                for (xr, v) in x.iter_mut().zip(atom.iter()) {
                    *xr += coef * v;
                }
            }
            rows.push((format!("s{c:02}_{j:03}"), format!("class{c:02}"), x));
        }
    }
    Ok((truth, FeatureSet::from_rows(rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_shape_and_labels() {
        let fs = separated_clusters(12, 5, 4, 20.0, 0.5, 1).unwrap();
        assert_eq!(fs.len(), 60);
        assert_eq!(fs.dim(), 4);
        assert_eq!(fs.classes().len(), 12);
        assert_eq!(fs, separated_clusters(12, 5, 4, 20.0, 0.5, 1).unwrap());
    }

    #[test]
    fn sparse_signals_lie_near_class_atoms() {
        let mut spec = SparseClassSpec::new(4, 6, 16, 2);
        spec.atoms_per_class = 1;
        spec.sparsity = 1;
        spec.noise = 0.0;
        let (truth, fs) = sparse_classes(&spec).unwrap();
        assert_eq!(truth.size(), 4);
        for (i, v) in fs.vectors().iter().enumerate() {
            let atom = truth.atom(i / 6);
            let norm = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            let cos: f64 = atom.iter().zip(&v.values).map(|(a, b)| a * b).sum::<f64>() / norm;
            assert!((cos - 1.0).abs() < 1e-12);
        }
    }
}
