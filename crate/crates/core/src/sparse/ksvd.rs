//! K-SVD dictionary learning.
//!
//! Alternates a sparse-coding stage (OMP with at most `T` atoms per signal)
//! with a sweep of rank-1 atom updates. Each atom update takes the leading
//! singular pair of the residual restricted to the signals that use the atom,
//! which is the exact minimizer over that atom and its coefficients.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dictionary, Learner, SparseCode, SparseCoder};
use crate::data::FeatureSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KsvdTraining {
    pub dictionary: Dictionary,
    /// Final codes, one per training vector in row order.
    pub codes: Vec<SparseCode>,
    /// `sum_i ||x_i - D a_i||^2` after each iteration.
    pub objective_trace: Vec<f64>,
}

pub fn build_dict_ksvd(train: &FeatureSet, k: usize, sparsity: usize, iters: usize, seed: u64) -> Result<Dictionary> {
    Ok(train_ksvd(train, k, sparsity, iters, seed)?.dictionary)
}

pub fn train_ksvd(train: &FeatureSet, k: usize, sparsity: usize, iters: usize, seed: u64) -> Result<KsvdTraining> {
    let n = train.len();
    if k > n {
        return Err(Error::Spec(format!("K={k} exceeds {n} training vectors")));
    }
    if sparsity == 0 || sparsity > k {
        return Err(Error::Spec(format!("sparsity T={sparsity} must lie in 1..={k}")));
    }
    let d = train.dim();
    let signals = DMatrix::from_fn(d, n, |r, c| train.vectors()[c].values[r]);

    let nonzero: Vec<usize> = (0..n).filter(|&i| signals.column(i).norm() > 0.0).collect();
    if nonzero.len() < k {
        return Err(Error::Spec(format!(
            "K={k} exceeds the {} non-zero training vectors",
            nonzero.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, nonzero.len(), k);
    let init = DMatrix::from_fn(d, k, |r, c| signals[(r, nonzero[picks.index(c)])]);
    let mut dict = Dictionary::from_columns(init, Learner::Ksvd, seed)?;
    let mut codes = DMatrix::<f64>::zeros(k, n);
    let mut trace = Vec::with_capacity(iters);

    for _ in 0..iters {
        let mut residual = sparse_coding_stage(&dict, &signals, &mut codes, sparsity)?;
        let mut atoms = dict.atoms().clone();
        let mut replaced = vec![false; n];
        for atom in 0..k {
            let users: Vec<usize> = (0..n).filter(|&i| codes[(atom, i)] != 0.0).collect();
            if users.is_empty() {
                replace_unused_atom(&mut atoms, atom, &signals, &residual, &mut replaced);
                continue;
            }
            let column = atoms.column(atom).clone_owned();
            let restricted = DMatrix::from_fn(d, users.len(), |r, c| {
                residual[(r, users[c])] + column[r] * codes[(atom, users[c])]
            });
            let (u, sigma, v) = leading_singular_triplet(restricted.clone());
            atoms.set_column(atom, &u);
            for (c, &i) in users.iter().enumerate() {
                codes[(atom, i)] = sigma * v[c];
                for r in 0..d {
                    residual[(r, i)] = restricted[(r, c)] - u[r] * codes[(atom, i)];
                }
            }
        }
        dict = Dictionary::from_columns(atoms, Learner::Ksvd, seed)?;
        trace.push((&signals - dict.atoms() * &codes).norm_squared());
    }

    let codes = (0..n)
        .map(|i| SparseCode {
            coefficients: codes.column(i).iter().copied().collect(),
        })
        .collect();
    Ok(KsvdTraining {
        dictionary: dict,
        codes,
        objective_trace: trace,
    })
}

/// Recodes every signal with OMP, keeping the previous code whenever it has
/// the smaller residual under the current dictionary. Returns `X - D A`.
fn sparse_coding_stage(
    dict: &Dictionary,
    signals: &DMatrix<f64>,
    codes: &mut DMatrix<f64>,
    sparsity: usize,
) -> Result<DMatrix<f64>> {
    let coder = SparseCoder::new(dict);
    let mut residual = signals - dict.atoms() * &*codes;
    for i in 0..signals.ncols() {
        let x: Vec<f64> = signals.column(i).iter().copied().collect();
        let fresh = coder.omp(&x, sparsity)?;
        let fresh_res = DVector::from_column_slice(&x) - dict.reconstruct(&fresh.coefficients);
        if fresh_res.norm_squared() <= residual.column(i).norm_squared() {
            codes.set_column(i, &DVector::from_vec(fresh.coefficients));
            residual.set_column(i, &fresh_res);
        }
    }
    Ok(residual)
}

/// Swaps an unused atom for the (normalized) worst-represented training vector.
fn replace_unused_atom(
    atoms: &mut DMatrix<f64>,
    atom: usize,
    signals: &DMatrix<f64>,
    residual: &DMatrix<f64>,
    replaced: &mut [bool],
) {
    let worst = (0..signals.ncols())
        .filter(|&i| !replaced[i])
        .map(|i| (i, residual.column(i).norm_squared()))
        .fold(None, |best: Option<(usize, f64)>, (i, e)| match best {
            Some((_, be)) if be >= e => best,
            _ => Some((i, e)),
        });
    if let Some((i, err)) = worst {
        let x = signals.column(i);
        let norm = x.norm();
        if err > 0.0 && norm > 0.0 {
            replaced[i] = true;
            atoms.set_column(atom, &(x / norm));
        }
    }
}

fn leading_singular_triplet(m: DMatrix<f64>) -> (DVector<f64>, f64, DVector<f64>) {
    let svd = m.svd(true, true);
    let best = svd.singular_values.imax();
    let u = svd.u.expect("requested U").column(best).clone_owned();
    let v = svd.v_t.expect("requested V^T").row(best).transpose();
    (u, svd.singular_values[best], v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn synthetic(d: usize, k: usize, n: usize, t: usize, seed: u64) -> (Dictionary, FeatureSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let atoms = DMatrix::from_fn(d, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let truth = Dictionary::from_columns(atoms, Learner::Ksvd, seed).unwrap();
        let rows = (0..n).map(|i| {
            let support = rand::seq::index::sample(&mut rng, k, t);
            let mut x = vec![0.0; d];
            for j in support.iter() {
                let c: f64 = rng.sample(StandardNormal);
                for (xr, a) in x.iter_mut().zip(truth.atoms().column(j).iter()) {
                    *xr += c * a;
                }
            }
            (format!("s{i}"), "c", x)
        });
        let fs = FeatureSet::from_rows(rows).unwrap();
        (truth, fs)
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let (_, fs) = synthetic(8, 5, 30, 2, 1);
        let out = train_ksvd(&fs, 5, 2, 0, 4).unwrap();
        assert!(out.objective_trace.is_empty());
        for k in 0..5 {
            let atom = out.dictionary.atom(k);
            let matches_input = fs.vectors().iter().any(|v| {
                let norm = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.values.iter().zip(&atom).all(|(a, b)| (a / norm - b).abs() < 1e-12)
            });
            assert!(matches_input);
        }
    }

    #[test]
    fn objective_nonincreasing_and_unit_atoms() {
        let (_, fs) = synthetic(16, 8, 120, 2, 2);
        let out = train_ksvd(&fs, 8, 2, 15, 5).unwrap();
        for w in out.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        for col in out.dictionary.atoms().column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let (_, fs) = synthetic(10, 6, 60, 2, 3);
        let a = build_dict_ksvd(&fs, 6, 2, 5, 9).unwrap();
        let b = build_dict_ksvd(&fs, 6, 2, 5, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_specs() {
        let (_, fs) = synthetic(6, 4, 10, 1, 0);
        assert!(train_ksvd(&fs, 11, 1, 1, 0).is_err());
        assert!(train_ksvd(&fs, 4, 0, 1, 0).is_err());
        assert!(train_ksvd(&fs, 4, 5, 1, 0).is_err());
    }
}
