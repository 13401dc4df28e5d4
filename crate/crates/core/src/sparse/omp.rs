use nalgebra::{DMatrix, DVector};

use super::{SparseCode, SparseCoder};
use crate::error::{Error, Result};

impl SparseCoder {
    /// Orthogonal matching pursuit: pick the atom most correlated with the
    /// residual, refit all picked atoms by least squares, repeat up to `t` times.
    pub fn omp(&self, x: &[f64], t: usize) -> Result<SparseCode> {
        let dict = self.dictionary();
        let k = dict.size();
        if t > k {
            return Err(Error::Spec(format!("OMP sparsity {t} exceeds dictionary size {k}")));
        }
        let xv = DVector::from_column_slice(x);
        let corr0 = self.correlate(x)?;
        let x_norm = xv.norm();
        let mut selected: Vec<usize> = Vec::with_capacity(t);
        let mut coef = DVector::<f64>::zeros(0);
        let mut residual = xv.clone();

        for _ in 0..t {
            if residual.norm() <= 1e-12 * x_norm.max(1e-300) {
                break;
            }
            let corr = dict.atoms().tr_mul(&residual);
            let mut best = None;
            let mut best_val = 0.0;
            for (j, c) in corr.iter().enumerate() {
                if c.abs() > best_val && !selected.contains(&j) {
                    best = Some(j);
                    best_val = c.abs();
                }
            }
            let Some(j) = best else { break };
            if best_val <= 1e-14 * x_norm {
                break;
            }
            selected.push(j);
            coef = self.least_squares(&selected, &corr0, &xv);
            residual = &xv - self.sub_atoms(&selected) * &coef;
        }

        let mut coefficients = vec![0.0; k];
        for (&j, &c) in selected.iter().zip(coef.iter()) {
            coefficients[j] = c;
        }
        Ok(SparseCode { coefficients })
    }

    fn sub_atoms(&self, selected: &[usize]) -> DMatrix<f64> {
        let atoms = self.dictionary().atoms();
        DMatrix::from_fn(atoms.nrows(), selected.len(), |r, c| atoms[(r, selected[c])])
    }

    fn least_squares(&self, selected: &[usize], corr0: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let n = selected.len();
        let gram = self.gram();
        let sub = DMatrix::from_fn(n, n, |r, c| gram[(selected[r], selected[c])]);
        let rhs = DVector::from_fn(n, |r, _| corr0[selected[r]]);
        if let Some(chol) = sub.cholesky() {
            return chol.solve(&rhs);
        }
        // Nearly dependent atoms: fall back to a rank-revealing solve.
        let svd = self.sub_atoms(selected).svd(true, true);
        svd.solve(x, 1e-12).unwrap_or_else(|_| DVector::zeros(n))
    }
}
