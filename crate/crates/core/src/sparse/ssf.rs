//! Separable-surrogate iterative shrinkage.
//!
//! Each step minimizes the quadratic surrogate
//! `c/2 ||a - (a_k + D^T(x - D a_k)/c)||^2 + lambda ||a||_1`, which separates
//! per coordinate into a soft threshold at `lambda / c`.

use super::{lambda_max_from, soft_threshold, ClSpec, SolveOutcome, SparseCode, SparseCoder};
use crate::error::Result;

impl SparseCoder {
    pub fn ssf(&self, x: &[f64], spec: &ClSpec) -> Result<SolveOutcome> {
        let corr = self.correlate(x)?;
        let lambda = spec.lambda1.resolve(lambda_max_from(&corr));
        let k = corr.len();
        let c = self.lipschitz();
        let threshold = lambda / c;
        let gram = self.gram();

        let mut alpha = vec![0.0; k];
        let mut next = vec![0.0; k];
        let mut converged = false;
        let mut iterations = 0;
        while iterations < spec.max_iter {
            iterations += 1;
            let mut step_sq = 0.0;
            for j in 0..k {
                // d_j^T (x - D a) = corr_j - (G a)_j
                let g_alpha: f64 = gram.column(j).iter().zip(&alpha).map(|(g, a)| g * a).sum();
                let v = soft_threshold(alpha[j] + (corr[j] - g_alpha) / c, threshold);
                step_sq += (v - alpha[j]) * (v - alpha[j]);
                next[j] = v;
            }
            std::mem::swap(&mut alpha, &mut next);
            if step_sq.sqrt() < spec.tol {
                converged = true;
                break;
            }
        }
        Ok(SolveOutcome {
            code: SparseCode {
                coefficients: alpha,
            },
            converged,
            iterations,
            lambda,
        })
    }
}
