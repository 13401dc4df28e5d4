//! Cyclic coordinate descent for the lasso and elastic net.

use nalgebra::DVector;

use super::{lambda_max_from, soft_threshold, ClSpec, SolveOutcome, SparseCode, SparseCoder};
use crate::error::Result;

impl SparseCoder {
    pub fn lasso(&self, x: &[f64], spec: &ClSpec) -> Result<SolveOutcome> {
        let corr = self.correlate(x)?;
        let lambda = spec.lambda1.resolve(lambda_max_from(&corr));
        Ok(self.coordinate_descent(&corr, lambda, 0.0, spec))
    }

    /// Minimizes `0.5||x - Da||^2 + l1 ||a||_1 + l2/2 ||a||^2`.
    pub fn elastic_net(&self, x: &[f64], spec: &ClSpec) -> Result<SolveOutcome> {
        let corr = self.correlate(x)?;
        let lambda = spec.lambda1.resolve(lambda_max_from(&corr));
        let lambda2 = spec.lambda2.unwrap_or(lambda);
        Ok(self.coordinate_descent(&corr, lambda, lambda2, spec))
    }

    fn coordinate_descent(
        &self,
        corr: &DVector<f64>,
        lambda1: f64,
        lambda2: f64,
        spec: &ClSpec,
    ) -> SolveOutcome {
        let k = corr.len();
        let gram = self.gram();
        let mut alpha = vec![0.0; k];
        // gram * alpha, maintained incrementally
        let mut fitted = vec![0.0; k];
        let mut converged = false;
        let mut iterations = 0;
        while iterations < spec.max_iter {
            iterations += 1;
            let mut max_step: f64 = 0.0;
            for j in 0..k {
                let gjj = gram[(j, j)];
                let rho = corr[j] - fitted[j] + gjj * alpha[j];
                let next = soft_threshold(rho, lambda1) / (gjj + lambda2);
                let step = next - alpha[j];
                if step != 0.0 {
                    alpha[j] = next;
                    for (f, g) in fitted.iter_mut().zip(gram.column(j).iter()) {
                        *f += step * g;
                    }
                    max_step = max_step.max(step.abs());
                }
            }
            if max_step < spec.tol {
                converged = true;
                break;
            }
        }
        SolveOutcome {
            code: SparseCode {
                coefficients: alpha,
            },
            converged,
            iterations,
            lambda: lambda1,
        }
    }
}
