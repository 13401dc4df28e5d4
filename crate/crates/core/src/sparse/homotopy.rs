//! Lasso homotopy: follow the piecewise-linear solution path from
//! `lambda_max` down to the requested weight, adding or dropping one atom at
//! each breakpoint.

use nalgebra::{DMatrix, DVector};

use super::{ClSpec, SolveOutcome, SparseCode, SparseCoder};
use crate::error::Result;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    Target,
    Add { atom: usize, sign: f64 },
    Drop { slot: usize },
}

impl SparseCoder {
    pub fn homotopy(&self, x: &[f64], spec: &ClSpec) -> Result<SolveOutcome> {
        let corr0 = self.correlate(x)?;
        let k = corr0.len();
        let gram = self.gram();

        // Entry point: the atom with the largest |correlation| (lowest index on ties).
        let (first, lam_max) = corr0
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, c)| if c.abs() > bv { (i, c.abs()) } else { (bi, bv) });
        let target = spec.lambda1.resolve(lam_max);
        let mut alpha = vec![0.0; k];
        if target >= lam_max {
            return Ok(SolveOutcome {
                code: SparseCode { coefficients: alpha },
                converged: true,
                iterations: 0,
                lambda: target,
            });
        }

        let mut active = vec![first];
        let mut signs = vec![corr0[first].signum()];
        let mut in_active = vec![false; k];
        in_active[first] = true;
        let mut lambda = lam_max;
        let mut just_dropped: Option<usize> = None;
        let mut converged = false;
        let mut iterations = 0;

        while iterations < spec.max_iter {
            iterations += 1;
            let direction = match solve_active(gram, &active, &signs) {
                Some(d) => d,
                None => break,
            };
            // Rate of change of every correlation per unit step.
            let mut slope = vec![0.0; k];
            for (&a, &da) in active.iter().zip(direction.iter()) {
                for (s, g) in slope.iter_mut().zip(gram.column(a).iter()) {
                    *s += g * da;
                }
            }
            let fitted: Vec<f64> = (0..k)
                .map(|j| gram.column(j).iter().zip(&alpha).map(|(g, a)| g * a).sum())
                .collect();

            let mut gamma = lambda - target;
            let mut event = Event::Target;
            for j in 0..k {
                if in_active[j] || Some(j) == just_dropped {
                    continue;
                }
                let c = corr0[j] - fitted[j];
                for (num, den, sign) in [(lambda - c, 1.0 - slope[j], 1.0), (lambda + c, 1.0 + slope[j], -1.0)] {
                    if den > EPS {
                        let g = (num / den).max(0.0);
                        if g < gamma {
                            gamma = g;
                            event = Event::Add { atom: j, sign };
                        }
                    }
                }
            }
            for (slot, (&a, &da)) in active.iter().zip(direction.iter()).enumerate() {
                if da != 0.0 {
                    let g = -alpha[a] / da;
                    if g > EPS && g < gamma {
                        gamma = g;
                        event = Event::Drop { slot };
                    }
                }
            }

            for (&a, &da) in active.iter().zip(direction.iter()) {
                alpha[a] += gamma * da;
            }
            lambda -= gamma;
            just_dropped = None;
            match event {
                Event::Target => {
                    converged = true;
                    break;
                }
                Event::Add { atom, sign } => {
                    active.push(atom);
                    signs.push(sign);
                    in_active[atom] = true;
                }
                Event::Drop { slot } => {
                    let atom = active.remove(slot);
                    signs.remove(slot);
                    in_active[atom] = false;
                    alpha[atom] = 0.0;
                    just_dropped = Some(atom);
                }
            }
        }
        Ok(SolveOutcome {
            code: SparseCode { coefficients: alpha },
            converged,
            iterations,
            lambda: target,
        })
    }
}

/// Solves `G_AA d = s` for the equiangular direction of the active set.
fn solve_active(gram: &DMatrix<f64>, active: &[usize], signs: &[f64]) -> Option<DVector<f64>> {
    let n = active.len();
    let sub = DMatrix::from_fn(n, n, |r, c| gram[(active[r], active[c])]);
    let rhs = DVector::from_column_slice(signs);
    if let Some(chol) = sub.clone().cholesky() {
        return Some(chol.solve(&rhs));
    }
    sub.lu().solve(&rhs)
}

#[cfg(test)]
mod tests {
    use super::super::tests::identity_dict;
    use super::super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_soft_threshold() {
        let d = identity_dict(2);
        let spec = ClSpec::new(ClAlgorithm::Homotopy).with_lambda(Lambda::Absolute(1.0));
        let out = solve_homotopy(&d, &[3.0, 0.5], &spec).unwrap();
        assert!(out.converged);
        assert!((out.code.coefficients[0] - 2.0).abs() < 1e-12);
        assert_eq!(out.code.coefficients[1], 0.0);
    }

    #[test]
    fn at_lambda_max_zero_code() {
        let d = identity_dict(3);
        let spec = ClSpec::new(ClAlgorithm::Homotopy).with_lambda(Lambda::Relative(1.0));
        let out = solve_homotopy(&d, &[1.0, -4.0, 2.0], &spec).unwrap();
        assert_eq!(out.code.nonzeros(), 0);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn matches_coordinate_descent_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let atoms = DMatrix::from_fn(10, 25, |_, _| rng.gen_range(-1.0..1.0));
            let d = Dictionary::from_columns(atoms, Learner::KMeans, 0).unwrap();
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lam = Lambda::Relative(0.1);
            let h = solve_homotopy(&d, &x, &ClSpec::new(ClAlgorithm::Homotopy).with_lambda(lam)).unwrap();
            let l = solve_lasso(
                &d,
                &x,
                &ClSpec::new(ClAlgorithm::Lasso)
                    .with_lambda(lam)
                    .with_tol(1e-12)
                    .with_max_iter(100_000),
            )
            .unwrap();
            assert!(h.converged);
            let oh = sr_objective(&d, &x, &h.code, h.lambda).unwrap();
            let ol = sr_objective(&d, &x, &l.code, l.lambda).unwrap();
            assert!((oh - ol).abs() < 1e-6, "{oh} vs {ol}");
            assert!(kkt_violation(&d, &x, &h.code, h.lambda).unwrap() < 1e-8);
        }
    }

    #[test]
    fn step_limit_flags_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let atoms = DMatrix::from_fn(10, 25, |_, _| rng.gen_range(-1.0..1.0));
        let d = Dictionary::from_columns(atoms, Learner::KMeans, 0).unwrap();
        let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = ClSpec::new(ClAlgorithm::Homotopy)
            .with_lambda(Lambda::Relative(0.01))
            .with_max_iter(1);
        assert!(!solve_homotopy(&d, &x, &spec).unwrap().converged);
    }
}
