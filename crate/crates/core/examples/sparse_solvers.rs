//! Solves one lasso problem with every coder and compares objectives.

use cbir::sparse::{lambda_max, sparse_omp, ClAlgorithm, ClSpec, Dictionary, Lambda, Learner, SparseCoder};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> cbir::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dict = Dictionary::from_columns(DMatrix::from_fn(20, 50, |_, _| rng.sample(StandardNormal)), Learner::Ksvd, 3)?;
    // x = 2 * atom 4 - atom 17 + noise
    let x: Vec<f64> = (0..20)
        .map(|i| 2.0 * dict.atoms()[(i, 4)] - dict.atoms()[(i, 17)] + 0.05 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let coder = SparseCoder::new(&dict);
    let lmax = lambda_max(&dict, &x)?;
    println!("lambda_max = {lmax:.4}");

    for alg in [ClAlgorithm::Homotopy, ClAlgorithm::Lasso, ClAlgorithm::ElasticNet, ClAlgorithm::Ssf] {
        let spec = ClSpec::new(alg).with_lambda(Lambda::Relative(0.1)).with_tol(1e-10).with_max_iter(100_000);
        let out = coder.solve(&x, &spec)?;
        let support: Vec<usize> = (0..dict.size()).filter(|&k| out.code.coefficients[k] != 0.0).collect();
        println!(
            "{:<9} obj {:.8}  iters {:>6}  support {:?}",
            alg.code(),
            coder.objective(&x, &out.code, out.lambda)?,
            out.iterations,
            support
        );
    }

    let omp = sparse_omp(&dict, &x, 2)?;
    println!("omp(2)    residual {:.4}", dict.residual_norm(&x, &omp.coefficients)?);
    Ok(())
}
