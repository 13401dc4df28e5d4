//! Learns a dictionary from synthetic 3-sparse signals and checks how many
//! of the generating atoms come back.

use cbir::data::FeatureSet;
use cbir::sparse::{build_dict_kmeans, train_ksvd, Dictionary, Learner};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> cbir::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = Dictionary::from_columns(DMatrix::from_fn(32, 16, |_, _| rng.sample(StandardNormal)), Learner::Ksvd, 0)?;
    let rows: Vec<_> = (0..400)
        .map(|i| {
            let mut x = vec![0.0; 32];
            for k in rand::seq::index::sample(&mut rng, 16, 3) {
                let c: f64 = rng.sample(StandardNormal);
                for (xr, a) in x.iter_mut().zip(truth.atoms().column(k).iter()) {
                    *xr += c * a;
                }
            }
            (format!("x{i}"), "all", x)
        })
        .collect();
    let fs = FeatureSet::from_rows(rows)?;

    let run = train_ksvd(&fs, 16, 3, 40, 1)?;
    for (i, obj) in run.objective_trace.iter().enumerate().step_by(10) {
        println!("iter {i:>3}  error {obj:.4}");
    }

    let matched = |learned: &DMatrix<f64>| {
        truth
            .atoms()
            .column_iter()
            .filter(|t| learned.column_iter().any(|l| l.dot(t).abs() > 0.99))
            .count()
    };
    println!("ksvd recovered {}/16 atoms", matched(run.dictionary.atoms()));

    let km = build_dict_kmeans(&fs, 16, 1, 100)?;
    println!("kmeans centroids matching an atom: {}/16", matched(km.atoms()));
    Ok(())
}
