//! Learned dictionary, sparse codes as features, hold-out evaluation.
//! Compares raw features against the coded ones.

use cbir::data::SplitSpec;
use cbir::eval::{run_experiment, ExperimentConfig};
use cbir::metrics::MetricKind;
use cbir::retrieval::{DictLearnSpec, DictSource, StageSpec};
use cbir::sparse::{ClAlgorithm, ClSpec, Learner};
use cbir::synth::{sparse_classes, SparseClassSpec};

fn main() -> cbir::Result<()> {
    let mut spec = SparseClassSpec::new(10, 40, 64, 5);
    spec.atoms_per_class = 3;
    spec.noise = 0.3;
    let (_, fs) = sparse_classes(&spec)?;
    let split = SplitSpec::holdout(10, 0);

    let raw = run_experiment(&fs, &ExperimentConfig::new(split, vec![], MetricKind::Euclidean))?;
    println!("{}", raw.report.summary_line());

    for (learner, cl) in [(Learner::Ksvd, ClAlgorithm::Homotopy), (Learner::KMeans, ClAlgorithm::Ssf)] {
        let stages = vec![StageSpec::SparseEncode {
            dict: DictSource::Learn(DictLearnSpec::new(learner, 10, 0)),
            cl: ClSpec::new(cl),
        }];
        let exp = run_experiment(&fs, &ExperimentConfig::new(split, stages, MetricKind::Euclidean))?;
        println!("{}  ({:.2}s)", exp.report.summary_line(), exp.report.wall_clock_secs);
    }
    Ok(())
}
