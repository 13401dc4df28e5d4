use cbir::data::SplitSpec;
use cbir::eval::{run_experiments, ExperimentConfig};
use cbir::metrics::MetricKind;
use cbir::reduce::DctSpec;
use cbir::retrieval::StageSpec;
use cbir::synth::separated_clusters;

fn main() -> cbir::Result<()> {
    let fs = separated_clusters(10, 20, 64, 6.0, 1.5, 1)?;
    let config = ExperimentConfig::new(
        SplitSpec::loocv(),
        vec![StageSpec::Dct { keep: DctSpec::All }, StageSpec::ZScore],
        MetricKind::Euclidean,
    );
    for exp in run_experiments(&fs, &config, &MetricKind::ALL)? {
        let r = &exp.report;
        println!("{}", r.summary_line());
        let worst = r.per_class_map.iter().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        println!("    hardest class {} ({:.3}), P@1 {:.3}", worst.0, worst.1, 1.0 - r.er);
    }
    Ok(())
}
