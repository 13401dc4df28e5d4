//! Drives the command line front end in-process, then replays the run from
//! its manifest and checks the report is unchanged.

use cbir::cli::{replay, run_with, RunManifest};
use cbir::data::{save_feature_set, write_manifest, FeatureFormat};
use cbir::synth::separated_clusters;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("cbir-cli-replay");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir)?;
    let fs = separated_clusters(4, 12, 16, 5.0, 1.0, 9)?;
    save_feature_set(&fs, dir.join("f.csv"), FeatureFormat::Csv)?;
    write_manifest(&fs, dir.join("m.csv"))?;

    let p = |s: &str| dir.join(s).display().to_string();
    let argv = ["cbir", "evaluate", "--features", &p("f.csv"), "--manifest", &p("m.csv"),
        "--split", "holdout", "--test-per-class", "3", "--dct", "--zscore", "--metric", "hd", "--out", &p("run")];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(&argv.map(String::from), &mut out, &mut err);
    print!("{}", String::from_utf8_lossy(&out));
    eprint!("{}", String::from_utf8_lossy(&err));
    assert_eq!(code, 0);

    let first = std::fs::read(dir.join("run/report.json"))?;
    let manifest = dir.join("run/manifest.json");
    println!("recorded seeds {:?}", RunManifest::load(&manifest)?.seeds);
    replay(&manifest, &mut std::io::sink(), &mut std::io::stderr())?;
    println!("replay identical: {}", first == std::fs::read(dir.join("run/report.json"))?);
    Ok(())
}
