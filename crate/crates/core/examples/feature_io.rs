//! Writes a small labelled set as CSV and as the binary container, then
//! reads both back.

use cbir::data::{load_feature_set, save_feature_set, write_manifest, FeatureFormat};
use cbir::synth::separated_clusters;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("cbir-feature-io");
    std::fs::create_dir_all(&dir)?;
    let fs = separated_clusters(3, 4, 6, 10.0, 0.5, 42)?;
    let manifest = dir.join("manifest.csv");
    write_manifest(&fs, &manifest)?;

    for (name, format) in [("features.csv", FeatureFormat::Csv), ("features.bin", FeatureFormat::Binary)] {
        let path = dir.join(name);
        save_feature_set(&fs, &path, format)?;
        let back = load_feature_set(&path, &manifest)?;
        let bytes = std::fs::metadata(&path)?.len();
        // the binary container stores f32, so compare loosely
        let worst = fs
            .vectors()
            .iter()
            .zip(back.vectors())
            .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        println!("{name}: {} vectors, dim {}, {bytes} bytes, max abs diff {worst:.2e}", back.len(), back.dim());
    }
    println!("classes: {:?}", fs.classes());
    Ok(())
}
