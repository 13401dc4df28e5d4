//! DCT truncation, Haar levels, PDF histogram and train-fitted z-score / PCA
//! on a 4096-dimensional random set.

use cbir::reduce::{dct_forward, dct_keep, haar_reduce, pca_fit, pca_project, pdf_reduce, zscore_apply, zscore_fit, DctSpec, PdfSpec};
use cbir::synth::separated_clusters;

fn main() -> cbir::Result<()> {
    let fs = separated_clusters(4, 25, 4096, 3.0, 1.0, 7)?;
    let x = &fs.vectors()[0].values;

    let coeffs = dct_forward(x)?;
    let energy = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>();
    let kept = dct_keep(&coeffs, DctSpec::Keep(300))?;
    println!("dct: energy {:.3} -> {:.3} (300 coefficients keep {:.1}%)",
        energy(x), energy(&coeffs), 100.0 * energy(&kept) / energy(&coeffs));

    for levels in 1..=3 {
        println!("haar level {levels}: {} dims", haar_reduce(x, levels)?.len());
    }

    let pdf = pdf_reduce(x, &PdfSpec::auto(16))?;
    let bars: String = pdf.probabilities.iter().map(|p| if *p > 0.1 { '#' } else if *p > 0.01 { '+' } else { '.' }).collect();
    println!("pdf(16): {bars}  sum {:.12}", pdf.probabilities.iter().sum::<f64>());

    let z = zscore_fit(&fs)?;
    let zx = zscore_apply(&z, x)?;
    println!("zscore: first coords {:.3?}", &zx[..4]);

    let pca = pca_fit(&fs, 5)?;
    println!("pca(5): {:.3?}", pca_project(&pca, x)?);
    Ok(())
}
