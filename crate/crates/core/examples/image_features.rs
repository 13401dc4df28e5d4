//! Colour histogram, HOG and Gabor descriptors on generated images.

use cbir::features::{color_histogram, gabor_features, hog_features, GaborSpec, ImageBuffer};
use cbir::metrics::euclidean;

fn stripes(angle: f64, period: f64) -> cbir::Result<ImageBuffer> {
    let (s, c) = angle.sin_cos();
    ImageBuffer::from_fn(64, 64, |x, y| {
        let t = (x as f64 * c + y as f64 * s) * std::f64::consts::TAU / period;
        0.5 + 0.5 * t.sin()
    })
}

fn main() -> cbir::Result<()> {
    let imgs = [
        ("horizontal", stripes(0.0, 8.0)?),
        ("horizontal-fine", stripes(0.0, 4.0)?),
        ("diagonal", stripes(std::f64::consts::FRAC_PI_4, 8.0)?),
    ];
    let spec = GaborSpec::default();
    let mut descriptors = Vec::new();
    for (name, img) in &imgs {
        let hist = color_histogram(img, 8)?;
        let hog = hog_features(img, 8, 9)?;
        let gabor = gabor_features(img, &spec)?;
        println!("{name:<16} hist {} hog {} gabor {}", hist.len(), hog.len(), gabor.len());
        descriptors.push(gabor);
    }
    for i in 0..imgs.len() {
        for j in i + 1..imgs.len() {
            println!("gabor ed {} vs {}: {:.4}", imgs[i].0, imgs[j].0, euclidean(&descriptors[i], &descriptors[j])?);
        }
    }
    Ok(())
}
