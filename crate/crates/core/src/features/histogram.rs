use super::ImageBuffer;
use crate::error::{Error, Result};

/// Normalized joint RGB histogram (`bins^3` cells, red-major) or grey-level
/// histogram (`bins` cells).
pub fn color_histogram(img: &ImageBuffer, bins_per_channel: usize) -> Result<Vec<f64>> {
    if bins_per_channel == 0 {
        return Err(Error::Spec("histogram needs at least one bin".into()));
    }
    let b = bins_per_channel;
    let bin = |v: f64| ((v * b as f64) as usize).min(b - 1);
    let cells = if img.channels() == 3 { b * b * b } else { b };
    let mut hist = vec![0.0; cells];
    for px in img.pixels().chunks_exact(img.channels()) {
        let idx = match *px {
            [r, g, bl] => (bin(r) * b + bin(g)) * b + bin(bl),
            [v] => bin(v),
            _ => unreachable!(),
        };
        hist[idx] += 1.0;
    }
    let total = (img.width() * img.height()) as f64;
    hist.iter_mut().for_each(|h| *h /= total);
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn black_rgb() {
        let img = ImageBuffer::new(4, 3, 3, vec![0.0; 36]).unwrap();
        let h = color_histogram(&img, 2).unwrap();
        assert_eq!(h.len(), 8);
        assert_eq!(h[0], 1.0);
        assert!(h[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn half_black_half_white() {
        let img = ImageBuffer::from_fn(8, 4, |x, _| if x < 4 { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(color_histogram(&img, 2).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn sums_to_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for bins in [1, 3, 8] {
            let pixels: Vec<f64> = (0..17 * 11 * 3).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let img = ImageBuffer::new(17, 11, 3, pixels).unwrap();
            let sum: f64 = color_histogram(&img, bins).unwrap().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
