use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// One level of Haar approximation coefficients: `(x[2i] + x[2i+1]) / sqrt(2)`.
/// An odd trailing element contributes `2 * x[N-1] / sqrt(2)`.
pub fn haar_level(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Empty("Haar input".into()));
    }
    Ok(x
        .chunks(2)
        .map(|pair| match *pair {
            [a, b] => (a + b) / SQRT_2,
            [a] => 2.0 * a / SQRT_2,
            _ => unreachable!(),
        })
        .collect())
}

pub fn haar_reduce(x: &[f64], levels: usize) -> Result<Vec<f64>> {
    if levels == 0 {
        return Err(Error::Spec("DWT levels must be at least 1".into()));
    }
    let mut out = haar_level(x)?;
    for _ in 1..levels {
        out = haar_level(&out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let out = haar_level(&[1.0, 1.0]).unwrap();
        assert!((out[0] - 1.4142136).abs() < 1e-7);
        let out = haar_level(&[1.0, 2.0, 3.0]).unwrap();
        assert!((out[0] - 2.1213203).abs() < 1e-7);
        assert!((out[1] - 4.2426407).abs() < 1e-7);
    }

    #[test]
    fn dimension_ladder() {
        let x = vec![0.5; 4096];
        assert_eq!(haar_level(&x).unwrap().len(), 2048);
        assert_eq!(haar_reduce(&x, 2).unwrap().len(), 1024);
        assert_eq!(haar_reduce(&x, 3).unwrap().len(), 512);
        assert_eq!(haar_reduce(&x, 1).unwrap(), haar_level(&x).unwrap());
    }

    #[test]
    fn halves_every_length() {
        for n in 1..=5000 {
            assert_eq!(haar_level(&vec![1.0; n]).unwrap().len(), n.div_ceil(2));
        }
    }

    #[test]
    fn constant_collapses_to_scaled_value() {
        // Each level multiplies a constant by sqrt(2).
        for levels in 1..=6 {
            let out = haar_reduce(&vec![3.0; 1 << levels], levels).unwrap();
            assert_eq!(out.len(), 1);
            assert!((out[0] - 3.0 * 2f64.powf(levels as f64 / 2.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        assert!(haar_level(&[]).is_err());
        assert!(haar_reduce(&[1.0], 0).is_err());
    }
}
