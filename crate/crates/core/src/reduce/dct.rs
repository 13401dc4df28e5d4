//! Orthonormal DCT-II and its inverse, computed through a length-2N FFT.
//!
//! `X_k = sqrt(2/N) * c_k * sum_n x_n cos(pi (2n+1) k / 2N)` with
//! `c_0 = 1/sqrt(2)` and `c_k = 1` otherwise (0-based indices), so `X_0` is
//! the DC coefficient and the transform preserves the l2 norm.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many leading DCT coefficients to retain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DctSpec {
    Keep(usize),
    All,
}

impl fmt::Display for DctSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DctSpec::Keep(k) => write!(f, "{k}"),
            DctSpec::All => f.write_str("all"),
        }
    }
}

impl FromStr for DctSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(DctSpec::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(DctSpec::Keep(k)),
            _ => Err(Error::Spec(format!("DCT keep must be `all` or an integer >= 1, got `{s}`"))),
        }
    }
}

/// Precomputed FFT plans and twiddles for one signal length.
pub struct DctPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    twiddles: Vec<Complex64>,
}

impl fmt::Debug for DctPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DctPlan").field("len", &self.len).finish()
    }
}

impl DctPlan {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Empty("DCT input".into()));
        }
        let mut planner = FftPlanner::new();
        let twiddles = (0..len)
            .map(|k| Complex64::from_polar(1.0, -PI * k as f64 / (2 * len) as f64))
            .collect();
        Ok(DctPlan {
            len,
            forward: planner.plan_fft_forward(2 * len),
            inverse: planner.plan_fft_inverse(2 * len),
            twiddles,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.len, x.len())?;
        let n = self.len;
        // Even extension [x, reverse(x)] turns the DCT-II into a DFT.
        let mut buf: Vec<Complex64> = x
            .iter()
            .chain(x.iter().rev())
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.forward.process(&mut buf);
        let scale = (2.0 / n as f64).sqrt() * 0.5;
        Ok((0..n)
            .map(|k| {
                let c = if k == 0 { FRAC_1_SQRT_2 } else { 1.0 };
                scale * c * (self.twiddles[k] * buf[k]).re
            })
            .collect())
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.len, coeffs.len())?;
        let n = self.len;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (k, (&c, slot)) in coeffs.iter().zip(buf.iter_mut()).enumerate() {
            let w = if k == 0 { FRAC_1_SQRT_2 } else { 1.0 };
            *slot = self.twiddles[k].conj() * (w * c);
        }
        self.inverse.process(&mut buf);
        let scale = (2.0 / n as f64).sqrt();
        Ok(buf[..n].iter().map(|z| scale * z.re).collect())
    }
}

pub fn dct_forward(x: &[f64]) -> Result<Vec<f64>> {
    DctPlan::new(x.len())?.forward(x)
}

pub fn dct_inverse(coeffs: &[f64]) -> Result<Vec<f64>> {
    DctPlan::new(coeffs.len())?.inverse(coeffs)
}

/// The DC coefficient plus the `keep - 1` lowest-frequency AC coefficients.
pub fn dct_keep(coeffs: &[f64], spec: DctSpec) -> Result<Vec<f64>> {
    match spec {
        DctSpec::All => Ok(coeffs.to_vec()),
        DctSpec::Keep(0) => Err(Error::Spec("DCT keep must be at least 1".into())),
        DctSpec::Keep(k) if k > coeffs.len() => Err(Error::Spec(format!(
            "cannot keep {k} DCT coefficients of {}",
            coeffs.len()
        ))),
        DctSpec::Keep(k) => Ok(coeffs[..k].to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct O(N^2) evaluation of the 1-based cosine sum.
    fn dct_naive(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (1..=n)
            .map(|k| {
                let delta: f64 = if k == 1 { 1.0 } else { 0.0 };
                let s: f64 = (1..=n)
                    .map(|i| {
                        x[i - 1]
                            * (PI * (2 * i - 1) as f64 * (k - 1) as f64 / (2 * n) as f64).cos()
                    })
                    .sum();
                (2.0 / n as f64).sqrt() / (1.0 + delta).sqrt() * s
            })
            .collect()
    }

    #[test]
    fn constant_signal_is_all_dc() {
        let out = dct_forward(&[1.0; 4]).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-12);
        assert!(out[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn two_point_hand_value() {
        let out = dct_forward(&[1.0, 0.0]).unwrap();
        assert!((out[0] - 0.7071068).abs() < 1e-7);
        assert!((out[1] - 0.7071068).abs() < 1e-7);
    }

    #[test]
    fn matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 3, 7, 16, 33, 100] {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = dct_forward(&x).unwrap();
            for (a, b) in fast.iter().zip(dct_naive(&x)) {
                assert!((a - b).abs() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn norm_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let plan = DctPlan::new(64).unwrap();
        let y = plan.forward(&x).unwrap();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((norm(&x) - norm(&y)).abs() < 1e-9);
        let back = plan.inverse(&y).unwrap();
        for (a, b) in x.iter().zip(back) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn keep_prefix() {
        assert_eq!(dct_keep(&[2.0, 0.0, 0.0, 0.0], DctSpec::Keep(1)).unwrap(), vec![2.0]);
        let x: Vec<f64> = (0..4096).map(f64::from).collect();
        assert_eq!(dct_keep(&x, DctSpec::Keep(300)).unwrap(), x[..300]);
        assert_eq!(dct_keep(&x, DctSpec::All).unwrap(), x);
        assert!(dct_keep(&x[..3], DctSpec::Keep(4)).is_err());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(dct_forward(&[]), Err(Error::Empty(_))));
    }
}
