use std::f64::consts::PI;

use super::ImageBuffer;
use crate::error::{Error, Result};

/// A bank of `scales x orientations` Gabor filters.
///
/// Orientation `n` (0-based) is `theta_n = pi * n / orientations`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborSpec {
    pub scales: usize,
    pub orientations: usize,
    /// Gaussian envelope width per scale, in pixels.
    pub sigma: Vec<f64>,
    /// Centre frequency per scale, in cycles per pixel.
    pub u0: Vec<f64>,
    pub kernel_radius: usize,
    /// Subtract the kernel mean before filtering so flat regions respond 0.
    pub zero_mean: bool,
}

impl Default for GaborSpec {
    /// Five scales and five orientations; sigma geometric from 2 to 8 px and
    /// `u0 = 1 / (2 sigma)`.
    fn default() -> Self {
        Self::geometric(5, 5, 2.0, 8.0)
    }
}

impl GaborSpec {
    pub fn geometric(scales: usize, orientations: usize, sigma_min: f64, sigma_max: f64) -> Self {
        let sigma: Vec<f64> = (0..scales)
            .map(|m| {
                if scales == 1 {
                    sigma_min
                } else {
                    sigma_min * (sigma_max / sigma_min).powf(m as f64 / (scales - 1) as f64)
                }
            })
            .collect();
        let u0 = sigma.iter().map(|s| 1.0 / (2.0 * s)).collect();
        let radius = (3.0 * sigma.iter().cloned().fold(0.0, f64::max)).ceil() as usize;
        GaborSpec {
            scales,
            orientations,
            sigma,
            u0,
            kernel_radius: radius,
            zero_mean: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 || self.orientations == 0 {
            return Err(Error::Spec("Gabor bank needs at least one scale and orientation".into()));
        }
        if self.sigma.len() != self.scales || self.u0.len() != self.scales {
            return Err(Error::Spec("sigma and u0 need one entry per scale".into()));
        }
        if self.sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Spec("sigma must be positive".into()));
        }
        Ok(())
    }

    pub fn feature_len(&self) -> usize {
        2 * self.scales * self.orientations
    }
}

/// Samples the filter at scale `m`, orientation `n` on `[-r, r]^2`, as a
/// row-major `(2r+1) x (2r+1)` grid (rows are `y`, columns are `x`).
pub fn gabor_kernel(spec: &GaborSpec, m: usize, n: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if m >= spec.scales || n >= spec.orientations {
        return Err(Error::Spec(format!(
            "filter ({m}, {n}) outside {}x{} bank",
            spec.scales, spec.orientations
        )));
    }
    let sigma = spec.sigma[m];
    let u0 = spec.u0[m];
    let theta = PI * n as f64 / spec.orientations as f64;
    let (s, c) = theta.sin_cos();
    let r = spec.kernel_radius as isize;
    let norm = 1.0 / (2.0 * PI * sigma * sigma);
    let mut out = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    for y in -r..=r {
        for x in -r..=r {
            let (x, y) = (x as f64, y as f64);
            let envelope = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
            out.push(norm * envelope * (2.0 * PI * (u0 * x * c + u0 * y * s)).cos());
        }
    }
    Ok(out)
}

/// Mean and standard deviation of `|response|` for every filter in the bank,
/// scale-major, orientation-minor, mean before std.
///
/// Filtering is same-size; pixels beyond the border repeat the nearest edge.
/// The kernel `g(x) g(y) cos(ax + by)` is split into the two separable terms
/// `g cos(ax) * g cos(by) - g sin(ax) * g sin(by)`, and the kernel mean (when
/// removed) into a separable box filter.
pub fn gabor_features(img: &ImageBuffer, spec: &GaborSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let gray = img.to_gray();
    let (w, h) = (img.width(), img.height());
    let r = spec.kernel_radius as isize;
    let box_sum = if spec.zero_mean {
        let ones = vec![1.0; (2 * r + 1) as usize];
        Some(separable_filter(&gray, w, h, &ones, &ones))
    } else {
        None
    };
    let mut out = Vec::with_capacity(spec.feature_len());
    for m in 0..spec.scales {
        let sigma = spec.sigma[m];
        let norm = 1.0 / (2.0 * PI * sigma * sigma);
        let envelope: Vec<f64> = (-r..=r)
            .map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp())
            .collect();
        for n in 0..spec.orientations {
            let theta = PI * n as f64 / spec.orientations as f64;
            let (a, b) = (2.0 * PI * spec.u0[m] * theta.cos(), 2.0 * PI * spec.u0[m] * theta.sin());
            let taps = |freq: f64, f: fn(f64) -> f64, scale: f64| -> Vec<f64> {
                (-r..=r)
                    .zip(&envelope)
                    .map(|(t, g)| scale * g * f(freq * t as f64))
                    .collect()
            };
            let cos_part = separable_filter(&gray, w, h, &taps(a, f64::cos, norm), &taps(b, f64::cos, 1.0));
            let sin_part = separable_filter(&gray, w, h, &taps(a, f64::sin, norm), &taps(b, f64::sin, 1.0));
            let kernel_mean = match box_sum {
                Some(_) => {
                    let k = gabor_kernel(spec, m, n)?;
                    k.iter().sum::<f64>() / k.len() as f64
                }
                None => 0.0,
            };
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for i in 0..w * h {
                let mut resp = cos_part[i] - sin_part[i];
                if let Some(boxed) = &box_sum {
                    resp -= kernel_mean * boxed[i];
                }
                let a = resp.abs();
                sum += a;
                sum_sq += a * a;
            }
            let count = (w * h) as f64;
            let mean = sum / count;
            out.push(mean);
            out.push((sum_sq / count - mean * mean).max(0.0).sqrt());
        }
    }
    Ok(out)
}

/// Same-size convolution with `kx` along rows then `ky` along columns
/// (both centred, odd length), replicating edge pixels.
fn separable_filter(img: &[f64], w: usize, h: usize, kx: &[f64], ky: &[f64]) -> Vec<f64> {
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &img[y * w..(y + 1) * w];
        for x in 0..w as isize {
            tmp[y * w + x as usize] = kx
                .iter()
                .enumerate()
                .map(|(i, k)| k * row[(x - (i as isize - rx)).clamp(0, w as isize - 1) as usize])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w {
            out[y as usize * w + x] = ky
                .iter()
                .enumerate()
                .map(|(i, k)| k * tmp[(y - (i as isize - ry)).clamp(0, h as isize - 1) as usize * w + x])
                .sum();
        }
    }
    out
}
