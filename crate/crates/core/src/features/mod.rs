//! Low-level image features: Gabor texture statistics, colour histograms, HOG.

mod gabor;
mod histogram;
mod hog;

use std::path::Path;

use crate::error::{Error, Result};

pub use gabor::{gabor_features, gabor_kernel, GaborSpec};
pub use histogram::color_histogram;
pub use hog::hog_features;

/// Row-major image with 1 (grey) or 3 (RGB, interleaved) channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Data("image has zero width or height".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Data(format!("unsupported channel count {channels}")));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::Data(format!(
                "expected {} pixel values, got {}",
                width * height * channels,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Data("pixel values must lie in [0, 1]".into()));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, 1, pixels)
    }

    /// Decodes a PNG/JPEG/BMP/PNM file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        let (width, height) = (img.width() as usize, img.height() as usize);
        let (channels, pixels) = if img.color().has_color() {
            let rgb = img.to_rgb8();
            (3, rgb.into_raw())
        } else {
            (1, img.to_luma8().into_raw())
        };
        let pixels = pixels.into_iter().map(|p| p as f64 / 255.0).collect();
        Self::new(width, height, channels, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Grey levels (ITU-R 601 luma for RGB input).
    pub fn to_gray(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.pixels.clone();
        }
        self.pixels
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }
}
