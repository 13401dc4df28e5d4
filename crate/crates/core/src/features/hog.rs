use std::f64::consts::PI;

use super::ImageBuffer;
use crate::error::{Error, Result};

const BLOCK_EPS: f64 = 1e-5;

/// Histogram of oriented gradients.
///
/// Gradients use the centred `[-1, 0, 1]` operator in both directions (edges
/// replicated). Unsigned orientations in `[0, pi)` vote into `bins` bins
/// centred at `k * pi / bins`, weighted by magnitude and split linearly
/// between the two nearest centres. Cells are `cell x cell` pixels; blocks of
/// 2x2 cells (fewer if the image is only one cell wide or tall) slide by one
/// cell and are l2-normalized with `eps = 1e-5`.
pub fn hog_features(img: &ImageBuffer, cell: usize, bins: usize) -> Result<Vec<f64>> {
    if cell == 0 || bins == 0 {
        return Err(Error::Spec("HOG cell size and bin count must be positive".into()));
    }
    let (w, h) = (img.width(), img.height());
    if w < cell || h < cell {
        return Err(Error::Data(format!(
            "{w}x{h} image is smaller than one {cell}x{cell} cell"
        )));
    }
    let gray = img.to_gray();
    let at = |x: isize, y: isize| {
        gray[(y.clamp(0, h as isize - 1) as usize) * w + x.clamp(0, w as isize - 1) as usize]
    };
    let (cells_x, cells_y) = (w / cell, h / cell);
    let mut hist = vec![0.0; cells_x * cells_y * bins];
    let width = PI / bins as f64;
    for y in 0..cells_y * cell {
        for x in 0..cells_x * cell {
            let (xi, yi) = (x as isize, y as isize);
            let gx = at(xi + 1, yi) - at(xi - 1, yi);
            let gy = at(xi, yi + 1) - at(xi, yi - 1);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let theta = gy.atan2(gx).rem_euclid(PI);
            let pos = theta / width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = (lo as usize) % bins;
            let base = ((y / cell) * cells_x + x / cell) * bins;
            hist[base + lo] += mag * (1.0 - frac);
            hist[base + (lo + 1) % bins] += mag * frac;
        }
    }

    let (bx, by) = (cells_x.min(2), cells_y.min(2));
    let mut out = Vec::with_capacity((cells_x - bx + 1) * (cells_y - by + 1) * bx * by * bins);
    for block_y in 0..=cells_y - by {
        for block_x in 0..=cells_x - bx {
            let start = out.len();
            for cy in block_y..block_y + by {
                for cx in block_x..block_x + bx {
                    let base = (cy * cells_x + cx) * bins;
                    out.extend_from_slice(&hist[base..base + bins]);
                }
            }
            let norm = (out[start..].iter().map(|v| v * v).sum::<f64>() + BLOCK_EPS * BLOCK_EPS).sqrt();
            out[start..].iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(out)
}
