use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdfRange {
    /// Per-vector min/max.
    Auto,
    Explicit { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdfSpec {
    pub bins: usize,
    pub range: PdfRange,
}

impl PdfSpec {
    pub fn auto(bins: usize) -> Self {
        PdfSpec {
            bins,
            range: PdfRange::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdfHistogram {
    pub probabilities: Vec<f64>,
    /// Values that fell outside an explicit range and were clamped to an end bin.
    pub clamped: usize,
}

/// Normalized equal-width histogram of the values of `x`.
///
/// Value `v` goes to bin `floor((v - lo) / w)`; the last bin is
/// right-inclusive. With an automatic range and a constant input all mass
/// lands in the first bin.
pub fn pdf_reduce(x: &[f64], spec: &PdfSpec) -> Result<PdfHistogram> {
    if spec.bins == 0 {
        return Err(Error::Spec("PDF needs at least one bin".into()));
    }
    if x.is_empty() {
        return Err(Error::Empty("PDF input".into()));
    }
    let (lo, hi) = match spec.range {
        PdfRange::Auto => x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            }),
        PdfRange::Explicit { lo, hi } if lo < hi => (lo, hi),
        PdfRange::Explicit { lo, hi } => {
            return Err(Error::Spec(format!("PDF range [{lo}, {hi}] is empty")))
        }
    };
    let mut counts = vec![0usize; spec.bins];
    let mut clamped = 0;
    let width = (hi - lo) / spec.bins as f64;
    for &v in x {
        if v < lo || v > hi {
            clamped += 1;
        }
        let bin = if width > 0.0 {
            let b = ((v - lo) / width).floor();
            if b < 0.0 {
                0
            } else {
                (b as usize).min(spec.bins - 1)
            }
        } else {
            0
        };
        counts[bin] += 1;
    }
    let total = x.len() as f64;
    Ok(PdfHistogram {
        probabilities: counts.iter().map(|&c| c as f64 / total).collect(),
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_bins() {
        let spec = PdfSpec {
            bins: 2,
            range: PdfRange::Explicit { lo: 1.0, hi: 2.0 },
        };
        let h = pdf_reduce(&[1.0, 1.0, 2.0, 2.0], &spec).unwrap();
        assert_eq!(h.probabilities, vec![0.5, 0.5]);
        assert_eq!(h.clamped, 0);
    }

    #[test]
    fn constant_auto_goes_to_first_bin() {
        let h = pdf_reduce(&[4.2; 17], &PdfSpec::auto(10)).unwrap();
        let mut expected = vec![0.0; 10];
        expected[0] = 1.0;
        assert_eq!(h.probabilities, expected);
    }

    #[test]
    fn out_of_range_values_are_clamped_and_counted() {
        let spec = PdfSpec {
            bins: 4,
            range: PdfRange::Explicit { lo: 0.0, hi: 1.0 },
        };
        let h = pdf_reduce(&[-3.0, 0.5, 7.0], &spec).unwrap();
        assert_eq!(h.clamped, 2);
        assert_eq!(h.probabilities[0], 1.0 / 3.0);
        assert_eq!(h.probabilities[3], 1.0 / 3.0);
    }

    #[test]
    fn bad_specs() {
        assert!(pdf_reduce(&[1.0], &PdfSpec::auto(0)).is_err());
        let spec = PdfSpec {
            bins: 2,
            range: PdfRange::Explicit { lo: 1.0, hi: 1.0 },
        };
        assert!(pdf_reduce(&[1.0], &spec).is_err());
    }

    proptest! {
        #[test]
        fn is_probability_vector(
            x in proptest::collection::vec(-1e6f64..1e6, 1..500),
            bins in 1usize..64,
        ) {
            let h = pdf_reduce(&x, &PdfSpec::auto(bins)).unwrap();
            prop_assert_eq!(h.probabilities.len(), bins);
            prop_assert!(h.probabilities.iter().all(|&p| p >= 0.0));
            prop_assert!((h.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
