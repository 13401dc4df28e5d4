//! Feature transforms and dimensionality reduction.

mod dct;
mod haar;
mod pca;
mod pdf;
mod zscore;

pub use dct::{dct_forward, dct_inverse, dct_keep, DctPlan, DctSpec};
pub use haar::{haar_level, haar_reduce};
pub use pca::{pca_fit, pca_project, PcaModel};
pub use pdf::{pdf_reduce, PdfHistogram, PdfRange, PdfSpec};
pub use zscore::{zscore_apply, zscore_fit, ZScoreParams};
