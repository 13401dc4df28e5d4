//! Content-based image retrieval engine built around sparse representations.
//!
//! The crate covers the whole experimental loop: feature containers and file
//! formats ([`data`]), low-level image features ([`features`]), transforms and
//! dimensionality reduction ([`reduce`]), dictionary and coefficient learning
//! ([`sparse`]), distance metrics ([`metrics`]), pipelines and ranking
//! ([`retrieval`]) and retrieval evaluation ([`eval`]).

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod metrics;
pub mod reduce;
pub mod retrieval;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
