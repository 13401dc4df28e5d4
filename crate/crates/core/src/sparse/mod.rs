//! Sparse representation: dictionary learning and coefficient learning.
//!
//! Every coefficient learner minimizes
//!
//! ```text
//! 0.5 * ||x - D a||^2 + lambda1 * ||a||_1 (+ lambda2 / 2 * ||a||^2 for elastic net)
//! ```
//!
//! for a fixed unit-norm dictionary `D` (d x K). [`SparseCoder`] caches the
//! Gram matrix `D^T D` so repeated solves against one dictionary are cheap.

mod coordinate;
mod dictionary;
mod homotopy;
mod kmeans;
mod ksvd;
mod omp;
mod ssf;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureSet;
use crate::error::{check_len, Error, Result};

pub use dictionary::{read_dictionary, write_dictionary, Dictionary, Learner};
pub use kmeans::build_dict_kmeans;
pub use ksvd::{build_dict_ksvd, train_ksvd, KsvdTraining};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCode {
    pub coefficients: Vec<f64>,
}

impl SparseCode {
    pub fn zeros(k: usize) -> Self {
        SparseCode {
            coefficients: vec![0.0; k],
        }
    }

    pub fn nonzeros(&self) -> usize {
        self.coefficients.iter().filter(|c| **c != 0.0).count()
    }

    pub fn l1(&self) -> f64 {
        self.coefficients.iter().map(|c| c.abs()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClAlgorithm {
    Homotopy,
    Lasso,
    ElasticNet,
    Ssf,
}

impl ClAlgorithm {
    pub const ALL: [ClAlgorithm; 4] = [
        ClAlgorithm::Homotopy,
        ClAlgorithm::Lasso,
        ClAlgorithm::ElasticNet,
        ClAlgorithm::Ssf,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ClAlgorithm::Homotopy => "homotopy",
            ClAlgorithm::Lasso => "lasso",
            ClAlgorithm::ElasticNet => "en",
            ClAlgorithm::Ssf => "ssf",
        }
    }
}

impl fmt::Display for ClAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ClAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "homotopy" | "lars" => Ok(ClAlgorithm::Homotopy),
            "lasso" | "cd" => Ok(ClAlgorithm::Lasso),
            "en" | "elastic_net" | "elasticnet" | "elastic-net" => Ok(ClAlgorithm::ElasticNet),
            "ssf" | "ista" => Ok(ClAlgorithm::Ssf),
            other => Err(Error::Spec(format!("unknown coefficient learner `{other}`"))),
        }
    }
}

/// The l1 weight, either fixed or relative to `lambda_max(x) = ||D^T x||_inf`,
/// the smallest weight for which the zero code is optimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lambda {
    Absolute(f64),
    Relative(f64),
}

impl Lambda {
    pub fn resolve(self, lambda_max: f64) -> f64 {
        match self {
            Lambda::Absolute(v) => v,
            Lambda::Relative(f) => f * lambda_max,
        }
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Absolute(v) => write!(f, "abs:{v}"),
            Lambda::Relative(v) => write!(f, "{v}*max"),
        }
    }
}

/// `0.1` or `0.1*max` is relative to `lambda_max`; `abs:0.5` is absolute.
impl FromStr for Lambda {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (value, absolute) = match s.strip_prefix("abs:") {
            Some(rest) => (rest, true),
            None => (s.strip_suffix("*max").unwrap_or(s), false),
        };
        match value.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(if absolute {
                Lambda::Absolute(v)
            } else {
                Lambda::Relative(v)
            }),
            _ => Err(Error::Spec(format!("invalid lambda `{s}`"))),
        }
    }
}

/// Coefficient-learning configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClSpec {
    pub algorithm: ClAlgorithm,
    pub lambda1: Lambda,
    /// Elastic-net l2 weight; `None` means "same as the resolved lambda1".
    pub lambda2: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
}

impl ClSpec {
    pub fn new(algorithm: ClAlgorithm) -> Self {
        ClSpec {
            algorithm,
            lambda1: Lambda::Relative(0.1),
            lambda2: None,
            max_iter: 10_000,
            tol: 1e-7,
        }
    }

    pub fn with_lambda(mut self, lambda1: Lambda) -> Self {
        self.lambda1 = lambda1;
        self
    }

    pub fn with_lambda2(mut self, lambda2: f64) -> Self {
        self.lambda2 = Some(lambda2);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let l1 = match self.lambda1 {
            Lambda::Absolute(v) | Lambda::Relative(v) => v,
        };
        if !(l1 > 0.0 && l1.is_finite()) {
            return Err(Error::Spec(format!("lambda1 must be positive, got {l1}")));
        }
        if let Some(l2) = self.lambda2 {
            if !(l2 >= 0.0 && l2.is_finite()) {
                return Err(Error::Spec(format!("lambda2 must be non-negative, got {l2}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Spec("tolerance must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Spec("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub code: SparseCode,
    pub converged: bool,
    pub iterations: usize,
    /// The resolved l1 weight actually used.
    pub lambda: f64,
}

/// A dictionary with its cached Gram matrix and Lipschitz bound.
#[derive(Debug, Clone)]
pub struct SparseCoder {
    dict: Dictionary,
    gram: DMatrix<f64>,
    lipschitz: OnceLock<f64>,
}

impl SparseCoder {
    pub fn new(dict: &Dictionary) -> Self {
        let gram = dict.atoms().transpose() * dict.atoms();
        SparseCoder {
            dict: dict.clone(),
            gram,
            lipschitz: OnceLock::new(),
        }
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `D^T x`.
    pub fn correlate(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_len(self.dict.dim(), x.len())?;
        Ok(self.dict.atoms().tr_mul(&DVector::from_column_slice(x)))
    }

    /// Largest eigenvalue of `D^T D` by power iteration, scaled by 1.01.
    pub fn lipschitz(&self) -> f64 {
        *self.lipschitz.get_or_init(|| self.power_iteration())
    }

    fn power_iteration(&self) -> f64 {
        let k = self.gram.nrows();
        let mut v = DVector::from_fn(k, |i, _| 1.0 + 0.1 * ((i + 1) as f64).sin());
        v /= v.norm();
        let mut eig = 0.0;
        for _ in 0..1000 {
            let w = &self.gram * &v;
            let next = v.dot(&w);
            let norm = w.norm();
            if norm == 0.0 {
                break;
            }
            v = w / norm;
            let done = (next - eig).abs() <= 1e-12 * next.abs();
            eig = next;
            if done {
                break;
            }
        }
        (eig * 1.01).max(f64::MIN_POSITIVE)
    }

    pub fn solve(&self, x: &[f64], spec: &ClSpec) -> Result<SolveOutcome> {
        spec.validate()?;
        match spec.algorithm {
            ClAlgorithm::Lasso => self.lasso(x, spec),
            ClAlgorithm::ElasticNet => self.elastic_net(x, spec),
            ClAlgorithm::Homotopy => self.homotopy(x, spec),
            ClAlgorithm::Ssf => self.ssf(x, spec),
        }
    }

    pub fn objective(&self, x: &[f64], code: &SparseCode, lambda1: f64) -> Result<f64> {
        sr_objective(&self.dict, x, code, lambda1)
    }
}

pub(crate) fn lambda_max_from(corr: &DVector<f64>) -> f64 {
    corr.iter().fold(0.0, |m, c| m.max(c.abs()))
}

/// `||D^T x||_inf`.
pub fn lambda_max(dict: &Dictionary, x: &[f64]) -> Result<f64> {
    check_len(dict.dim(), x.len())?;
    Ok(dict
        .atoms()
        .column_iter()
        .map(|atom| atom.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max))
}

/// `0.5 * ||x - D alpha||^2 + lambda1 * ||alpha||_1`.
pub fn sr_objective(dict: &Dictionary, x: &[f64], alpha: &SparseCode, lambda1: f64) -> Result<f64> {
    check_len(dict.dim(), x.len())?;
    check_len(dict.size(), alpha.coefficients.len())?;
    let recon = dict.reconstruct(&alpha.coefficients);
    let rss: f64 = x.iter().zip(recon.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(0.5 * rss + lambda1 * alpha.l1())
}

/// Greedy orthogonal matching pursuit with at most `t` atoms.
pub fn sparse_omp(dict: &Dictionary, x: &[f64], t: usize) -> Result<SparseCode> {
    SparseCoder::new(dict).omp(x, t)
}

pub fn solve_lasso(dict: &Dictionary, x: &[f64], spec: &ClSpec) -> Result<SolveOutcome> {
    spec.validate()?;
    SparseCoder::new(dict).lasso(x, spec)
}

pub fn solve_elastic_net(dict: &Dictionary, x: &[f64], spec: &ClSpec) -> Result<SolveOutcome> {
    spec.validate()?;
    SparseCoder::new(dict).elastic_net(x, spec)
}

pub fn solve_homotopy(dict: &Dictionary, x: &[f64], spec: &ClSpec) -> Result<SolveOutcome> {
    spec.validate()?;
    SparseCoder::new(dict).homotopy(x, spec)
}

pub fn solve_ssf(dict: &Dictionary, x: &[f64], spec: &ClSpec) -> Result<SolveOutcome> {
    spec.validate()?;
    SparseCoder::new(dict).ssf(x, spec)
}

/// Maximum violation of the lasso optimality conditions at weight `lambda`:
/// `|d_j^T r| <= lambda` where `a_j = 0`, `d_j^T r = lambda * sign(a_j)` otherwise.
pub fn kkt_violation(dict: &Dictionary, x: &[f64], code: &SparseCode, lambda: f64) -> Result<f64> {
    check_len(dict.dim(), x.len())?;
    let recon = dict.reconstruct(&code.coefficients);
    let residual: Vec<f64> = x.iter().zip(recon.iter()).map(|(a, b)| a - b).collect();
    Ok(dict
        .atoms()
        .column_iter()
        .zip(&code.coefficients)
        .map(|(atom, &a)| {
            let corr: f64 = atom.iter().zip(&residual).map(|(d, r)| d * r).sum();
            if a == 0.0 {
                (corr.abs() - lambda).max(0.0)
            } else {
                (corr - lambda * a.signum()).abs()
            }
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodeReport {
    pub total: usize,
    pub not_converged: Vec<String>,
    pub mean_nonzeros: f64,
}

/// Replaces every vector of `fs` by its sparse code. Ids, labels and order
/// are preserved; solves run in parallel.
pub fn encode_set(dict: &Dictionary, fs: &FeatureSet, spec: &ClSpec) -> Result<(FeatureSet, EncodeReport)> {
    spec.validate()?;
    check_len(dict.dim(), fs.dim())?;
    let coder = SparseCoder::new(dict);
    let outcomes = fs
        .vectors()
        .par_iter()
        .map(|v| {
            coder.solve(&v.values, spec).map_err(|e| Error::Encode {
                id: v.id.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = EncodeReport {
        total: outcomes.len(),
        not_converged: fs
            .vectors()
            .iter()
            .zip(&outcomes)
            .filter(|(_, o)| !o.converged)
            .map(|(v, _)| v.id.clone())
            .collect(),
        mean_nonzeros: if outcomes.is_empty() {
            0.0
        } else {
            outcomes.iter().map(|o| o.code.nonzeros() as f64).sum::<f64>() / outcomes.len() as f64
        },
    };
    let codes: Vec<Vec<f64>> = outcomes.into_iter().map(|o| o.code.coefficients).collect();
    let encoded = if codes.is_empty() {
        FeatureSet::empty(dict.size())?
    } else {
        fs.with_values(codes)?
    };
    Ok((encoded, report))
}

#[inline]
pub(crate) fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}
