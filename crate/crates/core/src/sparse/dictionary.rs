use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub const DICT_MAGIC: &[u8; 4] = b"CBDC";
pub const DICT_VERSION: u32 = 1;
const UNIT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Learner {
    KMeans,
    Ksvd,
}

impl Learner {
    fn tag(self) -> u8 {
        match self {
            Learner::KMeans => 0,
            Learner::Ksvd => 1,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Learner::KMeans),
            1 => Some(Learner::Ksvd),
            _ => None,
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Learner::KMeans => "kmeans",
            Learner::Ksvd => "ksvd",
        })
    }
}

impl FromStr for Learner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(Learner::KMeans),
            "ksvd" | "k-svd" => Ok(Learner::Ksvd),
            other => Err(Error::Spec(format!("unknown dictionary learner `{other}`"))),
        }
    }
}

/// A `d x K` matrix of unit-norm atoms (one atom per column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
    learner: Learner,
    seed: u64,
}

impl Dictionary {
    /// Wraps `atoms`, checking `K >= 2` and that every column has unit norm.
    pub fn new(atoms: DMatrix<f64>, learner: Learner, seed: u64) -> Result<Self> {
        if atoms.ncols() < 2 {
            return Err(Error::Spec(format!(
                "dictionary needs at least 2 atoms, got {}",
                atoms.ncols()
            )));
        }
        if atoms.nrows() == 0 {
            return Err(Error::Spec("dictionary atoms have zero dimension".into()));
        }
        for (k, col) in atoms.column_iter().enumerate() {
            let norm = col.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Data(format!("atom {k} has norm {norm}, expected 1")));
            }
        }
        Ok(Dictionary {
            atoms,
            learner,
            seed,
        })
    }

    /// Normalizes each column before wrapping; zero columns are rejected.
    pub fn from_columns(mut atoms: DMatrix<f64>, learner: Learner, seed: u64) -> Result<Self> {
        for (k, mut col) in atoms.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::Data(format!("atom {k} is zero or non-finite")));
            }
            col /= norm;
        }
        Self::new(atoms, learner, seed)
    }

    pub fn atoms(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn atom(&self, k: usize) -> Vec<f64> {
        self.atoms.column(k).iter().copied().collect()
    }

    /// Signal dimension `d`.
    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    /// Number of atoms `K`.
    pub fn size(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn learner(&self) -> Learner {
        self.learner
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `D alpha`.
    pub fn reconstruct(&self, alpha: &[f64]) -> DVector<f64> {
        &self.atoms * DVector::from_column_slice(alpha)
    }

    pub fn residual_norm(&self, x: &[f64], alpha: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        check_len(self.size(), alpha.len())?;
        let recon = self.reconstruct(alpha);
        Ok(x.iter()
            .zip(recon.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

/// Binary layout: `"CBDC"`, version `u32`, `d u32`, `K u32`, learner tag `u8`,
/// seed `u64`, then `d*K` column-major `f64`, all little-endian.
pub fn write_dictionary(dict: &Dictionary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(25 + 8 * dict.atoms.len());
    out.extend_from_slice(DICT_MAGIC);
    out.extend_from_slice(&DICT_VERSION.to_le_bytes());
    out.extend_from_slice(&(dict.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(dict.size() as u32).to_le_bytes());
    out.push(dict.learner.tag());
    out.extend_from_slice(&dict.seed.to_le_bytes());
    // nalgebra storage is column-major already
    for v in dict.atoms.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_dictionary(path: impl AsRef<Path>) -> Result<Dictionary> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Format {
        path: path.to_path_buf(),
        row: 0,
        msg: msg.to_string(),
    };
    if bytes.len() < 25 || &bytes[..4] != DICT_MAGIC {
        return Err(bad("not a CBDC dictionary file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    if u32_at(4) != DICT_VERSION {
        return Err(bad("unsupported dictionary version"));
    }
    let d = u32_at(8) as usize;
    let k = u32_at(12) as usize;
    let learner = Learner::from_tag(bytes[16]).ok_or_else(|| bad("unknown learner tag"))?;
    let seed = u64::from_le_bytes(bytes[17..25].try_into().unwrap());
    let body = &bytes[25..];
    if body.len() != 8 * d * k {
        return Err(bad("atom payload length does not match d*K"));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Dictionary::new(DMatrix::from_vec(d, k, values), learner, seed)
}
