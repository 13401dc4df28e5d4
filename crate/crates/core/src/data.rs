//! Feature containers, on-disk formats and train/test splitting.
//!
//! Two feature file formats are supported and auto-detected on load:
//!
//! * CSV: one row per image, `id,v1,...,vd`, no header.
//! * Binary: `"CBFV"`, version `u32 = 1`, `n u32`, `d u32`, then `n` records of
//!   `[id_len u16][id utf-8][d x f32]`, all little-endian.
//!
//! Class labels come from a separate `id,label` manifest.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"CBFV";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Self {
        FeatureVector {
            id: id.into(),
            values,
        }
    }
}

/// A validated, labelled collection of equal-length feature vectors.
///
/// Row order is load order and is preserved by every operation in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    dim: usize,
    vectors: Vec<FeatureVector>,
    labels: Vec<String>,
}

impl FeatureSet {
    /// Builds a set, checking every invariant: `dim >= 1`, equal lengths,
    /// finite values, unique non-empty ids and one label per vector.
    pub fn new(dim: usize, vectors: Vec<FeatureVector>, labels: Vec<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Spec("feature dimension must be at least 1".into()));
        }
        if vectors.len() != labels.len() {
            return Err(Error::Manifest(format!(
                "{} vectors but {} labels",
                vectors.len(),
                labels.len()
            )));
        }
        let mut seen = HashSet::with_capacity(vectors.len());
        for (row, v) in vectors.iter().enumerate() {
            if v.id.is_empty() {
                return Err(Error::Data(format!("row {row}: ids are required")));
            }
            if !seen.insert(v.id.as_str()) {
                return Err(Error::Data(format!("row {row}: duplicate id `{}`", v.id)));
            }
            if v.values.len() != dim {
                return Err(Error::Data(format!(
                    "row {row} (`{}`): expected {dim} values, found {}",
                    v.id,
                    v.values.len()
                )));
            }
            if let Some(j) = v.values.iter().position(|x| !x.is_finite()) {
                return Err(Error::Data(format!(
                    "row {row} (`{}`): non-finite value at column {j}",
                    v.id
                )));
            }
        }
        if let Some(row) = labels.iter().position(|l| l.is_empty()) {
            return Err(Error::Manifest(format!("row {row}: empty label")));
        }
        Ok(FeatureSet {
            dim,
            vectors,
            labels,
        })
    }

    /// An empty set of the given dimension.
    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new(), Vec::new())
    }

    /// Convenience constructor from `(id, label, values)` triples.
    pub fn from_rows<I, S, L>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, L, Vec<f64>)>,
        S: Into<String>,
        L: Into<String>,
    {
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for (id, label, values) in rows {
            vectors.push(FeatureVector::new(id, values));
            labels.push(label.into());
        }
        let dim = vectors.first().map(|v| v.values.len()).unwrap_or(0);
        Self::new(dim, vectors, labels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[FeatureVector] {
        &self.vectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.iter().map(|v| v.id.as_str())
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    /// Iterates `(vector, label)` pairs in row order.
    pub fn iter(&self) -> impl Iterator<Item = (&FeatureVector, &str)> {
        self.vectors.iter().zip(self.labels.iter().map(String::as_str))
    }

    pub fn label_map(&self) -> HashMap<String, String> {
        self.iter()
            .map(|(v, l)| (v.id.clone(), l.to_string()))
            .collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.vectors.iter().position(|v| v.id == id)
    }

    /// Distinct labels in order of first appearance.
    pub fn classes(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.labels
            .iter()
            .map(String::as_str)
            .filter(|l| seen.insert(*l))
            .collect()
    }

    /// Rows at `indices`, in the order given.
    pub fn subset(&self, indices: &[usize]) -> FeatureSet {
        FeatureSet {
            dim: self.dim,
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// Replaces every vector's values, keeping ids and labels.
    pub fn with_values(&self, values: Vec<Vec<f64>>) -> Result<FeatureSet> {
        if values.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                actual: values.len(),
            });
        }
        let dim = values.first().map_or(self.dim, Vec::len);
        let vectors = self
            .vectors
            .iter()
            .zip(values)
            .map(|(v, values)| FeatureVector::new(v.id.clone(), values))
            .collect();
        FeatureSet::new(dim, vectors, self.labels.clone())
    }

    /// Requirement for any evaluation run: at least two distinct labels.
    pub fn check_evaluable(&self) -> Result<()> {
        if self.classes().len() < 2 {
            return Err(Error::Data(
                "evaluation needs at least two distinct labels".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormat {
    Csv,
    Binary,
}

/// Reads an `id,label` manifest (no header). Blank lines are ignored.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (row, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, label) = line.split_once(',').ok_or_else(|| {
            Error::Manifest(format!("{}: row {row}: expected `id,label`", path.display()))
        })?;
        let (id, label) = (id.trim(), label.trim());
        if id.is_empty() || label.is_empty() {
            return Err(Error::Manifest(format!(
                "{}: row {row}: empty id or label",
                path.display()
            )));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::Manifest(format!(
                "{}: row {row}: duplicate id `{id}`",
                path.display()
            )));
        }
        out.push((id.to_string(), label.to_string()));
    }
    Ok(out)
}

pub fn write_manifest(fs: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (v, label) in fs.iter() {
        writeln!(w, "{},{}", v.id, label).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads a feature file (CSV or binary, detected by the `CBFV` magic) and
/// attaches labels from the manifest.
pub fn load_feature_set(path: impl AsRef<Path>, manifest: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let vectors = if bytes.starts_with(BINARY_MAGIC) {
        decode_binary(path, &bytes)?
    } else {
        decode_csv(path, &bytes)?
    };
    let manifest: HashMap<String, String> = read_manifest(manifest)?.into_iter().collect();
    let mut labels = Vec::with_capacity(vectors.len());
    for v in &vectors {
        let label = manifest
            .get(&v.id)
            .ok_or_else(|| Error::Manifest(format!("id `{}` missing from manifest", v.id)))?;
        labels.push(label.clone());
    }
    let dim = vectors.first().map_or(0, |v| v.values.len());
    if dim == 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            row: 0,
            msg: "no feature rows".into(),
        });
    }
    FeatureSet::new(dim, vectors, labels)
}

fn decode_csv(path: &Path, bytes: &[u8]) -> Result<Vec<FeatureVector>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        row: 0,
        msg: format!("not UTF-8: {e}"),
    })?;
    let mut out = Vec::new();
    let mut dim = None;
    for (row, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let format_err = |msg: String| Error::Format {
            path: path.to_path_buf(),
            row,
            msg,
        };
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or_default().trim().to_string();
        let values = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| format_err(format!("bad number `{f}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match dim {
            None if values.is_empty() => return Err(format_err("row has no values".into())),
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(format_err(format!(
                    "expected {d} values, found {}",
                    values.len()
                )))
            }
            Some(_) => {}
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("row {row} (`{id}`): non-finite value")));
        }
        out.push(FeatureVector::new(id, values));
    }
    Ok(out)
}

fn decode_binary(path: &Path, bytes: &[u8]) -> Result<Vec<FeatureVector>> {
    let mut cur = Cursor { bytes, pos: 4, path };
    let version = cur.u32(0)?;
    if version != BINARY_VERSION {
        return Err(cur.err(0, format!("unsupported format version {version}")));
    }
    let n = cur.u32(0)? as usize;
    let d = cur.u32(0)? as usize;
    if d == 0 && n > 0 {
        return Err(cur.err(0, "zero dimension".into()));
    }
    let mut out = Vec::with_capacity(n.min(1 << 20));
    for row in 0..n {
        let id_len = cur.u16(row)? as usize;
        let id = std::str::from_utf8(cur.take(id_len, row)?)
            .map_err(|e| cur.err(row, format!("id not UTF-8: {e}")))?
            .to_string();
        let raw = cur.take(4 * d, row)?;
        let values: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("row {row} (`{id}`): non-finite value")));
        }
        out.push(FeatureVector::new(id, values));
    }
    if cur.pos != bytes.len() {
        return Err(cur.err(n, format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn err(&self, row: usize, msg: String) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            row,
            msg,
        }
    }

    fn take(&mut self, len: usize, row: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(self.err(row, "truncated file".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, row: usize) -> Result<u32> {
        let b = self.take(4, row)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u16(&mut self, row: usize) -> Result<u16> {
        let b = self.take(2, row)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }
}

/// Writes `fs` in the requested format. Binary stores `f32` values, so it is
/// exact for values that are representable in single precision; CSV writes
/// the shortest decimal that round-trips the `f64` exactly.
pub fn save_feature_set(fs: &FeatureSet, path: impl AsRef<Path>, format: FeatureFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        FeatureFormat::Csv => encode_csv(fs),
        FeatureFormat::Binary => encode_binary(fs)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn format_real(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn encode_csv(fs: &FeatureSet) -> Vec<u8> {
    let mut out = String::new();
    for v in fs.vectors() {
        out.push_str(&v.id);
        for &x in &v.values {
            out.push(',');
            out.push_str(&format_real(x));
        }
        out.push('\n');
    }
    out.into_bytes()
}

fn encode_binary(fs: &FeatureSet) -> Result<Vec<u8>> {
    let to_u32 = |x: usize, what: &str| {
        u32::try_from(x).map_err(|_| Error::Data(format!("{what} {x} exceeds u32")))
    };
    let mut out = Vec::with_capacity(16 + fs.len() * (fs.dim() * 4 + 16));
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(fs.len(), "row count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(fs.dim(), "dimension")?.to_le_bytes());
    for v in fs.vectors() {
        let id = v.id.as_bytes();
        let len = u16::try_from(id.len())
            .map_err(|_| Error::Data(format!("id `{}` longer than 65535 bytes", v.id)))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id);
        for &x in &v.values {
            let x32 = x as f32;
            if !x32.is_finite() {
                return Err(Error::Data(format!(
                    "`{}`: value {x} does not fit in f32",
                    v.id
                )));
            }
            out.extend_from_slice(&x32.to_le_bytes());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum SplitMode {
    Holdout { test_per_class: usize },
    Loocv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub seed: u64,
}

impl SplitSpec {
    pub fn holdout(test_per_class: usize, seed: u64) -> Self {
        SplitSpec {
            mode: SplitMode::Holdout { test_per_class },
            seed,
        }
    }

    pub fn loocv() -> Self {
        SplitSpec {
            mode: SplitMode::Loocv,
            seed: 0,
        }
    }

    pub fn validate(&self, fs: &FeatureSet) -> Result<()> {
        let SplitMode::Holdout { test_per_class } = self.mode else {
            return Ok(());
        };
        if test_per_class == 0 {
            return Err(Error::Split("test-per-class must be at least 1".into()));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for l in fs.labels() {
            *counts.entry(l.as_str()).or_default() += 1;
        }
        for class in fs.classes() {
            let size = counts[class];
            if size <= test_per_class {
                return Err(Error::Split(format!(
                    "class `{class}` has {size} items, needs more than {test_per_class}"
                )));
            }
        }
        Ok(())
    }
}

/// Draws exactly `test_per_class` items of every class into the test set,
/// uniformly without replacement from a seeded generator. Both halves keep
/// load order.
pub fn stratified_split(fs: &FeatureSet, spec: &SplitSpec) -> Result<(FeatureSet, FeatureSet)> {
    let SplitMode::Holdout { test_per_class } = spec.mode else {
        return Err(Error::Split(
            "leave-one-out has no fixed train/test split".into(),
        ));
    };
    spec.validate(fs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut is_test = vec![false; fs.len()];
    for class in fs.classes() {
        let members: Vec<usize> = (0..fs.len()).filter(|&i| fs.label(i) == class).collect();
        for k in rand::seq::index::sample(&mut rng, members.len(), test_per_class) {
            is_test[members[k]] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..fs.len()).partition(|&i| is_test[i]);
    Ok((fs.subset(&train), fs.subset(&test)))
}
