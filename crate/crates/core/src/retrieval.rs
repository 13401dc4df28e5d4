//! Transform pipelines and exhaustive gallery ranking.

use std::fmt;
use std::path::Path;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::FeatureSet;
use crate::error::{check_len, Error, Result};
use crate::metrics::{distance, MetricKind};
use crate::reduce::{
    dct_keep, haar_reduce, pca_fit, pca_project, pdf_reduce, zscore_apply, zscore_fit, DctPlan, DctSpec, PcaModel,
    PdfSpec, ZScoreParams,
};
use crate::sparse::{build_dict_kmeans, build_dict_ksvd, ClSpec, Dictionary, Learner, SparseCoder};

/// How to obtain the dictionary of a sparse-encode stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictLearnSpec {
    pub method: Learner,
    pub size: usize,
    pub seed: u64,
    pub iters: usize,
    /// K-SVD only; `None` means `max(2, K / 10)` capped at K.
    pub sparsity: Option<usize>,
}

impl DictLearnSpec {
    pub fn new(method: Learner, size: usize, seed: u64) -> Self {
        let iters = match method {
            Learner::KMeans => 100,
            Learner::Ksvd => 50,
        };
        DictLearnSpec {
            method,
            size,
            seed,
            iters,
            sparsity: None,
        }
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity.unwrap_or_else(|| (self.size / 10).max(2).min(self.size))
    }

    pub fn learn(&self, train: &FeatureSet) -> Result<Dictionary> {
        match self.method {
            Learner::KMeans => build_dict_kmeans(train, self.size, self.seed, self.iters),
            Learner::Ksvd => build_dict_ksvd(train, self.size, self.sparsity(), self.iters, self.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DictSource {
    Learn(DictLearnSpec),
    Fixed(Dictionary),
}

/// One unfitted stage of a pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "stage")]
pub enum StageSpec {
    Dct { keep: DctSpec },
    ZScore,
    Pca { k: usize },
    Dwt { levels: usize },
    Pdf { spec: PdfSpec },
    SparseEncode { dict: DictSource, cl: ClSpec },
}

impl StageSpec {
    pub fn name(&self) -> &'static str {
        match self {
            StageSpec::Dct { .. } => "dct",
            StageSpec::ZScore => "zscore",
            StageSpec::Pca { .. } => "pca",
            StageSpec::Dwt { .. } => "dwt",
            StageSpec::Pdf { .. } => "pdf",
            StageSpec::SparseEncode { .. } => "sparse_encode",
        }
    }
}

impl fmt::Display for StageSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageSpec::Dct { keep } => write!(f, "dct({keep})"),
            StageSpec::ZScore => f.write_str("zscore"),
            StageSpec::Pca { k } => write!(f, "pca({k})"),
            StageSpec::Dwt { levels } => write!(f, "dwt({levels})"),
            StageSpec::Pdf { spec } => write!(f, "pdf({})", spec.bins),
            StageSpec::SparseEncode { dict, cl } => {
                match dict {
                    DictSource::Learn(l) => write!(f, "{}{}", l.method, l.size)?,
                    DictSource::Fixed(d) => write!(f, "{}{}", d.learner(), d.size())?,
                }
                write!(f, "+{}({})", cl.algorithm, cl.lambda1)
            }
        }
    }
}

/// Runtime cache that is rebuilt lazily and never serialized.
pub struct Lazy<T>(OnceLock<Arc<T>>);

impl<T> Default for Lazy<T> {
    fn default() -> Self {
        Lazy(OnceLock::new())
    }
}

impl<T> Lazy<T> {
    fn get_or_init(&self, f: impl FnOnce() -> T) -> &T {
        self.0.get_or_init(|| Arc::new(f()))
    }
}

impl<T> Clone for Lazy<T> {
    fn clone(&self) -> Self {
        let cell = OnceLock::new();
        if let Some(v) = self.0.get() {
            let _ = cell.set(Arc::clone(v));
        }
        Lazy(cell)
    }
}

impl<T> fmt::Debug for Lazy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.0.get().is_some() { "Lazy(ready)" } else { "Lazy(empty)" })
    }
}

impl<T> PartialEq for Lazy<T> {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// A fitted stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "stage")]
pub enum Stage {
    Dct {
        keep: DctSpec,
        input_dim: usize,
        #[serde(skip)]
        plan: Lazy<DctPlan>,
    },
    ZScore {
        params: ZScoreParams,
        fingerprint: String,
    },
    Pca {
        model: PcaModel,
        fingerprint: String,
    },
    Dwt {
        levels: usize,
    },
    Pdf {
        spec: PdfSpec,
    },
    SparseEncode {
        dictionary: Dictionary,
        cl: ClSpec,
        fingerprint: String,
        #[serde(skip)]
        coder: Lazy<SparseCoder>,
    },
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Dct { .. } => "dct",
            Stage::ZScore { .. } => "zscore",
            Stage::Pca { .. } => "pca",
            Stage::Dwt { .. } => "dwt",
            Stage::Pdf { .. } => "pdf",
            Stage::SparseEncode { .. } => "sparse_encode",
        }
    }

    /// Training fingerprint of a stateful stage.
    pub fn fingerprint(&self) -> Option<&str> {
        match self {
            Stage::ZScore { fingerprint, .. } | Stage::Pca { fingerprint, .. } | Stage::SparseEncode { fingerprint, .. } => {
                Some(fingerprint)
            }
            _ => None,
        }
    }

    pub fn output_dim(&self, input: usize) -> usize {
        match self {
            Stage::Dct { keep: DctSpec::Keep(k), .. } => *k,
            Stage::Dct { keep: DctSpec::All, .. } | Stage::ZScore { .. } => input,
            Stage::Pca { model, .. } => model.k(),
            Stage::Dwt { levels } => (0..*levels).fold(input, |n, _| n.div_ceil(2)),
            Stage::Pdf { spec } => spec.bins,
            Stage::SparseEncode { dictionary, .. } => dictionary.size(),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            Stage::Dct { keep, input_dim, plan } => {
                check_len(*input_dim, v.len())?;
                let plan = plan.get_or_init(|| DctPlan::new(*input_dim).expect("input dim checked at fit"));
                dct_keep(&plan.forward(v)?, *keep)
            }
            Stage::ZScore { params, .. } => zscore_apply(params, v),
            Stage::Pca { model, .. } => pca_project(model, v),
            Stage::Dwt { levels } => haar_reduce(v, *levels),
            Stage::Pdf { spec } => Ok(pdf_reduce(v, spec)?.probabilities),
            Stage::SparseEncode { dictionary, cl, coder, .. } => {
                let coder = coder.get_or_init(|| SparseCoder::new(dictionary));
                Ok(coder.solve(v, cl)?.code.coefficients)
            }
        }
    }
}

/// Fitted transforms applied identically to gallery and query vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformPipeline {
    pub input_dim: usize,
    pub output_dim: usize,
    pub stages: Vec<Stage>,
    /// Hash of the training ids the pipeline was fitted on.
    pub fingerprint: String,
}

impl TransformPipeline {
    pub fn identity(dim: usize) -> Self {
        TransformPipeline {
            input_dim: dim,
            output_dim: dim,
            stages: Vec::new(),
            fingerprint: String::new(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// sha256 over the ids in order, one per line.
pub fn ids_fingerprint(fs: &FeatureSet) -> String {
    let mut h = Sha256::new();
    for id in fs.ids() {
        h.update(id.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Learned dictionaries keyed by learner settings and the exact training data,
/// so repeated fits on the same data skip relearning.
#[derive(Debug, Default)]
pub struct DictCache(Mutex<HashMap<String, Dictionary>>);

impl DictCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(spec: &DictLearnSpec, train: &FeatureSet) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(spec).expect("spec serializes"));
        for (v, label) in train.iter() {
            h.update(v.id.as_bytes());
            h.update([0]);
            h.update(label.as_bytes());
            h.update([0]);
            for x in &v.values {
                h.update(x.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn get_or_learn(&self, spec: &DictLearnSpec, train: &FeatureSet) -> Result<Dictionary> {
        let key = Self::key(spec, train);
        if let Some(d) = self.0.lock().expect("cache lock").get(&key) {
            return Ok(d.clone());
        }
        let dict = spec.learn(train)?;
        self.0.lock().expect("cache lock").insert(key, dict.clone());
        Ok(dict)
    }
}

pub fn fit_pipeline(stages: &[StageSpec], train: &FeatureSet) -> Result<TransformPipeline> {
    Ok(fit_transform(stages, train)?.0)
}

/// Fits the stages on `train` and also returns `train` pushed through them.
pub fn fit_transform(stages: &[StageSpec], train: &FeatureSet) -> Result<(TransformPipeline, FeatureSet)> {
    fit_transform_cached(stages, train, None)
}

pub fn fit_transform_cached(
    stages: &[StageSpec],
    train: &FeatureSet,
    cache: Option<&DictCache>,
) -> Result<(TransformPipeline, FeatureSet)> {
    let fingerprint = ids_fingerprint(train);
    let mut current = train.clone();
    let mut fitted = Vec::with_capacity(stages.len());
    for (i, spec) in stages.iter().enumerate() {
        let wrap = |e: Error| Error::Pipeline {
            stage: i,
            name: spec.name().to_string(),
            msg: e.to_string(),
        };
        let stage = fit_stage(spec, &current, &fingerprint, cache).map_err(wrap)?;
        current = transform_with(std::slice::from_ref(&stage), &current).map_err(wrap)?;
        fitted.push(stage);
    }
    let pipeline = TransformPipeline {
        input_dim: train.dim(),
        output_dim: current.dim(),
        stages: fitted,
        fingerprint,
    };
    Ok((pipeline, current))
}

fn fit_stage(spec: &StageSpec, train: &FeatureSet, fingerprint: &str, cache: Option<&DictCache>) -> Result<Stage> {
    let d = train.dim();
    Ok(match spec {
        StageSpec::Dct { keep } => {
            if let DctSpec::Keep(k) = keep {
                if *k > d {
                    return Err(Error::Spec(format!("cannot keep {k} DCT coefficients of a {d}-d input")));
                }
            }
            Stage::Dct {
                keep: *keep,
                input_dim: d,
                plan: Lazy::default(),
            }
        }
        StageSpec::ZScore => Stage::ZScore {
            params: zscore_fit(train)?,
            fingerprint: fingerprint.to_string(),
        },
        StageSpec::Pca { k } => Stage::Pca {
            model: pca_fit(train, *k)?,
            fingerprint: fingerprint.to_string(),
        },
        StageSpec::Dwt { levels } => {
            if *levels == 0 {
                return Err(Error::Spec("DWT needs at least one level".into()));
            }
            Stage::Dwt { levels: *levels }
        }
        StageSpec::Pdf { spec } => {
            if spec.bins == 0 {
                return Err(Error::Spec("PDF needs at least one bin".into()));
            }
            Stage::Pdf { spec: *spec }
        }
        StageSpec::SparseEncode { dict, cl } => {
            cl.validate()?;
            let dictionary = match dict {
                DictSource::Learn(l) => match cache {
                    Some(c) => c.get_or_learn(l, train)?,
                    None => l.learn(train)?,
                },
                DictSource::Fixed(dict) => dict.clone(),
            };
            check_len(d, dictionary.dim())?;
            Stage::SparseEncode {
                dictionary,
                cl: *cl,
                fingerprint: fingerprint.to_string(),
                coder: Lazy::default(),
            }
        }
    })
}

pub fn apply_pipeline(p: &TransformPipeline, v: &[f64]) -> Result<Vec<f64>> {
    check_len(p.input_dim, v.len())?;
    p.stages.iter().try_fold(v.to_vec(), |x, s| s.apply(&x))
}

/// Applies the pipeline to every vector in parallel; ids, labels and order
/// are preserved.
pub fn transform_set(p: &TransformPipeline, fs: &FeatureSet) -> Result<FeatureSet> {
    check_len(p.input_dim, fs.dim())?;
    transform_with(&p.stages, fs)
}

fn transform_with(stages: &[Stage], fs: &FeatureSet) -> Result<FeatureSet> {
    if stages.is_empty() {
        return Ok(fs.clone());
    }
    let values = fs
        .vectors()
        .par_iter()
        .map(|v| {
            stages.iter().try_fold(v.values.clone(), |x, s| s.apply(&x)).map_err(|e| match e {
                Error::Dimension { .. } => e,
                other => Error::Encode {
                    id: v.id.clone(),
                    source: Box::new(other),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        let out = stages.iter().fold(fs.dim(), |d, s| s.output_dim(d));
        return FeatureSet::empty(out);
    }
    fs.with_values(values)
}

/// Gallery ids ordered by distance to one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub query_id: String,
    /// Ascending by distance; equal distances ordered by id.
    pub entries: Vec<(String, f64)>,
}

impl RankedResult {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, k: usize) -> &[(String, f64)] {
        &self.entries[..k.min(self.entries.len())]
    }
}

/// Exhaustive scan of `gallery`, skipping the entry whose id is `q_id`.
pub fn rank_query(gallery: &FeatureSet, q: &[f64], q_id: &str, metric: MetricKind) -> Result<RankedResult> {
    if q_id.is_empty() {
        return Err(Error::Spec("query id is required".into()));
    }
    check_len(gallery.dim(), q.len())?;
    let mut entries = gallery
        .vectors()
        .iter()
        .filter(|v| v.id != q_id)
        .map(|v| Ok((v.id.clone(), distance(metric, q, &v.values)?)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(RankedResult {
        query_id: q_id.to_string(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::PdfRange;
    use crate::sparse::{ClAlgorithm, Lambda};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(n: usize, d: usize, seed: u64) -> FeatureSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureSet::from_rows((0..n).map(|i| {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (format!("r{i:03}"), format!("c{}", i % 3), v)
        }))
        .unwrap()
    }

    #[test]
    fn empty_pipeline_is_identity() {
        let fs = random_set(5, 4, 1);
        let p = fit_pipeline(&[], &fs).unwrap();
        assert!(p.stages.is_empty());
        assert_eq!(p.output_dim, 4);
        let v = fs.vectors()[2].values.clone();
        assert_eq!(apply_pipeline(&p, &v).unwrap(), v);
    }

    #[test]
    fn dct_then_zscore_centres_train() {
        let fs = random_set(30, 16, 2);
        let stages = [StageSpec::Dct { keep: DctSpec::All }, StageSpec::ZScore];
        let (p, out) = fit_transform(&stages, &fs).unwrap();
        assert_eq!(transform_set(&p, &fs).unwrap(), out);
        for j in 0..16 {
            let mean: f64 = out.vectors().iter().map(|v| v.values[j]).sum::<f64>() / 30.0;
            assert!(mean.abs() < 1e-12);
        }
    }

    #[test]
    fn pca_output_dim() {
        let fs = random_set(40, 64, 3);
        let p = fit_pipeline(&[StageSpec::Pca { k: 10 }], &fs).unwrap();
        assert_eq!(p.output_dim, 10);
        assert_eq!(apply_pipeline(&p, &fs.vectors()[0].values).unwrap().len(), 10);
    }

    #[test]
    fn reduction_dims_on_4096() {
        let fs = random_set(3, 4096, 4);
        let dwt = fit_pipeline(&[StageSpec::Dwt { levels: 3 }], &fs).unwrap();
        assert_eq!(apply_pipeline(&dwt, &fs.vectors()[0].values).unwrap().len(), 512);
        let dct = fit_pipeline(&[StageSpec::Dct { keep: DctSpec::Keep(300) }], &fs).unwrap();
        assert_eq!(apply_pipeline(&dct, &fs.vectors()[0].values).unwrap().len(), 300);
    }

    #[test]
    fn chain_break_names_stage() {
        let fs = random_set(10, 8, 5);
        let stages = [StageSpec::Dwt { levels: 1 }, StageSpec::Dct { keep: DctSpec::Keep(5) }];
        match fit_pipeline(&stages, &fs) {
            Err(Error::Pipeline { stage, name, .. }) => {
                assert_eq!(stage, 1);
                assert_eq!(name, "dct");
            }
            other => panic!("expected pipeline error, got {other:?}"),
        }
    }

    #[test]
    fn apply_checks_input_dim() {
        let fs = random_set(10, 8, 6);
        let p = fit_pipeline(&[StageSpec::ZScore], &fs).unwrap();
        assert!(matches!(apply_pipeline(&p, &[1.0; 7]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn stateful_stages_fingerprint_train_only() {
        let fs = random_set(30, 8, 7);
        let train = fs.subset(&(0..20).collect::<Vec<_>>());
        let spec = StageSpec::SparseEncode {
            dict: DictSource::Learn(DictLearnSpec::new(Learner::KMeans, 4, 1)),
            cl: ClSpec::new(ClAlgorithm::Lasso),
        };
        let p = fit_pipeline(&[StageSpec::ZScore, StageSpec::Pca { k: 3 }, spec], &train).unwrap();
        let expected = ids_fingerprint(&train);
        assert_eq!(p.fingerprint, expected);
        assert_ne!(expected, ids_fingerprint(&fs));
        for s in &p.stages {
            assert_eq!(s.fingerprint(), Some(expected.as_str()));
        }
    }

    #[test]
    fn pipeline_json_round_trip() {
        let fs = random_set(25, 12, 8);
        let stages = [
            StageSpec::Dct { keep: DctSpec::Keep(10) },
            StageSpec::ZScore,
            StageSpec::Pdf {
                spec: PdfSpec {
                    bins: 6,
                    range: PdfRange::Explicit { lo: -3.0, hi: 3.0 },
                },
            },
        ];
        let p = fit_pipeline(&stages, &fs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        p.save(&path).unwrap();
        let q = TransformPipeline::load(&path).unwrap();
        assert_eq!(p, q);
        for v in fs.vectors() {
            assert_eq!(apply_pipeline(&p, &v.values).unwrap(), apply_pipeline(&q, &v.values).unwrap());
        }

        let sparse = [StageSpec::SparseEncode {
            dict: DictSource::Learn(DictLearnSpec::new(Learner::Ksvd, 5, 3)),
            cl: ClSpec::new(ClAlgorithm::Homotopy).with_lambda(Lambda::Relative(0.2)),
        }];
        let p = fit_pipeline(&sparse, &fs).unwrap();
        p.save(&path).unwrap();
        let q = TransformPipeline::load(&path).unwrap();
        assert_eq!(p, q);
        let v = &fs.vectors()[3].values;
        assert_eq!(apply_pipeline(&p, v).unwrap(), apply_pipeline(&q, v).unwrap());
    }

    #[test]
    fn rank_hand_example() {
        let g = FeatureSet::from_rows([("a", "x", vec![0.0]), ("b", "y", vec![5.0])]).unwrap();
        let r = rank_query(&g, &[1.0], "q", MetricKind::Euclidean).unwrap();
        assert_eq!(r.entries, vec![("a".to_string(), 1.0), ("b".to_string(), 4.0)]);
    }

    #[test]
    fn rank_excludes_query_and_breaks_ties_by_id() {
        let g = FeatureSet::from_rows([
            ("z", "x", vec![1.0]),
            ("m", "x", vec![1.0]),
            ("q", "y", vec![0.0]),
            ("a", "y", vec![-1.0]),
        ])
        .unwrap();
        let r = rank_query(&g, &[0.0], "q", MetricKind::Manhattan).unwrap();
        let ids: Vec<&str> = r.entries.iter().map(|e| e.0.as_str()).collect();
        assert_eq!(ids, ["a", "m", "z"]);
        assert!(rank_query(&g, &[0.0], "", MetricKind::Manhattan).is_err());
    }

    #[test]
    fn exact_match_ranks_first() {
        let fs = random_set(20, 6, 9);
        let q = fs.vectors()[7].values.clone();
        let r = rank_query(&fs, &q, "outside", MetricKind::Hassanat).unwrap();
        assert_eq!(r.entries[0], ("r007".to_string(), 0.0));
        assert_eq!(r.len(), 20);
    }

    #[test]
    fn separated_clusters_neighbours_share_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let per = 6;
        let fs = FeatureSet::from_rows((0..3 * per).map(|i| {
            let c = i / per;
            let v: Vec<f64> = (0..3)
                .map(|j| if j == c { 100.0 } else { 0.0 } + rng.gen_range(-1.0..1.0))
                .collect();
            (format!("p{i}"), format!("c{c}"), v)
        }))
        .unwrap();
        let labels = fs.label_map();
        for (v, label) in fs.iter() {
            let r = rank_query(&fs, &v.values, &v.id, MetricKind::Euclidean).unwrap();
            for (id, _) in r.top(per - 1) {
                assert_eq!(labels[id], label);
            }
        }
    }

    #[test]
    fn ranking_is_a_sorted_permutation() {
        let fs = random_set(50, 5, 11);
        for kind in MetricKind::ALL {
            let r = rank_query(&fs, &fs.vectors()[0].values, "r000", kind).unwrap();
            let mut ids: Vec<&str> = r.entries.iter().map(|e| e.0.as_str()).collect();
            ids.sort();
            let mut expect: Vec<&str> = fs.ids().filter(|&i| i != "r000").collect();
            expect.sort();
            assert_eq!(ids, expect);
            assert!(r.entries.windows(2).all(|w| w[0].1 <= w[1].1 && w[0].1 >= 0.0));
            assert_eq!(r, rank_query(&fs, &fs.vectors()[0].values, "r000", kind).unwrap());
        }
    }

    #[test]
    fn cache_reuses_learned_dictionary() {
        let fs = random_set(30, 6, 12);
        let learn = DictLearnSpec::new(Learner::Ksvd, 4, 2);
        let cache = DictCache::new();
        let a = cache.get_or_learn(&learn, &fs).unwrap();
        let b = cache.get_or_learn(&learn, &fs).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.len(), 1);
        assert_eq!(a, learn.learn(&fs).unwrap());
        cache.get_or_learn(&learn, &fs.subset(&(0..20).collect::<Vec<_>>())).unwrap();
        assert_eq!(cache.len(), 2);
    }
}
