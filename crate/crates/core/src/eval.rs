//! Retrieval quality: average precision, precision-recall curves, error
//! rate, and the holdout and leave-one-out experiment drivers.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{stratified_split, FeatureSet, SplitMode, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::retrieval::{
    apply_pipeline, fit_transform_cached, ids_fingerprint, DictCache, rank_query, transform_set, RankedResult, StageSpec,
};

/// Recall levels of the 11-point interpolated curve.
pub const RECALL_LEVELS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

fn relevance(r: &RankedResult, labels: &HashMap<String, String>, query_label: &str) -> Result<Vec<bool>> {
    r.entries
        .iter()
        .map(|(id, _)| match labels.get(id) {
            Some(l) => Ok(l == query_label),
            None => Err(Error::Evaluation {
                query: r.query_id.clone(),
                msg: format!("ranked id `{id}` has no label"),
            }),
        })
        .collect()
}

fn relevant_total(r: &RankedResult, rel: &[bool]) -> Result<usize> {
    let total = rel.iter().filter(|&&x| x).count();
    if total == 0 {
        return Err(Error::Evaluation {
            query: r.query_id.clone(),
            msg: "no relevant items in the gallery".into(),
        });
    }
    Ok(total)
}

/// `(1/R) * sum_k P(k) rel(k)` over the full ranking.
pub fn average_precision(r: &RankedResult, labels: &HashMap<String, String>, query_label: &str) -> Result<f64> {
    let rel = relevance(r, labels, query_label)?;
    let total = relevant_total(r, &rel)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &is_rel) in rel.iter().enumerate() {
        if is_rel {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / total as f64)
}

fn query_label<'a>(r: &RankedResult, labels: &'a HashMap<String, String>) -> Result<&'a str> {
    labels.get(&r.query_id).map(String::as_str).ok_or_else(|| Error::Evaluation {
        query: r.query_id.clone(),
        msg: "query has no label".into(),
    })
}

fn check_nonempty(results: &[RankedResult]) -> Result<()> {
    if results.is_empty() {
        return Err(Error::Empty("no queries to evaluate".into()));
    }
    Ok(())
}

pub fn mean_average_precision(results: &[RankedResult], labels: &HashMap<String, String>) -> Result<f64> {
    check_nonempty(results)?;
    let aps = results
        .iter()
        .map(|r| average_precision(r, labels, query_label(r, labels)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Precision and recall after every rank of one ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// `(recall, precision)` at ranks `1..=n`.
    pub points: Vec<(f64, f64)>,
}

impl PrCurve {
    /// Highest precision at any rank whose recall reaches each of the 11 levels.
    pub fn interpolated(&self) -> [f64; 11] {
        let mut out = [0.0; 11];
        for (slot, level) in out.iter_mut().zip(RECALL_LEVELS) {
            *slot = self
                .points
                .iter()
                .filter(|(r, _)| *r >= level - 1e-12)
                .map(|p| p.1)
                .fold(0.0, f64::max);
        }
        out
    }

    pub fn interpolated_ap(&self) -> f64 {
        self.interpolated().iter().sum::<f64>() / 11.0
    }
}

pub fn pr_curve(r: &RankedResult, labels: &HashMap<String, String>, query_label: &str) -> Result<PrCurve> {
    let rel = relevance(r, labels, query_label)?;
    let total = relevant_total(r, &rel)? as f64;
    let mut hits = 0usize;
    let points = rel
        .iter()
        .enumerate()
        .map(|(k, &is_rel)| {
            hits += usize::from(is_rel);
            (hits as f64 / total, hits as f64 / (k + 1) as f64)
        })
        .collect();
    Ok(PrCurve { points })
}

/// Average of the per-query 11-point curves, as `(recall level, precision)`.
pub fn mean_pr_curve(curves: &[PrCurve]) -> Vec<(f64, f64)> {
    let mut sums = [0.0; 11];
    for c in curves {
        for (s, p) in sums.iter_mut().zip(c.interpolated()) {
            *s += p;
        }
    }
    let n = curves.len().max(1) as f64;
    RECALL_LEVELS.iter().zip(sums).map(|(&r, s)| (r, s / n)).collect()
}

/// Fraction of queries whose first result carries a different label.
pub fn error_rate(results: &[RankedResult], labels: &HashMap<String, String>) -> Result<f64> {
    Ok(er_curve(results, labels, 1)?.first().copied().unwrap_or(0.0))
}

/// `1 - P(k)` averaged over queries for `k = 1..=min(max_rank, shortest ranking)`.
pub fn er_curve(results: &[RankedResult], labels: &HashMap<String, String>, max_rank: usize) -> Result<Vec<f64>> {
    check_nonempty(results)?;
    let ranks = results.iter().map(RankedResult::len).min().unwrap_or(0).min(max_rank);
    let mut sums = vec![0.0; ranks];
    for r in results {
        let rel = relevance(r, labels, query_label(r, labels)?)?;
        let mut hits = 0usize;
        for (k, slot) in sums.iter_mut().enumerate() {
            hits += usize::from(rel[k]);
            *slot += 1.0 - hits as f64 / (k + 1) as f64;
        }
    }
    let n = results.len() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// Everything that determines an experiment's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub split: SplitSpec,
    pub stages: Vec<StageSpec>,
    pub metric: MetricKind,
    /// Leave-one-out only: refit the pipeline without each query.
    #[serde(default)]
    pub strict_loocv: bool,
    /// Length of the error-rate curve.
    pub er_ranks: usize,
}

impl ExperimentConfig {
    pub fn new(split: SplitSpec, stages: Vec<StageSpec>, metric: MetricKind) -> Self {
        ExperimentConfig {
            split,
            stages,
            metric,
            strict_loocv: false,
            er_ranks: 99,
        }
    }

    /// Compact label, safe to embed in a comma-separated summary line.
    pub fn label(&self) -> String {
        let split = match self.split.mode {
            SplitMode::Holdout { test_per_class } => format!("holdout{test_per_class}/seed{}", self.split.seed),
            SplitMode::Loocv if self.strict_loocv => "loocv-strict".to_string(),
            SplitMode::Loocv => "loocv".to_string(),
        };
        let stages = if self.stages.is_empty() {
            "raw".to_string()
        } else {
            self.stages.iter().map(ToString::to_string).collect::<Vec<_>>().join(">")
        };
        format!("{split}|{stages}|{}", self.metric)
    }

    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryScore {
    pub id: String,
    pub label: String,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    pub config_fingerprint: String,
    /// Hash of the ids the final pipeline was fitted on.
    pub pipeline_fingerprint: String,
    pub map: f64,
    /// Mean 11-point interpolated AP.
    pub map_11pt: f64,
    pub er: f64,
    pub per_class_map: BTreeMap<String, f64>,
    pub pr_curve: Vec<(f64, f64)>,
    /// Entry `k - 1` is the error rate after rank `k`.
    pub er_curve: Vec<f64>,
    pub queries: Vec<QueryScore>,
    pub n_queries: usize,
    pub gallery_size: usize,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl EvalReport {
    pub fn summary_line(&self) -> String {
        format!("config={},map={:.6},er={:.6}", self.config.label(), self.map, self.er)
    }
}

pub struct Experiment {
    pub report: EvalReport,
    pub results: Vec<RankedResult>,
}

pub fn run_experiment(fs: &FeatureSet, config: &ExperimentConfig) -> Result<Experiment> {
    let mut runs = run_experiments(fs, config, &[config.metric])?;
    Ok(runs.pop().expect("one metric requested"))
}

/// Runs `config` once per metric, fitting the pipeline only once. The
/// `metric` field of `config` is ignored.
pub fn run_experiments(fs: &FeatureSet, config: &ExperimentConfig, metrics: &[MetricKind]) -> Result<Vec<Experiment>> {
    run_experiments_cached(fs, config, metrics, None)
}

/// As [`run_experiments`], sharing learned dictionaries through `cache`.
pub fn run_experiments_cached(
    fs: &FeatureSet,
    config: &ExperimentConfig,
    metrics: &[MetricKind],
    cache: Option<&DictCache>,
) -> Result<Vec<Experiment>> {
    let start = Instant::now();
    fs.check_evaluable()?;
    config.split.validate(fs)?;
    let rank_each = |gallery: &FeatureSet, q: &[f64], id: &str| {
        metrics
            .iter()
            .map(|&m| rank_query(gallery, q, id, m))
            .collect::<Result<Vec<_>>>()
    };

    let (per_query, pipeline_fingerprint, gallery_size) = match config.split.mode {
        SplitMode::Holdout { .. } => {
            let (train, test) = stratified_split(fs, &config.split)?;
            let (pipeline, gallery) = fit_transform_cached(&config.stages, &train, cache)?;
            let queries = transform_set(&pipeline, &test)?;
            let ranked = queries
                .vectors()
                .par_iter()
                .map(|q| rank_each(&gallery, &q.values, &q.id))
                .collect::<Result<Vec<_>>>()?;
            (ranked, pipeline.fingerprint, gallery.len())
        }
        SplitMode::Loocv if config.strict_loocv => {
            let n = fs.len();
            let ranked = (0..n)
                .into_par_iter()
                .map(|i| {
                    let rest: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                    let (pipeline, gallery) = fit_transform_cached(&config.stages, &fs.subset(&rest), cache)?;
                    let q = &fs.vectors()[i];
                    rank_each(&gallery, &apply_pipeline(&pipeline, &q.values)?, &q.id)
                })
                .collect::<Result<Vec<_>>>()?;
            (ranked, ids_fingerprint(fs), n - 1)
        }
        SplitMode::Loocv => {
            let (pipeline, all) = fit_transform_cached(&config.stages, fs, cache)?;
            let ranked = all
                .vectors()
                .par_iter()
                .map(|q| rank_each(&all, &q.values, &q.id))
                .collect::<Result<Vec<_>>>()?;
            (ranked, pipeline.fingerprint, all.len() - 1)
        }
    };

    let mut by_metric: Vec<Vec<RankedResult>> = metrics.iter().map(|_| Vec::with_capacity(per_query.len())).collect();
    for row in per_query {
        for (slot, r) in by_metric.iter_mut().zip(row) {
            slot.push(r);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let labels = fs.label_map();
    metrics
        .iter()
        .zip(by_metric)
        .map(|(&metric, results)| {
            let config = ExperimentConfig {
                metric,
                ..config.clone()
            };
            let mut report = summarize(config, &results, &labels, gallery_size)?;
            report.pipeline_fingerprint = pipeline_fingerprint.clone();
            report.wall_clock_secs = elapsed;
            Ok(Experiment { report, results })
        })
        .collect()
}

fn summarize(
    config: ExperimentConfig,
    results: &[RankedResult],
    labels: &HashMap<String, String>,
    gallery_size: usize,
) -> Result<EvalReport> {
    check_nonempty(results)?;
    let scored = results
        .par_iter()
        .map(|r| {
            let label = query_label(r, labels)?;
            let ap = average_precision(r, labels, label)?;
            let curve = pr_curve(r, labels, label)?;
            Ok((label.to_string(), ap, curve))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = scored.len() as f64;
    let map = scored.iter().map(|s| s.1).sum::<f64>() / n;
    let map_11pt = scored.iter().map(|s| s.2.interpolated_ap()).sum::<f64>() / n;
    let mut per_class: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (label, ap, _) in &scored {
        let e = per_class.entry(label.clone()).or_default();
        e.0 += ap;
        e.1 += 1;
    }
    let curves: Vec<PrCurve> = scored.iter().map(|s| s.2.clone()).collect();
    Ok(EvalReport {
        config_fingerprint: config.fingerprint(),
        er_curve: er_curve(results, labels, config.er_ranks)?,
        config,
        pipeline_fingerprint: String::new(),
        map,
        map_11pt,
        er: error_rate(results, labels)?,
        per_class_map: per_class.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect(),
        pr_curve: mean_pr_curve(&curves),
        queries: results
            .iter()
            .zip(&scored)
            .map(|(r, (label, ap, _))| QueryScore {
                id: r.query_id.clone(),
                label: label.clone(),
                ap: *ap,
            })
            .collect(),
        n_queries: results.len(),
        gallery_size,
        wall_clock_secs: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::DctSpec;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ranking(rel: &[bool]) -> (RankedResult, HashMap<String, String>) {
        let mut labels = HashMap::new();
        labels.insert("q".to_string(), "a".to_string());
        let entries = rel
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let id = format!("g{i:02}");
                labels.insert(id.clone(), if r { "a" } else { "b" }.to_string());
                (id, i as f64)
            })
            .collect();
        (
            RankedResult {
                query_id: "q".into(),
                entries,
            },
            labels,
        )
    }

    fn clusters(classes: usize, per: usize, seed: u64) -> FeatureSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureSet::from_rows((0..classes * per).map(|i| {
            let c = i / per;
            let v: Vec<f64> = (0..classes)
                .map(|j| if j == c { 50.0 } else { 0.0 } + rng.gen_range(-1.0..1.0))
                .collect();
            (format!("x{i:03}"), format!("class{c}"), v)
        }))
        .unwrap()
    }

    #[test]
    fn ap_hand_values() {
        let (r, l) = ranking(&[true, true, false, false]);
        assert_eq!(average_precision(&r, &l, "a").unwrap(), 1.0);
        let (r, l) = ranking(&[true, false, true, false]);
        assert!((average_precision(&r, &l, "a").unwrap() - 0.833333).abs() < 1e-6);
    }

    #[test]
    fn ap_without_relevant_names_query() {
        let (r, l) = ranking(&[false, false]);
        match average_precision(&r, &l, "a") {
            Err(Error::Evaluation { query, .. }) => assert_eq!(query, "q"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn map_of_two_queries() {
        let (r1, mut l) = ranking(&[true, false]);
        let r2 = RankedResult {
            query_id: "q2".into(),
            entries: vec![("g01".into(), 0.0), ("g00".into(), 1.0)],
        };
        l.insert("q2".into(), "a".into());
        assert!((mean_average_precision(&[r1.clone()], &l).unwrap() - 1.0).abs() < 1e-15);
        assert!((mean_average_precision(&[r1, r2], &l).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn pr_curve_hand_values() {
        let (r, l) = ranking(&[true, true, false]);
        assert_eq!(pr_curve(&r, &l, "a").unwrap().interpolated(), [1.0; 11]);
        let (r, l) = ranking(&[true, false, true, false]);
        let c = pr_curve(&r, &l, "a").unwrap();
        assert!((c.interpolated()[10] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.points.last().unwrap().0, 1.0);
        assert!(c.points.windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn error_rate_counts_top1() {
        let mut labels = HashMap::new();
        let mut results = Vec::new();
        for q in 0..4 {
            let qid = format!("q{q}");
            labels.insert(qid.clone(), "a".to_string());
            let top = format!("t{q}");
            labels.insert(top.clone(), if q == 2 { "b" } else { "a" }.to_string());
            results.push(RankedResult {
                query_id: qid,
                entries: vec![(top, 0.0)],
            });
        }
        assert_eq!(error_rate(&results, &labels).unwrap(), 0.25);
        labels.insert("t2".into(), "a".into());
        assert_eq!(error_rate(&results, &labels).unwrap(), 0.0);
    }

    #[test]
    fn er_curve_length_follows_gallery() {
        let fs = clusters(2, 100, 1);
        let config = ExperimentConfig::new(SplitSpec::loocv(), vec![], MetricKind::Euclidean);
        let exp = run_experiment(&fs, &config).unwrap();
        assert_eq!(exp.report.er_curve.len(), 99);
        assert_eq!(exp.report.er_curve[0], exp.report.er);
    }

    #[test]
    fn loocv_separated_clusters() {
        let fs = clusters(10, 20, 2);
        let config = ExperimentConfig::new(SplitSpec::loocv(), vec![], MetricKind::Euclidean);
        let exp = run_experiment(&fs, &config).unwrap();
        assert!((exp.report.map - 1.0).abs() < 1e-12);
        assert_eq!(exp.report.n_queries, 200);
        assert!(exp.results.iter().all(|r| r.len() == 199));
        assert_eq!(exp.report.er, 0.0);
    }

    #[test]
    fn report_map_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fs = FeatureSet::from_rows((0..60).map(|i| {
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
            (format!("n{i}"), format!("c{}", i % 4), v)
        }))
        .unwrap();
        let config = ExperimentConfig::new(
            SplitSpec::holdout(3, 7),
            vec![StageSpec::Dct { keep: DctSpec::Keep(4) }, StageSpec::ZScore],
            MetricKind::Canberra,
        );
        let a = run_experiment(&fs, &config).unwrap();
        let b = run_experiment(&fs, &config).unwrap();
        let recomputed = mean_average_precision(&a.results, &fs.label_map()).unwrap();
        assert!((a.report.map - recomputed).abs() < 1e-12);
        let mut ra = a.report.clone();
        ra.wall_clock_secs = 0.0;
        let mut rb = b.report;
        rb.wall_clock_secs = 0.0;
        assert_eq!(ra, rb);
        assert_eq!(a.report.n_queries, 12);
        assert_eq!(a.report.gallery_size, 48);
    }

    #[test]
    fn gallery_order_does_not_change_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fs = FeatureSet::from_rows((0..40).map(|i| {
            let v = vec![rng.gen_range(0..3) as f64, rng.gen_range(0..3) as f64];
            (format!("k{i:02}"), format!("c{}", i % 3), v)
        }))
        .unwrap();
        let config = ExperimentConfig::new(SplitSpec::loocv(), vec![], MetricKind::Manhattan);
        let base = run_experiment(&fs, &config).unwrap().report.map;
        let mut order: Vec<usize> = (0..40).collect();
        order.shuffle(&mut rng);
        let shuffled = run_experiment(&fs.subset(&order), &config).unwrap().report.map;
        assert!((base - shuffled).abs() < 1e-12);
    }

    #[test]
    fn strict_loocv_refits_per_query() {
        let fs = clusters(3, 6, 5);
        let mut config = ExperimentConfig::new(SplitSpec::loocv(), vec![StageSpec::ZScore], MetricKind::Euclidean);
        config.strict_loocv = true;
        let exp = run_experiment(&fs, &config).unwrap();
        assert_eq!(exp.report.n_queries, 18);
        assert!(exp.results.iter().all(|r| r.len() == 17));
        assert!(exp.report.summary_line().starts_with("config=loocv-strict|zscore|ed,map="));
    }

    #[test]
    fn single_class_rejected() {
        let fs = FeatureSet::from_rows((0..4).map(|i| (format!("{i}"), "only", vec![i as f64]))).unwrap();
        let config = ExperimentConfig::new(SplitSpec::loocv(), vec![], MetricKind::Euclidean);
        assert!(run_experiment(&fs, &config).is_err());
    }

    #[test]
    fn multi_metric_run_matches_single_runs() {
        let fs = clusters(3, 8, 6);
        let config = ExperimentConfig::new(SplitSpec::holdout(2, 1), vec![StageSpec::ZScore], MetricKind::Euclidean);
        let runs = run_experiments(&fs, &config, &MetricKind::ALL).unwrap();
        assert_eq!(runs.len(), 4);
        for (run, metric) in runs.iter().zip(MetricKind::ALL) {
            let single = run_experiment(&fs, &ExperimentConfig { metric, ..config.clone() }).unwrap();
            assert_eq!(run.results, single.results);
            assert_eq!(run.report.map, single.report.map);
            assert_eq!(run.report.config.metric, metric);
        }
    }
}
