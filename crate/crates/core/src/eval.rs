//! Hide-and-predict evaluation (p@1, p@5 by degree bucket) and the
//! edge-classifier sweep over the planted model's `q` parameter.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use log::warn;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeKey, LayeredGraph, NodeId};
use crate::learner::{self, featurize, FeatureVector, LrModel, Schema, TrainParams};
use crate::motif::{self, CandidateScores, EgoNetwork, RankDirection, ScoreKey};
use crate::planted::{self, mean_stderr, PlantedConfig};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub d_min: usize,
    pub d_max: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec {
            test_fraction: 0.05,
            d_min: 10,
            d_max: 75,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        if self.d_min > self.d_max {
            return Err(Error::InvalidConfig(format!(
                "degree band [{}, {}] is empty",
                self.d_min, self.d_max
            )));
        }
        Ok(())
    }

    fn in_band(&self, g: &LayeredGraph, v: NodeId) -> bool {
        (self.d_min..=self.d_max).contains(&g.weak_degree(v))
    }
}

#[derive(Clone, Debug)]
pub struct HiddenSplit {
    pub spec: SplitSpec,
    pub train_graph: LayeredGraph,
    /// Ascending node ids.
    pub test_nodes: Vec<NodeId>,
    /// Hidden strong neighbors of each test node, parallel to `test_nodes`.
    pub ground_truth: Vec<Vec<NodeId>>,
    pub eligible_count: usize,
    pub hidden_edges: usize,
}

/// Nodes with at least one strong edge and weak degree inside the band.
pub fn eligible_nodes(g: &LayeredGraph, spec: &SplitSpec) -> Vec<NodeId> {
    (0..g.node_count())
        .map(NodeId::from)
        .filter(|&v| g.strong_degree(v) > 0 && spec.in_band(g, v))
        .collect()
}

const STREAM_SPLIT: u64 = 0x5B17;

pub fn make_split(g: &LayeredGraph, spec: &SplitSpec) -> Result<HiddenSplit> {
    spec.validate()?;
    let eligible = eligible_nodes(g, spec);
    if eligible.is_empty() {
        return Err(Error::NoEligibleNodes {
            d_min: spec.d_min,
            d_max: spec.d_max,
        });
    }
    let take = ((spec.test_fraction * eligible.len() as f64).ceil() as usize).clamp(1, eligible.len());
    let mut rng = rng::chacha(spec.seed, &[STREAM_SPLIT]);
    let mut test_nodes: Vec<NodeId> = index::sample(&mut rng, eligible.len(), take)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    test_nodes.sort_unstable();
    let ground_truth: Vec<Vec<NodeId>> = test_nodes.iter().map(|&v| g.strong(v).to_vec()).collect();
    let hidden: HashSet<EdgeKey> = test_nodes
        .iter()
        .flat_map(|&v| g.strong(v).iter().filter_map(move |&u| EdgeKey::new(u, v)))
        .collect();
    Ok(HiddenSplit {
        spec: *spec,
        train_graph: g.with_strong_cleared(&test_nodes),
        test_nodes,
        ground_truth,
        eligible_count: eligible.len(),
        hidden_edges: hidden.len(),
    })
}

#[derive(Clone, Debug)]
pub enum Method {
    /// Uniform shuffle of the candidates, seeded per focal node.
    Random { seed: u64 },
    Score(ScoreKey),
    Model { name: String, model: LrModel },
    /// Knows the hidden edges; a sanity ceiling.
    Oracle,
    /// Every candidate scores the same, leaving only the tie-break.
    Constant,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Random { .. } => "random".into(),
            Method::Score(k) => k.name().into(),
            Method::Model { name, .. } => name.clone(),
            Method::Oracle => "oracle".into(),
            Method::Constant => "constant".into(),
        }
    }

    /// Every Table-1 style single-score method plus random.
    pub fn baselines(seed: u64) -> Vec<Method> {
        std::iter::once(Method::Random { seed })
            .chain(ScoreKey::ALL.into_iter().map(Method::Score))
            .collect()
    }

    /// Ranks `B(a)` best first. `scores` must be `EgoNetwork::all_scores`
    /// of `a` on the graph `g`.
    pub fn rank(
        &self,
        g: &LayeredGraph,
        a: NodeId,
        scores: &[CandidateScores],
        ground_truth: &[NodeId],
    ) -> Result<Vec<NodeId>> {
        match self {
            Method::Random { seed } => motif::random_ranking(g, a, *seed),
            Method::Score(k) => motif::rank_candidates(scores, *k, k.direction()),
            Method::Model { model, .. } => {
                let values = scores
                    .iter()
                    .map(|s| model.margin(&featurize(s, model.schema)?))
                    .collect::<Result<Vec<_>>>()?;
                motif::rank_by_values(scores, &values, RankDirection::Maximize, false)
            }
            Method::Oracle => {
                let values: Vec<f64> = scores
                    .iter()
                    .map(|s| f64::from(u8::from(ground_truth.binary_search(&s.candidate).is_ok())))
                    .collect();
                motif::rank_by_values(scores, &values, RankDirection::Maximize, false)
            }
            Method::Constant => {
                motif::rank_by_values(scores, &vec![0.0; scores.len()], RankDirection::Maximize, false)
            }
        }
    }
}

/// Labeled candidate features from every non-test node `a′` with
/// `d_S(a′) > 0` inside the degree band of `split`, computed on the
/// training graph. The focal node's own strong flags are masked by the
/// scorers, matching what a test node looks like.
pub fn training_examples(split: &HiddenSplit, schema: Schema) -> Result<Vec<(FeatureVector, bool)>> {
    let g = &split.train_graph;
    let test: BTreeSet<NodeId> = split.test_nodes.iter().copied().collect();
    let nodes: Vec<NodeId> = eligible_nodes(g, &split.spec)
        .into_iter()
        .filter(|v| !test.contains(v))
        .collect();
    let per_node: Vec<Vec<(FeatureVector, bool)>> = nodes
        .par_iter()
        .map(|&a| {
            let ego = EgoNetwork::new(g, a)?;
            ego.all_scores()
                .iter()
                .map(|s| Ok((featurize(s, schema)?, g.is_strong_edge(a, s.candidate))))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_node.into_iter().flatten().collect())
}

/// The basic (group 1) and enhanced (group 2) ranking models.
pub fn train_ranking_models(split: &HiddenSplit, params: TrainParams) -> Result<(LrModel, LrModel)> {
    let train = |schema| -> Result<LrModel> {
        let examples = training_examples(split, schema)?;
        Ok(learner::train_with_seed(&examples, params, Some(split.spec.seed))?.model)
    };
    Ok((train(Schema::Group1)?, train(Schema::Group2)?))
}

pub fn model_methods(basic: LrModel, enhanced: LrModel) -> [Method; 2] {
    [
        Method::Model {
            name: "basic_lr".into(),
            model: basic,
        },
        Method::Model {
            name: "enhanced_lr".into(),
            model: enhanced,
        },
    ]
}

/// Degree buckets of `width` starting at `lo`; the last may be narrower.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucketing {
    pub lo: usize,
    pub hi: usize,
    pub width: usize,
}

impl Bucketing {
    pub fn unit(spec: &SplitSpec) -> Self {
        Bucketing {
            lo: spec.d_min,
            hi: spec.d_max,
            width: 1,
        }
    }

    pub fn bucket(&self, degree: usize) -> Option<(usize, usize)> {
        if degree < self.lo || degree > self.hi || self.width == 0 {
            return None;
        }
        let start = self.lo + (degree - self.lo) / self.width * self.width;
        Some((start, (start + self.width - 1).min(self.hi)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub method: String,
    pub bucket_lo: usize,
    pub bucket_hi: usize,
    pub n: usize,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub k: usize,
    pub rows: Vec<EvalRow>,
    pub overall: Vec<MethodSummary>,
    /// Test nodes evaluated (after the `|ground truth| ≥ k` filter).
    pub evaluated: usize,
    pub skipped_no_candidates: usize,
    pub skipped_out_of_buckets: usize,
}

impl EvalReport {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.overall.iter().find(|m| m.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,bucket_lo,bucket_hi,n,precision\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.method, r.bucket_lo, r.bucket_hi, r.n, r.precision).unwrap();
        }
        out
    }
}

/// Mean over qualifying test nodes of `|ground truth| / d_L`: the expected
/// p@k of a uniformly random ranking.
pub fn random_expectation(split: &HiddenSplit, k: usize) -> f64 {
    let ratios: Vec<f64> = split
        .test_nodes
        .iter()
        .zip(&split.ground_truth)
        .filter(|(_, gt)| gt.len() >= k)
        .map(|(&v, gt)| gt.len() as f64 / split.train_graph.weak_degree(v) as f64)
        .collect();
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

/// Precision in the top `k` per method, bucketed by weak degree. Nodes
/// with fewer than `k` hidden edges are not evaluated.
pub fn evaluate_p_at_k(split: &HiddenSplit, methods: &[Method], buckets: &Bucketing, k: usize) -> Result<EvalReport> {
    let g = &split.train_graph;
    let qualifying: Vec<usize> = (0..split.test_nodes.len())
        .filter(|&i| split.ground_truth[i].len() >= k)
        .collect();
    if qualifying.is_empty() {
        warn!("no test node has {k} or more hidden strong edges; report is empty");
    }
    // per node: None if skipped, else its bucket and per-method precision
    let per_node: Vec<Option<((usize, usize), Vec<f64>)>> = qualifying
        .par_iter()
        .map(|&i| {
            let a = split.test_nodes[i];
            let gt = &split.ground_truth[i];
            let ego = EgoNetwork::new(g, a)?;
            let scores = ego.all_scores();
            if scores.is_empty() {
                return Ok(None);
            }
            let Some(bucket) = buckets.bucket(g.weak_degree(a)) else {
                return Ok(None);
            };
            let precisions = methods
                .iter()
                .map(|m| {
                    let ranked = m.rank(g, a, &scores, gt)?;
                    let hits = ranked.iter().take(k).filter(|c| gt.binary_search(c).is_ok()).count();
                    Ok(hits as f64 / k as f64)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Some((bucket, precisions)))
        })
        .collect::<Result<_>>()?;

    let mut skipped_no_candidates = 0;
    let mut skipped_out_of_buckets = 0;
    for (&i, r) in qualifying.iter().zip(&per_node) {
        if r.is_none() {
            if g.weak_degree(split.test_nodes[i]) == 0 {
                skipped_no_candidates += 1;
            } else {
                skipped_out_of_buckets += 1;
            }
        }
    }
    if skipped_no_candidates > 0 {
        warn!("{skipped_no_candidates} test nodes had no candidates and were skipped");
    }

    let evaluated: Vec<&((usize, usize), Vec<f64>)> = per_node.iter().flatten().collect();
    let mut by_bucket: BTreeMap<(usize, usize), Vec<&Vec<f64>>> = BTreeMap::new();
    for (bucket, p) in &evaluated {
        by_bucket.entry(*bucket).or_default().push(p);
    }
    let mut rows = Vec::new();
    let mut overall = Vec::new();
    for (mi, m) in methods.iter().enumerate() {
        let name = m.name();
        for (&(lo, hi), nodes) in &by_bucket {
            let sum: f64 = nodes.iter().map(|p| p[mi]).sum();
            rows.push(EvalRow {
                method: name.clone(),
                bucket_lo: lo,
                bucket_hi: hi,
                n: nodes.len(),
                precision: sum / nodes.len() as f64,
            });
        }
        let all: Vec<f64> = evaluated.iter().map(|(_, p)| p[mi]).collect();
        let (mean, stderr) = mean_stderr(&all);
        overall.push(MethodSummary {
            method: name,
            n: all.len(),
            mean,
            stderr,
        });
    }
    Ok(EvalReport {
        k,
        rows,
        overall,
        evaluated: evaluated.len(),
        skipped_no_candidates,
        skipped_out_of_buckets,
    })
}

pub fn evaluate_p_at_1(split: &HiddenSplit, methods: &[Method], buckets: &Bucketing) -> Result<EvalReport> {
    evaluate_p_at_k(split, methods, buckets, 1)
}

pub fn evaluate_p_at_5(split: &HiddenSplit, methods: &[Method], buckets: &Bucketing) -> Result<EvalReport> {
    evaluate_p_at_k(split, methods, buckets, 5)
}

// ---------------------------------------------------------------------------
// q sweep

pub const SWEEP_SCHEMAS: [Schema; 3] = [Schema::TrianglesOnly, Schema::SquaresOnly, Schema::Combined];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Precision, Metric::Recall, Metric::F1];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
        }
    }

    /// Strong-class scores; undefined ratios are reported as 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Scores { precision, recall, f1 }
    }
}

/// One schema's outcome for one `(q, rep)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub q: f64,
    pub rep: usize,
    pub schema: Schema,
    /// `None` when the run could not produce a classifier.
    pub scores: Option<Scores>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: PlantedConfig,
    pub q_values: Vec<f64>,
    pub reps: usize,
    pub schemas: Vec<Schema>,
    pub params: TrainParams,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if self.q_values.is_empty() || self.schemas.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one q value and one schema".into()));
        }
        if let Some(q) = self.q_values.iter().find(|q| !q.is_finite() || **q < 0.0) {
            return Err(Error::InvalidConfig(format!("invalid q value {q}")));
        }
        Ok(())
    }

    /// `(train, test)` configs for one grid point; train and test graphs
    /// are independent draws.
    pub fn configs(&self, q: f64, rep: usize) -> (PlantedConfig, PlantedConfig) {
        let key = [q.to_bits(), rep as u64];
        let make = |role: u64| PlantedConfig {
            q,
            seed: rng::derive(self.base.seed, &[key[0], key[1], role]),
            ..self.base.clone()
        };
        (make(0), make(1))
    }
}

/// The q grid `0.1, 0.2, …, 2.5`.
pub fn paper_q_grid() -> Vec<f64> {
    (1..=25).map(|i| i as f64 / 10.0).collect()
}

fn labeled_edges(g: &LayeredGraph, schema: Schema) -> Result<Vec<(FeatureVector, bool)>> {
    planted::edge_motif_counts(g)
        .iter()
        .map(|m| Ok((featurize(m, schema)?, g.is_strong_edge(m.edge.u, m.edge.v))))
        .collect()
}

/// Trains one edge classifier per schema on a fresh planted graph and
/// scores it on an independent one.
pub fn sweep_point(spec: &SweepSpec, q: f64, rep: usize) -> Vec<RunRecord> {
    let empty = |note: String| -> Vec<RunRecord> {
        spec.schemas
            .iter()
            .map(|&schema| RunRecord {
                q,
                rep,
                schema,
                scores: None,
                note: note.clone(),
            })
            .collect()
    };
    let (train_cfg, test_cfg) = spec.configs(q, rep);
    if let Err(e) = train_cfg.validate() {
        return empty(format!("skipped: {e}"));
    }
    let (train_g, test_g) = match (planted::generate(&train_cfg), planted::generate(&test_cfg)) {
        (Ok(a), Ok(b)) => (a.graph, b.graph),
        (Err(e), _) | (_, Err(e)) => return empty(format!("skipped: {e}")),
    };
    spec.schemas
        .iter()
        .map(|&schema| {
            let outcome = (|| -> Result<Scores> {
                let train = labeled_edges(&train_g, schema)?;
                let model = learner::train_with_seed(&train, spec.params, Some(train_cfg.seed))?.model;
                let (mut tp, mut fp, mut fn_) = (0, 0, 0);
                for (x, strong) in labeled_edges(&test_g, schema)? {
                    match (model.classify(&x)?, strong) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, true) => fn_ += 1,
                        (false, false) => {}
                    }
                }
                Ok(Scores::from_counts(tp, fp, fn_))
            })();
            match outcome {
                Ok(s) => RunRecord {
                    q,
                    rep,
                    schema,
                    scores: Some(s),
                    note: String::new(),
                },
                Err(e) => RunRecord {
                    q,
                    rep,
                    schema,
                    scores: None,
                    note: e.to_string(),
                },
            }
        })
        .collect()
}

/// Runs every `(q, rep)` pair not in `done`, in parallel. Output order is
/// by grid position regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec, done: &HashSet<(u64, usize)>) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let todo: Vec<(f64, usize)> = spec
        .q_values
        .iter()
        .flat_map(|&q| (0..spec.reps).map(move |rep| (q, rep)))
        .filter(|(q, rep)| !done.contains(&(q.to_bits(), *rep)))
        .collect();
    Ok(todo
        .par_iter()
        .map(|&(q, rep)| sweep_point(spec, q, rep))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub q: f64,
    pub schema: Schema,
    pub metric: Metric,
    /// `None` when no rep produced a classifier.
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub reps: usize,
}

/// Mean ± standard error per `(q, schema, metric)` in grid order. Records
/// outside the grid or beyond `reps` are ignored.
pub fn aggregate(spec: &SweepSpec, records: &[RunRecord]) -> Vec<SweepRow> {
    let mut by_key: BTreeMap<(u64, Schema), BTreeMap<usize, Scores>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.rep < spec.reps) {
        if let Some(s) = r.scores {
            by_key.entry((r.q.to_bits(), r.schema)).or_default().insert(r.rep, s);
        }
    }
    let mut rows = Vec::new();
    for &q in &spec.q_values {
        for &schema in &spec.schemas {
            let runs = by_key.get(&(q.to_bits(), schema));
            for metric in Metric::ALL {
                let xs: Vec<f64> = runs.map(|m| m.values().map(|s| s.get(metric)).collect()).unwrap_or_default();
                let (mean, stderr) = if xs.is_empty() {
                    (None, None)
                } else {
                    let (m, s) = mean_stderr(&xs);
                    (Some(m), Some(s))
                };
                rows.push(SweepRow {
                    q,
                    schema,
                    metric,
                    mean,
                    stderr,
                    reps: xs.len(),
                });
            }
        }
    }
    rows
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("q,schema,metric,mean,stderr,reps\n");
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.q,
            r.schema.name(),
            r.metric.name(),
            opt(r.mean),
            opt(r.stderr),
            r.reps
        )
        .unwrap();
    }
    out
}

pub fn lookup(rows: &[SweepRow], q: f64, schema: Schema, metric: Metric) -> Option<&SweepRow> {
    rows.iter()
        .find(|r| r.q.to_bits() == q.to_bits() && r.schema == schema && r.metric == metric)
}

pub const RUNS_HEADER: &str = "q,rep,schema,status,precision,recall,f1,note";

/// Per-run log used for resuming a sweep.
pub fn write_runs<W: Write>(mut w: W, records: &[RunRecord]) -> std::io::Result<()> {
    for r in records {
        let note = r.note.replace([',', '\n', '\r'], ";");
        match r.scores {
            Some(s) => writeln!(w, "{},{},{},ok,{},{},{},{}", r.q, r.rep, r.schema.name(), s.precision, s.recall, s.f1, note)?,
            None => writeln!(w, "{},{},{},empty,,,,{}", r.q, r.rep, r.schema.name(), note)?,
        }
    }
    Ok(())
}

pub fn read_runs<R: BufRead>(reader: R) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.is_empty() || line == RUNS_HEADER {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let f: Vec<&str> = line.splitn(8, ',').collect();
        if f.len() != 8 {
            return Err(bad(format!("expected 8 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let scores = match f[3] {
            "ok" => Some(Scores {
                precision: num(f[4])?,
                recall: num(f[5])?,
                f1: num(f[6])?,
            }),
            "empty" => None,
            other => return Err(bad(format!("unknown status {other:?}"))),
        };
        out.push(RunRecord {
            q: num(f[0])?,
            rep: f[1].parse().map_err(|e| bad(format!("rep: {e}")))?,
            schema: f[2].parse()?,
            scores,
            note: f[7].to_string(),
        });
    }
    Ok(out)
}

/// `(q bits, rep)` pairs whose every schema has a record.
pub fn completed_points(spec: &SweepSpec, records: &[RunRecord]) -> HashSet<(u64, usize)> {
    let mut seen: BTreeMap<(u64, usize), BTreeSet<Schema>> = BTreeMap::new();
    for r in records {
        seen.entry((r.q.to_bits(), r.rep)).or_default().insert(r.schema);
    }
    seen.into_iter()
        .filter(|(_, s)| spec.schemas.iter().all(|x| s.contains(x)))
        .map(|(k, _)| k)
        .collect()
}
