//! Logistic regression over motif scores and their `ln(1 + x)` transforms.
//!
//! Features are standardized with training-set statistics and the
//! L2-regularized mean log-loss is minimized by full-batch gradient
//! descent. Training is sequential, so a fixed example order and fixed
//! hyperparameters give a bit-identical model.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::motif::CandidateScores;
use crate::planted::EdgeMotifCounts;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schema {
    /// Link-prediction baselines: degree, embeddedness, Adamic-Adar, H1,
    /// triangles.
    Group1,
    /// Group 1 plus squares and pentagons inside and outside the ego network.
    Group2,
    TrianglesOnly,
    SquaresOnly,
    Combined,
}

impl Schema {
    pub fn raw_names(self) -> &'static [&'static str] {
        match self {
            Schema::Group1 => &["degree", "embeddedness", "adamic_adar", "h1", "triangle"],
            Schema::Group2 => &[
                "degree",
                "embeddedness",
                "adamic_adar",
                "h1",
                "triangle",
                "square_in",
                "square_out",
                "pent_in",
                "pent_out",
            ],
            Schema::TrianglesOnly => &["triangles"],
            Schema::SquaresOnly => &["squares"],
            Schema::Combined => &["triangles", "squares"],
        }
    }

    /// Raw names followed by `log_<name>` for each.
    pub fn feature_names(self) -> Vec<String> {
        let raw = self.raw_names();
        raw.iter()
            .map(|s| s.to_string())
            .chain(raw.iter().map(|s| format!("log_{s}")))
            .collect()
    }

    pub fn len(self) -> usize {
        2 * self.raw_names().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            Schema::Group1 => "group1",
            Schema::Group2 => "group2",
            Schema::TrianglesOnly => "triangles-only",
            Schema::SquaresOnly => "squares-only",
            Schema::Combined => "combined",
        }
    }

    fn is_candidate_schema(self) -> bool {
        matches!(self, Schema::Group1 | Schema::Group2)
    }
}

impl std::str::FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "group1" => Schema::Group1,
            "group2" => Schema::Group2,
            "triangles-only" => Schema::TrianglesOnly,
            "squares-only" => Schema::SquaresOnly,
            "combined" => Schema::Combined,
            other => return Err(Error::Schema(format!("unknown schema {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub schema: Schema,
    pub values: Vec<f64>,
}

/// Anything that can supply the raw values of a schema.
pub trait FeatureSource {
    fn raw_features(&self, schema: Schema) -> Result<Vec<f64>>;
}

impl FeatureSource for CandidateScores {
    fn raw_features(&self, schema: Schema) -> Result<Vec<f64>> {
        if !schema.is_candidate_schema() {
            return Err(Error::Schema(format!(
                "schema {} needs per-edge motif counts, not candidate scores",
                schema.name()
            )));
        }
        let mut v = vec![
            self.degree as f64,
            self.embeddedness as f64,
            self.adamic_adar,
            self.h1,
            self.triangle as f64,
        ];
        if schema == Schema::Group2 {
            v.extend([
                self.square_in as f64,
                self.square_out as f64,
                self.pent_in as f64,
                self.pent_out as f64,
            ]);
        }
        Ok(v)
    }
}

impl FeatureSource for EdgeMotifCounts {
    fn raw_features(&self, schema: Schema) -> Result<Vec<f64>> {
        let (t, s) = (self.triangles as f64, self.squares as f64);
        match schema {
            Schema::TrianglesOnly => Ok(vec![t]),
            Schema::SquaresOnly => Ok(vec![s]),
            Schema::Combined => Ok(vec![t, s]),
            _ => Err(Error::Schema(format!(
                "schema {} needs candidate scores, not per-edge motif counts",
                schema.name()
            ))),
        }
    }
}

pub fn featurize(source: &impl FeatureSource, schema: Schema) -> Result<FeatureVector> {
    let raw = source.raw_features(schema)?;
    let logs: Vec<f64> = raw.iter().map(|x| x.ln_1p()).collect();
    let mut values = raw;
    values.extend(logs);
    Ok(FeatureVector { schema, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub examples: usize,
    pub positives: usize,
    /// SHA-256 over the feature and label bytes in training order.
    pub dataset_hash: String,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub format_version: u32,
    pub schema: Schema,
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub threshold: f64,
    pub params: TrainParams,
    pub meta: TrainingMeta,
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub model: LrModel,
    /// Training loss before each epoch's update, plus the final loss.
    pub loss_trace: Vec<f64>,
}

/// Row-major standardized design matrix.
#[derive(Clone, Debug)]
pub struct Standardized {
    pub rows: usize,
    pub cols: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean log-loss plus `l2/2 · ‖w‖²` and its gradient `(∂w, ∂b)`.
pub fn loss_and_gradient(data: &Standardized, weights: &[f64], bias: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let n = data.rows as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; data.cols];
    let mut gb = 0.0;
    for (row, &y) in data.x.chunks_exact(data.cols).zip(&data.y) {
        let z = bias + row.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>();
        // one exp serves both the loss and the residual
        let e = (-z.abs()).exp();
        loss += z.max(0.0) + e.ln_1p() - y * z;
        let p = if z >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
        let r = p - y;
        gb += r;
        for (g, x) in gw.iter_mut().zip(row) {
            *g += r * x;
        }
    }
    loss /= n;
    gb /= n;
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, gw, gb)
}

fn validate_examples(examples: &[(FeatureVector, bool)]) -> Result<(Schema, usize)> {
    let first = examples
        .first()
        .ok_or_else(|| Error::DegenerateTraining("no examples".into()))?;
    let schema = first.0.schema;
    let positives = examples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == examples.len() {
        return Err(Error::DegenerateTraining(format!(
            "{positives} positive of {} examples; need both classes",
            examples.len()
        )));
    }
    for (i, (fv, _)) in examples.iter().enumerate() {
        if fv.schema != schema || fv.values.len() != schema.len() {
            return Err(Error::Schema(format!("example {i} does not match schema {}", schema.name())));
        }
        if let Some(j) = fv.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { example: i, feature: j });
        }
    }
    Ok((schema, positives))
}

fn dataset_hash(examples: &[(FeatureVector, bool)]) -> String {
    let mut h = Sha256::new();
    for (fv, y) in examples {
        for v in &fv.values {
            h.update(v.to_le_bytes());
        }
        h.update([u8::from(*y)]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Column means and standard deviations; constant columns get std 1.
pub fn standardization(examples: &[(FeatureVector, bool)], cols: usize) -> (Vec<f64>, Vec<f64>) {
    let n = examples.len() as f64;
    let mut means = vec![0.0; cols];
    for (fv, _) in examples {
        for (m, v) in means.iter_mut().zip(&fv.values) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = vec![0.0; cols];
    for (fv, _) in examples {
        for ((s, v), m) in stds.iter_mut().zip(&fv.values).zip(&means) {
            *s += (v - m).powi(2);
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt();
        if !(*s > 1e-12) {
            *s = 1.0;
        }
    }
    (means, stds)
}

pub fn standardize(examples: &[(FeatureVector, bool)], means: &[f64], stds: &[f64]) -> Standardized {
    let cols = means.len();
    let mut x = Vec::with_capacity(examples.len() * cols);
    let mut y = Vec::with_capacity(examples.len());
    for (fv, label) in examples {
        x.extend(fv.values.iter().zip(means).zip(stds).map(|((v, m), s)| (v - m) / s));
        y.push(if *label { 1.0 } else { 0.0 });
    }
    Standardized {
        rows: examples.len(),
        cols,
        x,
        y,
    }
}

pub fn train(examples: &[(FeatureVector, bool)], params: TrainParams) -> Result<Trained> {
    train_with_seed(examples, params, None)
}

pub fn train_with_seed(examples: &[(FeatureVector, bool)], params: TrainParams, seed: Option<u64>) -> Result<Trained> {
    let (schema, positives) = validate_examples(examples)?;
    let cols = schema.len();
    let (means, stds) = standardization(examples, cols);
    let data = standardize(examples, &means, &stds);
    let mut weights = vec![0.0; cols];
    let mut bias = 0.0;
    let mut loss_trace = Vec::with_capacity(params.epochs + 1);
    for _ in 0..params.epochs {
        let (loss, gw, gb) = loss_and_gradient(&data, &weights, bias, params.l2);
        loss_trace.push(loss);
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= params.learning_rate * g;
        }
        bias -= params.learning_rate * gb;
    }
    loss_trace.push(loss_and_gradient(&data, &weights, bias, params.l2).0);
    Ok(Trained {
        model: LrModel {
            format_version: MODEL_FORMAT_VERSION,
            schema,
            feature_names: schema.feature_names(),
            weights,
            bias,
            means,
            stds,
            threshold: 0.5,
            params,
            meta: TrainingMeta {
                examples: examples.len(),
                positives,
                dataset_hash: dataset_hash(examples),
                seed,
            },
        },
        loss_trace,
    })
}

impl LrModel {
    pub fn margin(&self, x: &FeatureVector) -> Result<f64> {
        if x.schema != self.schema || x.values.len() != self.weights.len() {
            return Err(Error::Schema(format!(
                "model expects {} ({} values), got {} ({} values)",
                self.schema.name(),
                self.weights.len(),
                x.schema.name(),
                x.values.len()
            )));
        }
        Ok(self.bias
            + x.values
                .iter()
                .zip(&self.means)
                .zip(&self.stds)
                .zip(&self.weights)
                .map(|(((v, m), s), w)| w * (v - m) / s)
                .sum::<f64>())
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64> {
        Ok(sigmoid(self.margin(x)?))
    }

    pub fn classify(&self, x: &FeatureVector) -> Result<bool> {
        Ok(self.predict_proba(x)? >= self.threshold)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(MODEL_FORMAT_VERSION) => {}
            Some(v) => {
                return Err(Error::ModelFormat(format!(
                    "unsupported format version {v} (expected {MODEL_FORMAT_VERSION})"
                )))
            }
            None => return Err(Error::ModelFormat("missing format_version".into())),
        }
        let model: LrModel = serde_json::from_value(value).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if model.weights.len() != model.schema.len()
            || model.means.len() != model.weights.len()
            || model.stds.len() != model.weights.len()
        {
            return Err(Error::ModelFormat("array lengths do not match schema".into()));
        }
        Ok(model)
    }
}

pub fn save_model(model: &LrModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LrModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LrModel::from_json(&text)
}
