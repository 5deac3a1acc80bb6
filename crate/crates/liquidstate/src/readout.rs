//! Multinomial logistic-regression readout.
//!
//! Features (liquid-state spike counts, raw frames, or flattened spike
//! matrices) are standardized with training-set statistics, then a 15-way
//! softmax classifier is fit by mini-batch gradient descent on cross-entropy
//! with an L2 penalty on the weights (never the biases). Training is
//! bit-deterministic given the config seed.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{PostureLabel, NUM_CLASSES};

/// Schema tag written into model files.
pub const MODEL_VERSION: &str = "readout-model v1";

/// What the feature vectors fed to the model were.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    LiquidState,
    RawFrame,
    EncodedFlat,
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FeatureKind::LiquidState => "liquid_state",
            FeatureKind::RawFrame => "raw_frame",
            FeatureKind::EncodedFlat => "encoded_flat",
        };
        write!(f, "{s}")
    }
}

/// Gradient-descent hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Training stops early when the full-set loss moves by less than this
    /// between epochs.
    pub convergence_tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            l2_penalty: 1e-4,
            max_epochs: 300,
            batch_size: 64,
            convergence_tol: 1e-6,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.l2_penalty < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "l2_penalty must be non-negative, got {}",
                self.l2_penalty
            )));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "max_epochs and batch_size must be at least 1".into(),
            ));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "convergence_tol must be positive, got {}",
                self.convergence_tol
            )));
        }
        Ok(())
    }
}

/// Trained classifier: weights, biases, and the standardization applied to
/// every incoming feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    /// `NUM_CLASSES x F`.
    w: Array2<f64>,
    /// Length `NUM_CLASSES`.
    b: Array1<f64>,
    means: Vec<f64>,
    /// 1.0 for zero-variance features: those are centered, never scaled.
    stds: Vec<f64>,
    feature_kind: FeatureKind,
    train_config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: String,
    feature_kind: FeatureKind,
    train_config: TrainConfig,
    means: Vec<f64>,
    stds: Vec<f64>,
    b: Vec<f64>,
    w: Vec<Vec<f64>>,
}

impl ReadoutModel {
    pub fn n_features(&self) -> usize {
        self.w.ncols()
    }

    pub fn feature_kind(&self) -> FeatureKind {
        self.feature_kind
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train_config
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.b
    }

    /// Builds a model from raw parts, mainly for tests and tools.
    pub fn from_parts(
        w: Array2<f64>,
        b: Array1<f64>,
        means: Vec<f64>,
        stds: Vec<f64>,
        feature_kind: FeatureKind,
        train_config: TrainConfig,
    ) -> Result<ReadoutModel> {
        let model = ReadoutModel {
            w,
            b,
            means,
            stds,
            feature_kind,
            train_config,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.w.ncols();
        if self.w.nrows() != NUM_CLASSES || self.b.len() != NUM_CLASSES {
            return Err(Error::InvalidInput(format!(
                "model must have {NUM_CLASSES} classes, found {} weight rows and {} biases",
                self.w.nrows(),
                self.b.len()
            )));
        }
        if self.means.len() != f || self.stds.len() != f {
            return Err(Error::InvalidInput(format!(
                "model stores {} means and {} stds for {} features",
                self.means.len(),
                self.stds.len(),
                f
            )));
        }
        if self.w.iter().any(|x| !x.is_finite()) || self.b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "model parameters contain non-finite values".into(),
            ));
        }
        if self.stds.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidInput(
                "feature stds must be positive".into(),
            ));
        }
        Ok(())
    }

    fn standardize(&self, feature: &[f64]) -> Array1<f64> {
        Array1::from_iter(
            feature
                .iter()
                .zip(self.means.iter().zip(&self.stds))
                .map(|(&x, (&m, &s))| (x - m) / s),
        )
    }

    /// Class probabilities for one feature vector.
    pub fn predict_proba(&self, feature: &[f64]) -> Result<Vec<f64>> {
        if feature.len() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "feature has {} entries, model expects {}",
                feature.len(),
                self.n_features()
            )));
        }
        let z = self.standardize(feature);
        let logits = self.w.dot(&z) + &self.b;
        Ok(softmax(logits.as_slice().expect("contiguous")))
    }

    /// Most probable posture (lowest class id wins ties) plus the full
    /// probability vector.
    pub fn predict(&self, feature: &[f64]) -> Result<(PostureLabel, Vec<f64>)> {
        let probs = self.predict_proba(feature)?;
        let mut best = 0usize;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = i;
            }
        }
        let label = PostureLabel::from_id(best).expect("argmax over NUM_CLASSES probabilities");
        Ok((label, probs))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            version: MODEL_VERSION.to_string(),
            feature_kind: self.feature_kind,
            train_config: self.train_config,
            means: self.means.clone(),
            stds: self.stds.clone(),
            b: self.b.to_vec(),
            w: self.w.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        let json = serde_json::to_string(&file)?;
        fs::write(path, json)
            .map_err(|e| Error::io_context(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<ReadoutModel> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io_context(format!("reading {}", path.display()), e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.version != MODEL_VERSION {
            return Err(Error::InvalidInput(format!(
                "{}: expected {MODEL_VERSION:?}, found {:?}",
                path.display(),
                file.version
            )));
        }
        let f = file.means.len();
        if file.w.len() != NUM_CLASSES || file.w.iter().any(|row| row.len() != f) {
            return Err(Error::InvalidInput(format!(
                "{}: weight matrix is not {NUM_CLASSES} x {f}",
                path.display()
            )));
        }
        let w = Array2::from_shape_vec(
            (NUM_CLASSES, f),
            file.w.into_iter().flatten().collect(),
        )
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
        ReadoutModel::from_parts(
            w,
            Array1::from_vec(file.b),
            file.means,
            file.stds,
            file.feature_kind,
            file.train_config,
        )
    }
}

/// Numerically stable softmax; output sums to 1 within 1e-9.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean cross-entropy over `z`/`y` plus `0.5 * l2 * ||w||^2`. `z` is
/// `N x F` standardized features, `y` one class id per row.
pub fn regularized_loss(w: &Array2<f64>, b: &Array1<f64>, z: &Array2<f64>, y: &[usize], l2: f64) -> f64 {
    let logits = z.dot(&w.t()) + b;
    let mut ce = 0.0;
    for (row, &label) in logits.rows().into_iter().zip(y) {
        let row = row.as_slice().expect("contiguous");
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln() + max;
        ce -= row[label] - log_sum;
    }
    ce / y.len() as f64 + 0.5 * l2 * w.iter().map(|x| x * x).sum::<f64>()
}

/// Analytic gradient of [`regularized_loss`] in `(d_w, d_b)`.
pub fn loss_gradients(
    w: &Array2<f64>,
    b: &Array1<f64>,
    z: &Array2<f64>,
    y: &[usize],
    l2: f64,
) -> (Array2<f64>, Array1<f64>) {
    let n = y.len() as f64;
    let logits = z.dot(&w.t()) + b;
    let mut p = Array2::zeros(logits.raw_dim());
    for (i, row) in logits.rows().into_iter().enumerate() {
        let sm = softmax(row.as_slice().expect("contiguous"));
        for (j, v) in sm.into_iter().enumerate() {
            p[(i, j)] = v;
        }
    }
    for (i, &label) in y.iter().enumerate() {
        p[(i, label)] -= 1.0;
    }
    let d_w = p.t().dot(z) / n + &(w * l2);
    let d_b = p.sum_axis(Axis(0)) / n;
    (d_w, d_b)
}

fn feature_stats(features: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = features.nrows() as f64;
    let mut means = Vec::with_capacity(features.ncols());
    let mut stds = Vec::with_capacity(features.ncols());
    for col in features.columns() {
        let mean = col.sum() / n;
        let var = col.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
        means.push(mean);
        // Zero-variance features are centered but not scaled.
        stds.push(if var > 0.0 { var.sqrt() } else { 1.0 });
    }
    (means, stds)
}

fn check_training_inputs(features: &[Vec<f64>], labels: &[PostureLabel]) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::InvalidInput("no training samples".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature vectors for {} labels",
            features.len(),
            labels.len()
        )));
    }
    let f = features[0].len();
    if f == 0 {
        return Err(Error::InvalidInput("feature vectors are empty".into()));
    }
    for (i, v) in features.iter().enumerate() {
        if v.len() != f {
            return Err(Error::DimensionMismatch(format!(
                "feature vector {i} has {} entries, expected {f}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "feature vector {i} contains non-finite values"
            )));
        }
    }
    let mut seen = [false; NUM_CLASSES];
    for l in labels {
        seen[l.id()] = true;
    }
    if seen.iter().filter(|s| **s).count() < 2 {
        return Err(Error::InvalidInput(
            "training needs at least two distinct classes".into(),
        ));
    }
    Ok(f)
}

/// [`train_readout`] plus the per-epoch loss trace.
pub fn train_readout_with_history(
    features: &[Vec<f64>],
    labels: &[PostureLabel],
    feature_kind: FeatureKind,
    cfg: &TrainConfig,
) -> Result<(ReadoutModel, Vec<f64>)> {
    cfg.validate()?;
    let f = check_training_inputs(features, labels)?;
    let n = features.len();

    let flat: Vec<f64> = features.iter().flatten().copied().collect();
    let raw = Array2::from_shape_vec((n, f), flat).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let (means, stds) = feature_stats(&raw);
    let mut z = raw;
    for (j, col) in z.columns_mut().into_iter().enumerate() {
        let (m, s) = (means[j], stds[j]);
        for x in col {
            *x = (*x - m) / s;
        }
    }
    let y: Vec<usize> = labels.iter().map(|l| l.id()).collect();

    let mut w: Array2<f64> = Array2::zeros((NUM_CLASSES, f));
    let mut b: Array1<f64> = Array1::zeros(NUM_CLASSES);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.max_epochs + 1);
    history.push(regularized_loss(&w, &b, &z, &y, cfg.l2_penalty));

    let mut batch_z = Array2::zeros((cfg.batch_size.min(n), f));
    let mut batch_y = vec![0usize; cfg.batch_size.min(n)];
    for _ in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() != batch_y.len() {
                batch_z = Array2::zeros((chunk.len(), f));
                batch_y.resize(chunk.len(), 0);
            }
            for (bi, &si) in chunk.iter().enumerate() {
                batch_z.row_mut(bi).assign(&z.row(si));
                batch_y[bi] = y[si];
            }
            let (d_w, d_b) = loss_gradients(&w, &b, &batch_z, &batch_y, cfg.l2_penalty);
            w.scaled_add(-cfg.learning_rate, &d_w);
            b.scaled_add(-cfg.learning_rate, &d_b);
        }
        let loss = regularized_loss(&w, &b, &z, &y, cfg.l2_penalty);
        let prev = *history.last().expect("seeded");
        history.push(loss);
        if (prev - loss).abs() < cfg.convergence_tol {
            break;
        }
    }

    let model = ReadoutModel::from_parts(w, b, means, stds, feature_kind, *cfg)?;
    Ok((model, history))
}

/// Fits the classifier. Deterministic: the same inputs and seed give
/// bit-identical parameters.
pub fn train_readout(
    features: &[Vec<f64>],
    labels: &[PostureLabel],
    feature_kind: FeatureKind,
    cfg: &TrainConfig,
) -> Result<ReadoutModel> {
    train_readout_with_history(features, labels, feature_kind, cfg).map(|(m, _)| m)
}
