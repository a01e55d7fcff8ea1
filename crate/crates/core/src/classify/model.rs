use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureVector, DEFAULT_DIM};
use super::predictions::{Prediction, PredictionKind, PredictionSet};
use super::tokenize::tokenize;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::split::{LabeledSet, SetKind};

const MODEL_FORMAT: &str = "cwevd-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Binary,
    Multiclass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub epochs: usize,
    /// Initial step size; epoch `e` (0-based) uses `learning_rate / (1 + e)`.
    pub learning_rate: f64,
    pub l2: f64,
    pub dim: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            epochs: 10,
            learning_rate: 0.1,
            l2: 1e-6,
            dim: DEFAULT_DIM,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if !self.dim.is_power_of_two() || self.dim > u32::MAX as usize {
            return Err(Error::Config(format!("dim must be a power of two, got {}", self.dim)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::Config("l2 must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub training_set: String,
    pub training_set_digest: String,
    /// Mean cross-entropy over the training set after the last epoch.
    pub final_loss: f64,
}

/// Linear classifier over hashed features.
///
/// Binary models hold one weight row (score = sigmoid), multiclass models one
/// row per class (softmax). Immutable after training.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    /// Binary: `[0, 1]`. Multiclass: starts with `0`, then the CWE ids.
    pub class_labels: Vec<u32>,
    pub dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub metadata: TrainingMetadata,
}

impl Model {
    pub fn zeros(kind: ModelKind, class_labels: Vec<u32>, dim: usize) -> Result<Self> {
        validate_classes(kind, &class_labels)?;
        let rows = match kind {
            ModelKind::Binary => 1,
            ModelKind::Multiclass => class_labels.len(),
        };
        Ok(Model {
            kind,
            class_labels,
            dim,
            weights: vec![vec![0.0; dim]; rows],
            bias: vec![0.0; rows],
            metadata: TrainingMetadata {
                seed: 0,
                epochs: 0,
                learning_rate: 0.0,
                l2: 0.0,
                training_set: String::new(),
                training_set_digest: String::new(),
                final_loss: f64::NAN,
            },
        })
    }

    fn linear_scores(&self, x: &FeatureVector) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| x.dot(w) + b)
            .collect()
    }

    /// Binary: `[P(vulnerable)]`. Multiclass: class distribution in
    /// `class_labels` order.
    pub fn probabilities(&self, x: &FeatureVector) -> Vec<f64> {
        let z = self.linear_scores(x);
        match self.kind {
            ModelKind::Binary => vec![sigmoid(z[0])],
            ModelKind::Multiclass => softmax(&z),
        }
    }

    pub fn predict_code(&self, code: &str) -> Prediction {
        let x = featurize(&tokenize(code), self.dim);
        let p = self.probabilities(&x);
        match self.kind {
            ModelKind::Binary => Prediction::binary(p[0]),
            ModelKind::Multiclass => Prediction::Multiclass { dist: p },
        }
    }

    /// Mean cross-entropy plus `l2 / 2 * ||W||^2` (bias unregularized).
    /// `samples` pair features with class indices into `class_labels`.
    pub fn objective(&self, samples: &[(FeatureVector, usize)], l2: f64) -> f64 {
        let ce = mean_loss(self, samples);
        let reg: f64 = self.weights.iter().flatten().map(|w| w * w).sum();
        ce + 0.5 * l2 * reg
    }

    /// Analytic gradient of [`Self::objective`]: `(d/dW, d/db)`.
    pub fn objective_gradient(
        &self,
        samples: &[(FeatureVector, usize)],
        l2: f64,
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut gw: Vec<Vec<f64>> = self.weights.iter().map(|w| w.iter().map(|v| l2 * v).collect()).collect();
        let mut gb = vec![0.0; self.bias.len()];
        let n = samples.len() as f64;
        for (x, y) in samples {
            let g = self.score_gradient(x, *y);
            for (k, gk) in g.iter().enumerate() {
                for &(i, xi) in &x.entries {
                    gw[k][i as usize] += gk * xi / n;
                }
                gb[k] += gk / n;
            }
        }
        (gw, gb)
    }

    /// d(cross-entropy)/d(linear score) per row.
    fn score_gradient(&self, x: &FeatureVector, y: usize) -> Vec<f64> {
        let mut p = self.probabilities(x);
        match self.kind {
            ModelKind::Binary => p[0] -= y as f64,
            ModelKind::Multiclass => p[y] -= 1.0,
        }
        p
    }

    fn sample_loss(&self, x: &FeatureVector, y: usize) -> f64 {
        let z = self.linear_scores(x);
        match self.kind {
            // softplus(z) - y z
            ModelKind::Binary => softplus(z[0]) - y as f64 * z[0],
            ModelKind::Multiclass => log_sum_exp(&z) - z[y],
        }
    }

    pub fn class_index(&self, label: u32) -> Option<usize> {
        self.class_labels.iter().position(|&c| c == label)
    }

    pub fn descriptor(&self) -> String {
        if self.metadata.training_set.is_empty() {
            format!("{:?}", self.kind).to_lowercase()
        } else {
            format!("{}@{}", format!("{:?}", self.kind).to_lowercase(), self.metadata.training_set)
        }
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            kind: self.kind,
            class_labels: self.class_labels.clone(),
            dim: self.dim,
            bias: self.bias.clone(),
            weights: self
                .weights
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, w)| **w != 0.0)
                        .map(|(i, w)| (i as u32, *w))
                        .collect()
                })
                .collect(),
            metadata: self.metadata.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::json("model", e))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        validate_classes(file.kind, &file.class_labels)?;
        let mut weights = Vec::with_capacity(file.weights.len());
        for row in &file.weights {
            let mut dense = vec![0.0; file.dim];
            for &(i, w) in row {
                let slot = dense
                    .get_mut(i as usize)
                    .ok_or_else(|| Error::Config(format!("weight index {i} out of range")))?;
                *slot = w;
            }
            weights.push(dense);
        }
        Ok(Model {
            kind: file.kind,
            class_labels: file.class_labels,
            dim: file.dim,
            weights,
            bias: file.bias,
            metadata: file.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::write(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        Model::from_json(&text)
    }
}

/// Versioned model container; weights stored sparsely as `(index, value)`.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    kind: ModelKind,
    class_labels: Vec<u32>,
    dim: usize,
    bias: Vec<f64>,
    weights: Vec<Vec<(u32, f64)>>,
    metadata: TrainingMetadata,
}

fn validate_classes(kind: ModelKind, classes: &[u32]) -> Result<()> {
    let mut sorted = classes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != classes.len() {
        return Err(Error::Training(format!("class labels not distinct: {classes:?}")));
    }
    match kind {
        ModelKind::Binary if classes != [0, 1] => {
            Err(Error::Training(format!("binary model needs classes [0, 1], got {classes:?}")))
        }
        ModelKind::Multiclass if classes.first() != Some(&0) || classes.len() < 2 => Err(
            Error::Training(format!("multiclass labels must start with 0, got {classes:?}")),
        ),
        _ => Ok(()),
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn mean_loss(model: &Model, samples: &[(FeatureVector, usize)]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|(x, y)| model.sample_loss(x, *y)).sum::<f64>() / samples.len() as f64
}

/// SGD on pre-computed features. `samples` hold class indices into
/// `class_labels`. The shuffle stream is seeded by `seed` alone.
pub fn train_on_features(
    samples: &[(FeatureVector, usize)],
    kind: ModelKind,
    class_labels: Vec<u32>,
    hp: &Hyperparameters,
    seed: u64,
) -> Result<Model> {
    hp.validate()?;
    if samples.is_empty() {
        return Err(Error::Training("training set is empty".into()));
    }
    let mut model = Model::zeros(kind, class_labels, hp.dim)?;
    let n_classes = model.class_labels.len();
    if let Some((x, y)) = samples.iter().find(|(x, y)| *y >= n_classes || x.dim != hp.dim) {
        return Err(Error::Training(format!(
            "sample with class index {y} / dim {} does not fit the model",
            x.dim
        )));
    }

    // W = scale * v, so the L2 shrink is O(1) per step.
    let mut scale = 1.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 0..hp.epochs {
        let lr = hp.learning_rate / (1.0 + epoch as f64);
        order.shuffle(&mut rng);
        for &s in &order {
            let (x, y) = &samples[s];
            let z: Vec<f64> = model
                .weights
                .iter()
                .zip(&model.bias)
                .map(|(v, b)| scale * x.dot(v) + b)
                .collect();
            let mut g = match kind {
                ModelKind::Binary => vec![sigmoid(z[0])],
                ModelKind::Multiclass => softmax(&z),
            };
            match kind {
                ModelKind::Binary => g[0] -= *y as f64,
                ModelKind::Multiclass => g[*y] -= 1.0,
            }
            scale *= 1.0 - lr * hp.l2;
            for (k, gk) in g.iter().enumerate() {
                if *gk == 0.0 {
                    continue;
                }
                let row = &mut model.weights[k];
                for &(i, xi) in &x.entries {
                    row[i as usize] -= lr * gk * xi / scale;
                }
                model.bias[k] -= lr * gk;
            }
            if scale < 1e-9 {
                fold_scale(&mut model.weights, &mut scale);
            }
        }
    }
    fold_scale(&mut model.weights, &mut scale);

    model.metadata = TrainingMetadata {
        seed,
        epochs: hp.epochs,
        learning_rate: hp.learning_rate,
        l2: hp.l2,
        training_set: String::new(),
        training_set_digest: String::new(),
        final_loss: mean_loss(&model, samples),
    };
    Ok(model)
}

fn fold_scale(weights: &mut [Vec<f64>], scale: &mut f64) {
    if *scale != 1.0 {
        for w in weights.iter_mut().flatten() {
            *w *= *scale;
        }
        *scale = 1.0;
    }
}

/// Trains a binary or multiclass model depending on the set's kind.
pub fn train(set: &LabeledSet, corpus: &Corpus, hp: &Hyperparameters, seed: u64) -> Result<Model> {
    hp.validate()?;
    if set.is_empty() {
        return Err(Error::Training(format!("{} is empty", set.name)));
    }
    let (kind, classes) = match &set.kind {
        SetKind::Binary => (ModelKind::Binary, vec![0, 1]),
        SetKind::Multiclass { classes } => (ModelKind::Multiclass, classes.clone()),
    };
    let index = corpus.index();
    let records = index.resolve(set.ids(), &set.name)?;
    let position: BTreeMap<u32, usize> = classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut samples = Vec::with_capacity(set.len());
    for (record, (id, label)) in records.iter().zip(&set.entries) {
        let y = *position.get(label).ok_or_else(|| {
            Error::Training(format!("{id}: label {label} not among classes {classes:?}"))
        })?;
        samples.push((featurize(&tokenize(&record.code), hp.dim), y));
    }
    let mut model = train_on_features(&samples, kind, classes, hp, seed)?;
    model.metadata.training_set = set.name.clone();
    model.metadata.training_set_digest = set.to_manifest(seed, "").digest();
    log::info!(
        "trained {} on {} samples, final loss {:.6}",
        model.descriptor(),
        samples.len(),
        model.metadata.final_loss
    );
    Ok(model)
}

/// Scores every id; fails listing all ids missing from the corpus.
pub fn predict<'i, I>(model: &Model, ids: I, corpus: &Corpus) -> Result<PredictionSet>
where
    I: IntoIterator<Item = &'i str>,
{
    let index = corpus.index();
    let records = index.resolve(ids, "predict")?;
    let kind = match model.kind {
        ModelKind::Binary => PredictionKind::Binary,
        ModelKind::Multiclass => PredictionKind::Multiclass,
    };
    let entries = records
        .into_iter()
        .map(|r| (r.id.clone(), model.predict_code(&r.code)))
        .collect();
    Ok(PredictionSet {
        kind,
        class_labels: model.class_labels.clone(),
        entries,
        model: model.descriptor(),
    })
}
