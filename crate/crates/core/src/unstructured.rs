//! Flat linear classifiers: bag-of-words logistic regression, logistic
//! regression over aggregated F1-F15, and an averaged perceptron over the
//! same aggregated features.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::averaged::AveragedWeights;
use crate::corpus::DesireInstance;
use crate::features::FeatureVector;
use crate::sparse::SparseVector;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("empty training set")]
    Empty,
    #[error("instance {0:?} has no gold label")]
    Unlabeled(String),
    #[error("degenerate training set: only one class present")]
    Degenerate,
    #[error("invalid hyperparameter: {0}")]
    Hyper(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnstructuredKind {
    BowLr,
    FeatLr,
    FeatPerceptron,
}

impl UnstructuredKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bow-lr" => Some(Self::BowLr),
            "feat-lr" => Some(Self::FeatLr),
            "feat-perceptron" => Some(Self::FeatPerceptron),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::BowLr => "bow-lr",
            Self::FeatLr => "feat-lr",
            Self::FeatPerceptron => "feat-perceptron",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LinearHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 50,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub version: u32,
    pub kind: UnstructuredKind,
    pub weights: BTreeMap<String, f64>,
    pub bias: f64,
    pub hyper: LinearHyper,
    pub seed: u64,
}

pub type LinearFeatures = SparseVector<String>;

/// Feature vector seen by a flat model of the given kind.
pub fn featurize(
    kind: UnstructuredKind,
    instance: &DesireInstance,
    aggregated: &FeatureVector,
) -> LinearFeatures {
    match kind {
        UnstructuredKind::BowLr => bag_of_words(instance),
        UnstructuredKind::FeatLr | UnstructuredKind::FeatPerceptron => aggregated
            .iter()
            .map(|(id, v)| (id.to_string(), v))
            .collect(),
    }
}

/// Lemma counts over the desire expression and all evidences.
pub fn bag_of_words(instance: &DesireInstance) -> LinearFeatures {
    std::iter::once(&instance.desire_expression)
        .chain(&instance.evidences)
        .flat_map(|s| &s.tokens)
        .filter(|t| !t.is_punctuation())
        .map(|t| (format!("bow:{}", t.lemma.to_lowercase()), 1.0))
        .collect()
}

fn check_training_set(examples: &[(LinearFeatures, bool)]) -> Result<(), TrainError> {
    if examples.is_empty() {
        return Err(TrainError::Empty);
    }
    let positives = examples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == examples.len() {
        return Err(TrainError::Degenerate);
    }
    Ok(())
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Dense index for every feature key seen in training, in key order.
fn vocabulary(examples: &[(LinearFeatures, bool)]) -> BTreeMap<String, usize> {
    let mut keys: Vec<&String> = examples.iter().flat_map(|(x, _)| x.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .enumerate()
        .map(|(i, k)| (k.clone(), i))
        .collect()
}

fn dense(x: &LinearFeatures, vocab: &BTreeMap<String, usize>) -> Vec<(usize, f64)> {
    x.iter()
        .filter_map(|(k, v)| vocab.get(k).map(|&i| (i, v)))
        .collect()
}

pub fn train_unstructured(
    examples: &[(LinearFeatures, bool)],
    kind: UnstructuredKind,
    hyper: LinearHyper,
    seed: u64,
) -> Result<LinearModel, TrainError> {
    check_training_set(examples)?;
    if !(hyper.learning_rate > 0.0 && hyper.learning_rate.is_finite()) {
        return Err(TrainError::Hyper("learning rate must be positive".into()));
    }
    if hyper.l2.is_nan() || hyper.l2 < 0.0 {
        return Err(TrainError::Hyper("L2 must be nonnegative".into()));
    }
    let vocab = vocabulary(examples);
    let rows: Vec<(Vec<(usize, f64)>, bool)> = examples
        .iter()
        .map(|(x, y)| (dense(x, &vocab), *y))
        .collect();
    let (weights, bias) = match kind {
        UnstructuredKind::BowLr | UnstructuredKind::FeatLr => {
            logistic_regression(&rows, vocab.len(), hyper, seed)
        }
        UnstructuredKind::FeatPerceptron => {
            corpus_order_perceptron(&rows, vocab.len(), hyper.epochs)
        }
    };
    let weights = vocab
        .into_iter()
        .map(|(k, i)| (k, weights[i]))
        .filter(|(_, w)| *w != 0.0)
        .collect();
    Ok(LinearModel {
        version: MODEL_VERSION,
        kind,
        weights,
        bias,
        hyper,
        seed,
    })
}

/// Stochastic gradient descent on the logistic loss with seeded per-epoch
/// shuffling. L2 shrinkage is applied as an implicit step so any penalty
/// strength stays stable; the bias is not penalized.
fn logistic_regression(
    rows: &[(Vec<(usize, f64)>, bool)],
    dim: usize,
    hyper: LinearHyper,
    seed: u64,
) -> (Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let shrink = 1.0 / (1.0 + hyper.learning_rate * hyper.l2);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &r in &order {
            let (x, y) = &rows[r];
            let z = x.iter().fold(b, |acc, &(i, v)| acc + w[i] * v);
            let g = sigmoid(z) - if *y { 1.0 } else { 0.0 };
            for &(i, v) in x {
                w[i] -= hyper.learning_rate * g * v;
            }
            b -= hyper.learning_rate * g;
            if shrink != 1.0 {
                w.iter_mut().for_each(|wi| *wi *= shrink);
            }
        }
    }
    (w, b)
}

/// Mistake-driven binary perceptron returning the average of the post-step
/// weights. `init` holds one weight per feature followed by the bias;
/// `schedule` lists the row order of each epoch.
pub fn averaged_perceptron(
    rows: &[(Vec<(usize, f64)>, bool)],
    init: Vec<f64>,
    schedule: &[Vec<usize>],
) -> Vec<f64> {
    let dim = init.len() - 1;
    let mut w = AveragedWeights::new(init);
    for order in schedule {
        for (x, y) in order.iter().map(|&r| &rows[r]) {
            w.begin_step();
            let cur = w.weights();
            let score = x.iter().fold(cur[dim], |acc, &(i, v)| acc + cur[i] * v);
            if (score >= 0.0) != *y {
                let sign = if *y { 1.0 } else { -1.0 };
                for &(i, v) in x {
                    w.add(i, sign * v);
                }
                w.add(dim, sign);
            }
        }
    }
    w.average()
}

fn corpus_order_perceptron(
    rows: &[(Vec<(usize, f64)>, bool)],
    dim: usize,
    epochs: usize,
) -> (Vec<f64>, f64) {
    let schedule = vec![(0..rows.len()).collect::<Vec<_>>(); epochs];
    let mut avg = averaged_perceptron(rows, vec![0.0; dim + 1], &schedule);
    let bias = avg.pop().unwrap_or(0.0);
    (avg, bias)
}

impl LinearModel {
    pub fn score(&self, x: &LinearFeatures) -> f64 {
        x.iter().fold(self.bias, |acc, (k, v)| {
            acc + self.weights.get(k).copied().unwrap_or(0.0) * v
        })
    }

    /// `(label, score)` with label = score >= 0.
    pub fn predict(&self, x: &LinearFeatures) -> (bool, f64) {
        let s = self.score(x);
        (s >= 0.0, s)
    }
}

pub fn predict_unstructured(
    model: &LinearModel,
    instance: &DesireInstance,
    aggregated: &FeatureVector,
) -> (bool, f64) {
    model.predict(&featurize(model.kind, instance, aggregated))
}
