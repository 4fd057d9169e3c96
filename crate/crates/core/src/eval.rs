//! Evaluation: positive-class precision/recall/F1, stratified k-fold
//! cross-validation, multi-restart medians and selection of H.
//!
//! Percentages are kept at full precision; [`EvalReport::rounded`] is applied
//! only when a report is written out.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DesireInstance, Lexicons};
use crate::entailment::EntailmentError;
use crate::features::{prepare_all, InstanceFeatures, Prepared};
use crate::lsnm::{train_lsnm, LsnmError, LsnmHyper, LsnmModel};
use crate::unstructured::{
    featurize, train_unstructured, LinearHyper, LinearModel, TrainError, UnstructuredKind,
};

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("gold and predicted label lists differ in length ({gold} vs {pred})")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("nothing to score")]
    Empty,
    #[error("instance {0:?} has no gold label")]
    Unlabeled(String),
    #[error("need k >= 2 folds and at least k instances (k = {k}, n = {n})")]
    Folds { k: usize, n: usize },
    #[error("fold {fold}: training part contains only one class")]
    SingleClassFold { fold: usize },
    #[error("restart count must be at least 1")]
    Restarts,
    #[error("no candidate values of H")]
    NoCandidates,
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Lsnm(#[from] LsnmError),
    #[error(transparent)]
    Entailment(#[from] EntailmentError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_restart: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_fold: Option<Vec<f64>>,
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Harmonic mean of two percentages, 0 when both are 0.
pub fn f1_from_pr(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> EvalReport {
        let precision = percent(tp, tp + fp);
        let recall = percent(tp, tp + fn_);
        EvalReport {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1: f1_from_pr(precision, recall),
            per_restart: None,
            per_fold: None,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Copy with every percentage rounded to one decimal, for emission.
    pub fn rounded(&self) -> EvalReport {
        let round_all = |v: &Vec<f64>| v.iter().map(|x| round1(*x)).collect();
        EvalReport {
            precision: round1(self.precision),
            recall: round1(self.recall),
            f1: round1(self.f1),
            per_restart: self.per_restart.as_ref().map(round_all),
            per_fold: self.per_fold.as_ref().map(round_all),
            ..self.clone()
        }
    }
}

pub fn score(gold: &[bool], pred: &[bool]) -> Result<EvalReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&g, &p) in gold.iter().zip(pred) {
        match (g, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(EvalReport::from_counts(tp, fp, fn_, tn))
}

/// Index of the lower-middle element of `values` in sorted order; stable
/// with respect to the original positions on ties.
pub fn median_index(values: &[f64]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    Some(order[(values.len() - 1) / 2])
}

pub fn median(values: &[f64]) -> Option<f64> {
    median_index(values).map(|i| values[i])
}

/// A corpus together with everything the models read from it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub instances: Vec<DesireInstance>,
    pub prepared: Vec<Prepared>,
}

impl Dataset {
    pub fn new(
        instances: Vec<DesireInstance>,
        lex: &Lexicons,
        te_threshold: f64,
    ) -> Result<Dataset, EntailmentError> {
        let prepared = prepare_all(&instances, lex, te_threshold)?;
        Ok(Dataset {
            instances,
            prepared,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn label(&self, i: usize) -> Result<bool, EvalError> {
        self.instances[i]
            .label
            .ok_or_else(|| EvalError::Unlabeled(self.instances[i].id.clone()))
    }

    pub fn labels(&self) -> Result<Vec<bool>, EvalError> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    pub fn all(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }
}

/// What to train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    Te,
    Linear {
        model: UnstructuredKind,
        hyper: LinearHyper,
    },
    Lsnm {
        states: usize,
        hyper: LsnmHyper,
        restarts: usize,
    },
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Te => "te".into(),
            ModelSpec::Linear { model, .. } => model.name().into(),
            ModelSpec::Lsnm { states, .. } => format!("lsnm(H={states})"),
        }
    }

    fn restarts(&self) -> usize {
        match self {
            ModelSpec::Lsnm { restarts, .. } => *restarts,
            _ => 1,
        }
    }
}

/// A trained predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Te,
    Linear(LinearModel),
    Lsnm(LsnmModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub gold: Option<bool>,
    pub pred: bool,
    pub score: f64,
    pub states: Option<Vec<usize>>,
}

impl TrainedModel {
    pub fn predict(&self, data: &Dataset, i: usize) -> Result<Prediction, EvalError> {
        let inst = &data.instances[i];
        let prep = &data.prepared[i];
        let (pred, score, states) = match self {
            TrainedModel::Te => (prep.entailment.entailed, prep.entailment.coverage, None),
            TrainedModel::Linear(m) => {
                let (p, s) = m.predict(&featurize(m.kind, inst, &prep.aggregated));
                (p, s, None)
            }
            TrainedModel::Lsnm(m) => {
                let d = m.predict(&prep.features)?;
                (d.f_hat, d.score, Some(d.states))
            }
        };
        Ok(Prediction {
            id: inst.id.clone(),
            gold: inst.label,
            pred,
            score,
            states,
        })
    }

    pub fn predict_all(&self, data: &Dataset, idx: &[usize]) -> Result<Vec<Prediction>, EvalError> {
        idx.iter().map(|&i| self.predict(data, i)).collect()
    }

    pub fn evaluate(&self, data: &Dataset, idx: &[usize]) -> Result<EvalReport, EvalError> {
        let preds = self.predict_all(data, idx)?;
        let gold = idx
            .iter()
            .map(|&i| data.label(i))
            .collect::<Result<Vec<_>, _>>()?;
        let pred: Vec<bool> = preds.iter().map(|p| p.pred).collect();
        score(&gold, &pred)
    }
}

/// Trains a single model (one restart for LSNM) on the given instances.
pub fn train_once(
    spec: &ModelSpec,
    data: &Dataset,
    idx: &[usize],
    seed: u64,
) -> Result<TrainedModel, EvalError> {
    match *spec {
        ModelSpec::Te => Ok(TrainedModel::Te),
        ModelSpec::Linear { model, hyper } => {
            let rows = idx
                .iter()
                .map(|&i| {
                    let x = featurize(model, &data.instances[i], &data.prepared[i].aggregated);
                    Ok((x, data.label(i)?))
                })
                .collect::<Result<Vec<_>, EvalError>>()?;
            Ok(TrainedModel::Linear(train_unstructured(
                &rows, model, hyper, seed,
            )?))
        }
        ModelSpec::Lsnm { states, hyper, .. } => {
            let rows: Vec<(InstanceFeatures, bool)> = idx
                .iter()
                .map(|&i| Ok((data.prepared[i].features.clone(), data.label(i)?)))
                .collect::<Result<_, EvalError>>()?;
            Ok(TrainedModel::Lsnm(train_lsnm(&rows, states, hyper, seed)?))
        }
    }
}

/// Trains one model per seed `base_seed..base_seed + restarts` in parallel
/// and scores each on `test`. The returned report is the median restart's,
/// with the full F1 distribution (in seed order) in `per_restart`; the
/// index of the median restart is returned alongside.
pub fn run_restarts(
    spec: &ModelSpec,
    data: &Dataset,
    train: &[usize],
    test: &[usize],
    restarts: usize,
    base_seed: u64,
) -> Result<(EvalReport, usize), EvalError> {
    if restarts == 0 {
        return Err(EvalError::Restarts);
    }
    let reports: Vec<EvalReport> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| train_once(spec, data, train, base_seed + r)?.evaluate(data, test))
        .collect::<Result<_, _>>()?;
    Ok(pick_median(reports))
}

fn pick_median(reports: Vec<EvalReport>) -> (EvalReport, usize) {
    let f1s: Vec<f64> = reports.iter().map(|r| r.f1).collect();
    let m = median_index(&f1s).expect("at least one restart");
    let mut report = reports[m].clone();
    report.per_restart = Some(f1s);
    (report, m)
}

/// Stratified fold assignment: positives and negatives are shuffled
/// separately with `seed`, then dealt round-robin, positives first.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    if k < 2 || labels.len() < k {
        return Err(EvalError::Folds { k, n: labels.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold = vec![0; labels.len()];
    for (slot, i) in pos.into_iter().chain(neg).enumerate() {
        fold[i] = slot % k;
    }
    Ok(fold)
}

/// Seeded stratified split into `(train, held_out)`, holding out
/// `round(fraction * class size)` instances of each class (at least one of
/// each class when that class has two or more members).
pub fn stratified_split(labels: &[bool], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut held = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let mut take = (fraction * idx.len() as f64).round() as usize;
        if idx.len() >= 2 {
            take = take.clamp(1, idx.len() - 1);
        } else {
            take = 0;
        }
        held.extend_from_slice(&idx[..take]);
        train.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    held.sort_unstable();
    (train, held)
}

/// k-fold cross-validation with counts pooled over folds. Folds run in
/// parallel. For LSNM with several restarts, the whole cross-validation is
/// repeated per restart seed and the median run is reported.
pub fn cross_validate(
    data: &Dataset,
    spec: &ModelSpec,
    k: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let labels = data.labels()?;
    let fold_of = stratified_folds(&labels, k, seed)?;
    let folds: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| fold_of[i] == f);
            (train, test)
        })
        .collect();
    for (f, (train, _)) in folds.iter().enumerate() {
        let pos = train.iter().filter(|&&i| labels[i]).count();
        if *spec != ModelSpec::Te && (pos == 0 || pos == train.len()) {
            return Err(EvalError::SingleClassFold { fold: f });
        }
    }
    let restarts = spec.restarts();
    if restarts == 0 {
        return Err(EvalError::Restarts);
    }
    let runs: Vec<EvalReport> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| cv_run(data, spec, &folds, &labels, seed + r))
        .collect::<Result<_, _>>()?;
    let (mut report, _) = pick_median(runs);
    if restarts == 1 {
        report.per_restart = None;
    }
    Ok(report)
}

fn cv_run(
    data: &Dataset,
    spec: &ModelSpec,
    folds: &[(Vec<usize>, Vec<usize>)],
    labels: &[bool],
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let per_fold: Vec<EvalReport> = folds
        .par_iter()
        .map(|(train, test)| train_once(spec, data, train, seed)?.evaluate(data, test))
        .collect::<Result<_, _>>()?;
    let mut pooled = EvalReport::from_counts(
        per_fold.iter().map(|r| r.tp).sum(),
        per_fold.iter().map(|r| r.fp).sum(),
        per_fold.iter().map(|r| r.fn_).sum(),
        per_fold.iter().map(|r| r.tn).sum(),
    );
    debug_assert_eq!(pooled.total(), labels.len());
    pooled.per_fold = Some(per_fold.iter().map(|r| r.f1).collect());
    Ok(pooled)
}

/// Picks the H with the best median cross-validated F1; ties go to the
/// smallest H. Returns the choice and the score of every candidate.
pub fn select_h(
    data: &Dataset,
    candidates: &[usize],
    hyper: LsnmHyper,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<(usize, Vec<(usize, f64)>), EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::NoCandidates);
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for &h in candidates {
        let spec = ModelSpec::Lsnm {
            states: h,
            hyper,
            restarts,
        };
        scored.push((h, cross_validate(data, &spec, k, seed)?.f1));
    }
    let best = scored
        .iter()
        .copied()
        .reduce(|a, b| {
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        })
        .expect("nonempty")
        .0;
    Ok((best, scored))
}

/// Plain-text comparison table, one row per model.
pub fn render_table(rows: &[(String, EvalReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>6}  {:>5}  {:>5}  {:>5}  {:>5}  {:>5}",
        "model", "precision", "recall", "f1", "tp", "fp", "fn", "tn"
    );
    for (name, r) in rows {
        let r = r.rounded();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.1}  {:>6.1}  {:>5.1}  {:>5}  {:>5}  {:>5}  {:>5}",
            name, r.precision, r.recall, r.f1, r.tp, r.fp, r.fn_, r.tn
        );
        if let Some(runs) = &r.per_restart {
            let _ = writeln!(
                out,
                "{:<width$}  restarts={} min={:.1} max={:.1}",
                "",
                runs.len(),
                runs.iter().copied().fold(f64::INFINITY, f64::min),
                runs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            );
        }
    }
    out
}
