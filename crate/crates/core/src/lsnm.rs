//! Latent chain model over evidence fragments.
//!
//! Each evidence `e_j` gets a hidden state `h_j` in `0..H`. The joint score of
//! a fulfillment label `f` and a state sequence is linear in the weights:
//!
//! * start: indicator of `h_1`
//! * content: F4-F15 of `e_j`, conjoined with `h_j`
//! * transition: indicator of `(h_{j-1}, h_j)`
//! * sustenance transition: F16/F17 of `e_j`, conjoined with `(h_{j-1}, h_j)`
//! * output: indicator of `(f, h_n)` plus the aggregated F1-F15 conjoined with `f`
//!
//! Decoding maximizes the score exactly with Viterbi, either with `f` fixed
//! (constrained) or jointly over `f` and the states.
//!
//! # Accumulation order
//!
//! Scores are accumulated in 64-bit floats in a fixed order so that the
//! Viterbi score of a path equals, bit for bit, the score recomputed for it:
//!
//! ```text
//! content(h, j)      = 0 + w[content(h,F4)]*F4(e_j) + ... + w[content(h,F15)]*F15(e_j)
//! sustain(h', h, j)  = 0 + w[sus(h',h,F16)]*F16(e_j) + w[sus(h',h,F17)]*F17(e_j)
//! global(f)          = 0 + w[out(f,F1)]*F1 + ... + w[out(f,F15)]*F15
//! first(h)           = w[start(h)] + content(h, 1)
//! edge(j, h', h)     = (w[trans(h',h)] + sustain(h',h,j)) + content(h, j)
//! final(f, h)        = w[out(f,h)] + global(f)
//! score(f, h_1..h_n) = ((first(h_1) + edge(2,..)) + ... + edge(n,..)) + final(f, h_n)
//! ```
//!
//! Ties are broken toward the lowest predecessor state, then `f = false`,
//! then the lowest final state.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::averaged::AveragedWeights;
use crate::features::{aggregate, FeatureId, InstanceFeatures};
use crate::sparse::SparseVector;
use crate::unstructured::TrainError;

pub const LAYOUT_VERSION: u32 = 1;
pub const INIT_RANGE: f64 = 0.01;

const N_CONTENT: usize = 12;
const N_SUSTAIN: usize = 2;
const N_GLOBAL: usize = 15;

#[derive(Debug, Error, PartialEq)]
pub enum LsnmError {
    #[error("empty chain: instance has no evidences")]
    EmptyChain,
    #[error("state sequence length {got} does not match {expected} evidences")]
    LengthMismatch { expected: usize, got: usize },
    #[error("state {0} out of range")]
    StateOutOfRange(usize),
    #[error("number of latent states must be at least 1")]
    InvalidStates,
    #[error("unknown weight key {0:?}")]
    UnknownKey(String),
    #[error("unsupported layout version {0}")]
    LayoutVersion(u32),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// A coordinate of the joint feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LsnmKey {
    Start(usize),
    Content(usize, FeatureId),
    Transition(usize, usize),
    Sustain(usize, usize, FeatureId),
    OutputState(bool, usize),
    OutputGlobal(bool, FeatureId),
}

impl fmt::Display for LsnmKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LsnmKey::Start(h) => write!(f, "start:{h}"),
            LsnmKey::Content(h, k) => write!(f, "content:{h}:{k}"),
            LsnmKey::Transition(a, b) => write!(f, "trans:{a}:{b}"),
            LsnmKey::Sustain(a, b, k) => write!(f, "sustain:{a}:{b}:{k}"),
            LsnmKey::OutputState(y, h) => write!(f, "out:{y}:{h}"),
            LsnmKey::OutputGlobal(y, k) => write!(f, "out-global:{y}:{k}"),
        }
    }
}

impl LsnmKey {
    pub fn parse(s: &str) -> Option<LsnmKey> {
        let parts: Vec<&str> = s.split(':').collect();
        let n = |i: usize| parts.get(i)?.parse::<usize>().ok();
        let b = |i: usize| parts.get(i)?.parse::<bool>().ok();
        let fid = |i: usize| FeatureId::parse(parts.get(i)?);
        let key = match (parts.first().copied()?, parts.len()) {
            ("start", 2) => LsnmKey::Start(n(1)?),
            ("content", 3) => LsnmKey::Content(n(1)?, fid(2)?),
            ("trans", 3) => LsnmKey::Transition(n(1)?, n(2)?),
            ("sustain", 4) => LsnmKey::Sustain(n(1)?, n(2)?, fid(3)?),
            ("out", 3) => LsnmKey::OutputState(b(1)?, n(2)?),
            ("out-global", 3) => LsnmKey::OutputGlobal(b(1)?, fid(2)?),
            _ => return None,
        };
        Some(key)
    }
}

/// Dense indexing of the joint feature space for `H` states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub states: usize,
}

impl Layout {
    pub fn new(states: usize) -> Result<Layout, LsnmError> {
        if states == 0 {
            return Err(LsnmError::InvalidStates);
        }
        Ok(Layout { states })
    }

    fn content_base(&self) -> usize {
        self.states
    }
    fn transition_base(&self) -> usize {
        self.content_base() + self.states * N_CONTENT
    }
    fn sustain_base(&self) -> usize {
        self.transition_base() + self.states * self.states
    }
    fn output_base(&self) -> usize {
        self.sustain_base() + self.states * self.states * N_SUSTAIN
    }
    fn global_base(&self) -> usize {
        self.output_base() + 2 * self.states
    }

    pub fn dim(&self) -> usize {
        self.global_base() + 2 * N_GLOBAL
    }

    fn start(&self, h: usize) -> usize {
        h
    }
    fn content(&self, h: usize, k: usize) -> usize {
        self.content_base() + h * N_CONTENT + k
    }
    fn transition(&self, a: usize, b: usize) -> usize {
        self.transition_base() + a * self.states + b
    }
    fn sustain(&self, a: usize, b: usize, k: usize) -> usize {
        self.sustain_base() + (a * self.states + b) * N_SUSTAIN + k
    }
    fn output(&self, f: bool, h: usize) -> usize {
        self.output_base() + usize::from(f) * self.states + h
    }
    fn global(&self, f: bool, k: usize) -> usize {
        self.global_base() + usize::from(f) * N_GLOBAL + k
    }

    /// Dense index of a key, or `None` if it lies outside this layout.
    pub fn index(&self, key: &LsnmKey) -> Option<usize> {
        let h = self.states;
        let content_pos = |k: &FeatureId| (4..=15).contains(&k.number()).then(|| k.number() - 4);
        let sustain_pos = |k: &FeatureId| (16..=17).contains(&k.number()).then(|| k.number() - 16);
        let global_pos = |k: &FeatureId| (k.number() <= 15).then(|| k.number() - 1);
        match *key {
            LsnmKey::Start(s) if s < h => Some(self.start(s)),
            LsnmKey::Content(s, k) if s < h => content_pos(&k).map(|p| self.content(s, p)),
            LsnmKey::Transition(a, b) if a < h && b < h => Some(self.transition(a, b)),
            LsnmKey::Sustain(a, b, k) if a < h && b < h => {
                sustain_pos(&k).map(|p| self.sustain(a, b, p))
            }
            LsnmKey::OutputState(f, s) if s < h => Some(self.output(f, s)),
            LsnmKey::OutputGlobal(f, k) => global_pos(&k).map(|p| self.global(f, p)),
            _ => None,
        }
    }

    /// All keys in dense index order.
    pub fn keys(&self) -> Vec<LsnmKey> {
        let h = self.states;
        let mut keys = Vec::with_capacity(self.dim());
        keys.extend((0..h).map(LsnmKey::Start));
        for s in 0..h {
            keys.extend(FeatureId::content().iter().map(|&k| LsnmKey::Content(s, k)));
        }
        for a in 0..h {
            keys.extend((0..h).map(|b| LsnmKey::Transition(a, b)));
        }
        for a in 0..h {
            for b in 0..h {
                keys.extend(
                    FeatureId::SUSTENANCE
                        .iter()
                        .map(|&k| LsnmKey::Sustain(a, b, k)),
                );
            }
        }
        for f in [false, true] {
            keys.extend((0..h).map(|s| LsnmKey::OutputState(f, s)));
        }
        for f in [false, true] {
            keys.extend(
                FeatureId::aggregated()
                    .iter()
                    .map(|&k| LsnmKey::OutputGlobal(f, k)),
            );
        }
        keys
    }
}

/// Dense per-instance view of the features the chain model reads.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFeatures {
    pub content: Vec<[f64; N_CONTENT]>,
    pub sustain: Vec<[f64; N_SUSTAIN]>,
    pub global: [f64; N_GLOBAL],
}

impl ChainFeatures {
    pub fn new(feats: &InstanceFeatures) -> Result<ChainFeatures, LsnmError> {
        if feats.is_empty() {
            return Err(LsnmError::EmptyChain);
        }
        let content = feats
            .per_evidence
            .iter()
            .map(|ev| std::array::from_fn(|k| ev.get(&FeatureId::content()[k])))
            .collect();
        let sustain = feats
            .per_evidence
            .iter()
            .map(|ev| std::array::from_fn(|k| ev.get(&FeatureId::SUSTENANCE[k])))
            .collect();
        let agg = aggregate(feats);
        let global = std::array::from_fn(|k| agg.get(&FeatureId::aggregated()[k]));
        Ok(ChainFeatures {
            content,
            sustain,
            global,
        })
    }

    pub fn len(&self) -> usize {
        self.content.len()
    }

    pub fn is_empty(&self) -> bool {
        self.content.is_empty()
    }
}

/// Read-only scoring view over a dense weight vector.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a> {
    pub layout: Layout,
    pub weights: &'a [f64],
}

impl<'a> Scorer<'a> {
    pub fn content(&self, x: &ChainFeatures, h: usize, j: usize) -> f64 {
        x.content[j].iter().enumerate().fold(0.0, |acc, (k, v)| {
            acc + self.weights[self.layout.content(h, k)] * v
        })
    }

    pub fn sustain(&self, x: &ChainFeatures, prev: usize, h: usize, j: usize) -> f64 {
        x.sustain[j].iter().enumerate().fold(0.0, |acc, (k, v)| {
            acc + self.weights[self.layout.sustain(prev, h, k)] * v
        })
    }

    pub fn global(&self, x: &ChainFeatures, f: bool) -> f64 {
        x.global.iter().enumerate().fold(0.0, |acc, (k, v)| {
            acc + self.weights[self.layout.global(f, k)] * v
        })
    }

    pub fn first(&self, x: &ChainFeatures, h: usize) -> f64 {
        self.weights[self.layout.start(h)] + self.content(x, h, 0)
    }

    pub fn edge(&self, x: &ChainFeatures, j: usize, prev: usize, h: usize) -> f64 {
        (self.weights[self.layout.transition(prev, h)] + self.sustain(x, prev, h, j))
            + self.content(x, h, j)
    }

    pub fn last(&self, x: &ChainFeatures, f: bool, h: usize) -> f64 {
        self.weights[self.layout.output(f, h)] + self.global(x, f)
    }

    /// Score of one complete structure, in the documented order.
    pub fn structure(
        &self,
        x: &ChainFeatures,
        f: bool,
        states: &[usize],
    ) -> Result<f64, LsnmError> {
        check_states(self.layout, x, states)?;
        let mut total = self.first(x, states[0]);
        for j in 1..states.len() {
            total += self.edge(x, j, states[j - 1], states[j]);
        }
        Ok(total + self.last(x, f, states[states.len() - 1]))
    }

    pub fn viterbi(&self, x: &ChainFeatures, f: Option<bool>) -> Result<Decode, LsnmError> {
        let h = self.layout.states;
        let n = x.len();
        if n == 0 {
            return Err(LsnmError::EmptyChain);
        }
        let mut delta: Vec<f64> = (0..h).map(|s| self.first(x, s)).collect();
        let mut back: Vec<Vec<usize>> = Vec::with_capacity(n.saturating_sub(1));
        for j in 1..n {
            let mut next = vec![f64::NEG_INFINITY; h];
            let mut ptr = vec![0; h];
            for s in 0..h {
                for (p, &dp) in delta.iter().enumerate() {
                    let cand = dp + self.edge(x, j, p, s);
                    if cand > next[s] {
                        next[s] = cand;
                        ptr[s] = p;
                    }
                }
            }
            delta = next;
            back.push(ptr);
        }
        let labels: &[bool] = match f {
            Some(false) => &[false],
            Some(true) => &[true],
            None => &[false, true],
        };
        let mut best: Option<(f64, bool, usize)> = None;
        for &label in labels {
            for (s, &ds) in delta.iter().enumerate() {
                let total = ds + self.last(x, label, s);
                if best.is_none_or(|(b, _, _)| total > b) {
                    best = Some((total, label, s));
                }
            }
        }
        let (score, f_hat, last) = best.expect("at least one state");
        let mut states = vec![last; n];
        for j in (1..n).rev() {
            states[j - 1] = back[j - 1][states[j]];
        }
        Ok(Decode {
            f_hat,
            states,
            score,
        })
    }
}

fn check_states(layout: Layout, x: &ChainFeatures, states: &[usize]) -> Result<(), LsnmError> {
    if x.is_empty() {
        return Err(LsnmError::EmptyChain);
    }
    if states.len() != x.len() {
        return Err(LsnmError::LengthMismatch {
            expected: x.len(),
            got: states.len(),
        });
    }
    if let Some(&bad) = states.iter().find(|&&s| s >= layout.states) {
        return Err(LsnmError::StateOutOfRange(bad));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decode {
    pub f_hat: bool,
    pub states: Vec<usize>,
    pub score: f64,
}

/// Sparse joint feature vector of `(f, states)` for an instance.
pub fn joint_features(
    feats: &InstanceFeatures,
    states: &[usize],
    f: bool,
) -> Result<SparseVector<LsnmKey>, LsnmError> {
    if feats.is_empty() {
        return Err(LsnmError::EmptyChain);
    }
    if states.len() != feats.len() {
        return Err(LsnmError::LengthMismatch {
            expected: feats.len(),
            got: states.len(),
        });
    }
    let mut phi = SparseVector::new();
    phi.add(LsnmKey::Start(states[0]), 1.0);
    for (j, ev) in feats.per_evidence.iter().enumerate() {
        let h = states[j];
        for &k in FeatureId::content() {
            phi.add(LsnmKey::Content(h, k), ev.get(&k));
        }
        if j > 0 {
            let prev = states[j - 1];
            phi.add(LsnmKey::Transition(prev, h), 1.0);
            for k in FeatureId::SUSTENANCE {
                phi.add(LsnmKey::Sustain(prev, h, k), ev.get(&k));
            }
        }
    }
    phi.add(LsnmKey::OutputState(f, states[states.len() - 1]), 1.0);
    let agg = aggregate(feats);
    for &k in FeatureId::aggregated() {
        phi.add(LsnmKey::OutputGlobal(f, k), agg.get(&k));
    }
    Ok(phi)
}

/// Dense counterpart of [`joint_features`] used by the trainer.
fn joint_dense(layout: Layout, x: &ChainFeatures, states: &[usize], f: bool) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(x.len() * (N_CONTENT + 3) + N_GLOBAL + 2);
    out.push((layout.start(states[0]), 1.0));
    for (j, &h) in states.iter().enumerate() {
        for (k, &v) in x.content[j].iter().enumerate() {
            if v != 0.0 {
                out.push((layout.content(h, k), v));
            }
        }
        if j > 0 {
            let prev = states[j - 1];
            out.push((layout.transition(prev, h), 1.0));
            for (k, &v) in x.sustain[j].iter().enumerate() {
                if v != 0.0 {
                    out.push((layout.sustain(prev, h, k), v));
                }
            }
        }
    }
    out.push((layout.output(f, states[states.len() - 1]), 1.0));
    for (k, &v) in x.global.iter().enumerate() {
        if v != 0.0 {
            out.push((layout.global(f, k), v));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsnmHyper {
    pub epochs: usize,
    pub averaging: bool,
}

impl Default for LsnmHyper {
    fn default() -> Self {
        Self {
            epochs: 20,
            averaging: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsnmModel {
    pub layout: Layout,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub hyper: LsnmHyper,
}

impl LsnmModel {
    pub fn states(&self) -> usize {
        self.layout.states
    }

    pub fn scorer(&self) -> Scorer<'_> {
        Scorer {
            layout: self.layout,
            weights: &self.weights,
        }
    }

    pub fn weight(&self, key: &LsnmKey) -> f64 {
        self.layout.index(key).map_or(0.0, |i| self.weights[i])
    }

    pub fn set_weight(&mut self, key: &LsnmKey, value: f64) -> Result<(), LsnmError> {
        let i = self
            .layout
            .index(key)
            .ok_or_else(|| LsnmError::UnknownKey(key.to_string()))?;
        self.weights[i] = value;
        Ok(())
    }

    /// Model with every weight drawn uniformly from `[-0.01, 0.01]`.
    pub fn initialized(states: usize, seed: u64, hyper: LsnmHyper) -> Result<LsnmModel, LsnmError> {
        let layout = Layout::new(states)?;
        let weights = initial_weights(layout, &mut ChaCha8Rng::seed_from_u64(seed));
        Ok(LsnmModel {
            layout,
            weights,
            seed,
            hyper,
        })
    }

    pub fn zeros(states: usize) -> Result<LsnmModel, LsnmError> {
        let layout = Layout::new(states)?;
        Ok(LsnmModel {
            layout,
            weights: vec![0.0; layout.dim()],
            seed: 0,
            hyper: LsnmHyper::default(),
        })
    }

    pub fn viterbi(&self, feats: &InstanceFeatures, f: Option<bool>) -> Result<Decode, LsnmError> {
        self.scorer().viterbi(&ChainFeatures::new(feats)?, f)
    }

    pub fn predict(&self, feats: &InstanceFeatures) -> Result<Decode, LsnmError> {
        self.viterbi(feats, None)
    }

    /// Score of a given structure under the documented accumulation order.
    pub fn structure_score(
        &self,
        feats: &InstanceFeatures,
        f: bool,
        states: &[usize],
    ) -> Result<f64, LsnmError> {
        self.scorer()
            .structure(&ChainFeatures::new(feats)?, f, states)
    }

    pub fn to_file(&self) -> LsnmModelFile {
        LsnmModelFile {
            layout_version: LAYOUT_VERSION,
            states: self.layout.states,
            seed: self.seed,
            hyper: self.hyper,
            weights: self
                .layout
                .keys()
                .iter()
                .zip(&self.weights)
                .filter(|(_, w)| **w != 0.0)
                .map(|(k, w)| (k.to_string(), *w))
                .collect(),
        }
    }

    pub fn from_file(file: &LsnmModelFile) -> Result<LsnmModel, LsnmError> {
        if file.layout_version != LAYOUT_VERSION {
            return Err(LsnmError::LayoutVersion(file.layout_version));
        }
        let mut model = LsnmModel::zeros(file.states)?;
        model.seed = file.seed;
        model.hyper = file.hyper;
        for (name, &w) in &file.weights {
            let key = LsnmKey::parse(name).ok_or_else(|| LsnmError::UnknownKey(name.clone()))?;
            model.set_weight(&key, w)?;
        }
        Ok(model)
    }
}

fn initial_weights(layout: Layout, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..layout.dim())
        .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
        .collect()
}

/// Serialized form: nonzero weights keyed by their readable names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsnmModelFile {
    pub layout_version: u32,
    pub states: usize,
    pub seed: u64,
    pub hyper: LsnmHyper,
    pub weights: BTreeMap<String, f64>,
}

/// Initial weights and per-epoch visiting order used by [`train_lsnm`] for
/// `n` instances. Both come from one generator seeded with `seed`.
pub fn training_schedule(
    layout: Layout,
    n: usize,
    epochs: usize,
    seed: u64,
) -> (Vec<f64>, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = initial_weights(layout, &mut rng);
    let mut order: Vec<usize> = (0..n).collect();
    let schedule = (0..epochs)
        .map(|_| {
            order.shuffle(&mut rng);
            order.clone()
        })
        .collect();
    (init, schedule)
}

/// Hard-assignment training: per instance, decode the best structure agreeing
/// with the gold label and the best structure overall; on a label mistake,
/// move the weights toward the former and away from the latter.
///
/// The seed drives both the initial weights and the per-epoch visiting order.
pub fn train_lsnm(
    examples: &[(InstanceFeatures, bool)],
    states: usize,
    hyper: LsnmHyper,
    seed: u64,
) -> Result<LsnmModel, LsnmError> {
    let layout = Layout::new(states)?;
    if examples.is_empty() {
        return Err(TrainError::Empty.into());
    }
    let positives = examples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == examples.len() {
        return Err(TrainError::Degenerate.into());
    }
    let chains: Vec<(ChainFeatures, bool)> = examples
        .iter()
        .map(|(f, y)| ChainFeatures::new(f).map(|c| (c, *y)))
        .collect::<Result<_, _>>()?;

    let (init, schedule) = training_schedule(layout, chains.len(), hyper.epochs, seed);
    let mut w = AveragedWeights::new(init);
    for order in &schedule {
        for (x, gold) in order.iter().map(|&i| &chains[i]) {
            w.begin_step();
            let scorer = Scorer {
                layout,
                weights: w.weights(),
            };
            let predicted = scorer.viterbi(x, None)?;
            if predicted.f_hat == *gold {
                continue;
            }
            let target = scorer.viterbi(x, Some(*gold))?;
            let plus = joint_dense(layout, x, &target.states, *gold);
            let minus = joint_dense(layout, x, &predicted.states, predicted.f_hat);
            for (i, v) in plus {
                w.add(i, v);
            }
            for (i, v) in minus {
                w.add(i, -v);
            }
        }
    }
    let weights = if hyper.averaging {
        w.average()
    } else {
        w.into_weights()
    };
    Ok(LsnmModel {
        layout,
        weights,
        seed,
        hyper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn evidence(pairs: &[(FeatureId, f64)]) -> FeatureVector {
        pairs.iter().copied().collect()
    }

    fn feats(evs: Vec<FeatureVector>) -> InstanceFeatures {
        InstanceFeatures {
            global: FeatureVector::new(),
            per_evidence: evs,
        }
    }

    #[test]
    fn minimal_chain_features() {
        let phi = joint_features(&feats(vec![FeatureVector::new()]), &[0], true).unwrap();
        let expected: SparseVector<LsnmKey> = vec![
            (LsnmKey::Start(0), 1.0),
            (LsnmKey::OutputState(true, 0), 1.0),
        ]
        .into_iter()
        .collect();
        assert_eq!(phi, expected);
    }

    #[test]
    fn sustenance_transition_feature() {
        let f = feats(vec![
            FeatureVector::new(),
            evidence(&[(FeatureId::F16, 1.0)]),
        ]);
        let phi = joint_features(&f, &[1, 0], false).unwrap();
        assert_eq!(phi.get(&LsnmKey::Sustain(1, 0, FeatureId::F16)), 1.0);
        assert_eq!(phi.get(&LsnmKey::Transition(1, 0)), 1.0);
    }

    #[test]
    fn evidence_order_matters() {
        let a = evidence(&[(FeatureId::F9, 1.0)]);
        let b = evidence(&[(FeatureId::F9, 2.0)]);
        let fwd = joint_features(&feats(vec![a.clone(), b.clone()]), &[0, 1], true).unwrap();
        let rev = joint_features(&feats(vec![b, a]), &[0, 1], true).unwrap();
        assert_ne!(fwd, rev);
    }

    #[test]
    fn length_mismatch_rejected() {
        let err = joint_features(&feats(vec![FeatureVector::new()]), &[0, 0], true).unwrap_err();
        assert_eq!(
            err,
            LsnmError::LengthMismatch {
                expected: 1,
                got: 2
            }
        );
        let model = LsnmModel::zeros(2).unwrap();
        assert_eq!(
            model.viterbi(&feats(vec![]), None).unwrap_err(),
            LsnmError::EmptyChain
        );
    }

    #[test]
    fn zero_weights_decode_to_state_zero() {
        let model = LsnmModel::zeros(3).unwrap();
        let d = model
            .viterbi(&feats(vec![FeatureVector::new(); 4]), None)
            .unwrap();
        assert_eq!(d.states, vec![0, 0, 0, 0]);
        assert!(!d.f_hat);
        assert_eq!(d.score, 0.0);
    }

    #[test]
    fn output_weight_selects_final_state() {
        let mut model = LsnmModel::zeros(2).unwrap();
        model
            .set_weight(&LsnmKey::OutputState(true, 1), 5.0)
            .unwrap();
        model
            .set_weight(&LsnmKey::OutputState(true, 0), -5.0)
            .unwrap();
        let d = model.predict(&feats(vec![FeatureVector::new()])).unwrap();
        assert_eq!((d.f_hat, d.states.clone(), d.score), (true, vec![1], 5.0));
    }

    #[test]
    fn layout_keys_round_trip() {
        for h in 1..4 {
            let layout = Layout::new(h).unwrap();
            let keys = layout.keys();
            assert_eq!(keys.len(), layout.dim());
            for (i, k) in keys.iter().enumerate() {
                assert_eq!(layout.index(k), Some(i));
                assert_eq!(LsnmKey::parse(&k.to_string()), Some(*k));
            }
        }
        let layout = Layout::new(2).unwrap();
        assert_eq!(layout.index(&LsnmKey::Start(2)), None);
        assert_eq!(layout.index(&LsnmKey::Content(0, FeatureId::F16)), None);
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let data = vec![
            (feats(vec![evidence(&[(FeatureId::F4, 1.0)])]), true),
            (feats(vec![FeatureVector::new()]), false),
        ];
        let hyper = LsnmHyper {
            epochs: 0,
            averaging: true,
        };
        let trained = train_lsnm(&data, 2, hyper, 11).unwrap();
        let init = LsnmModel::initialized(2, 11, hyper).unwrap();
        assert_eq!(trained, init);
        assert!(init.weights.iter().all(|w| w.abs() <= INIT_RANGE));
    }

    #[test]
    fn file_round_trip() {
        let model = LsnmModel::initialized(3, 5, LsnmHyper::default()).unwrap();
        let text = serde_json::to_string(&model.to_file()).unwrap();
        let back: LsnmModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(LsnmModel::from_file(&back).unwrap(), model);
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![(feats(vec![FeatureVector::new()]), true)];
        assert_eq!(
            train_lsnm(&data, 2, LsnmHyper::default(), 0).unwrap_err(),
            LsnmError::Train(TrainError::Degenerate)
        );
    }
}
