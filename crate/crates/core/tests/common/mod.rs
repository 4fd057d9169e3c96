#![allow(dead_code)]

use desire_core::annotator::{annotate, RuleGrammar};
use desire_core::corpus::{DesireInstance, MentionSpan, Relation};
use desire_core::features::{FeatureId, FeatureVector, InstanceFeatures};
use desire_core::lsnm::{ChainFeatures, Layout, LsnmKey};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Builds an instance from raw text with the rule annotator. The subject is
/// the desire verb's `nsubj`; `chain` adds extra `(sentence, token)` mentions.
pub fn instance(
    id: &str,
    desire: &str,
    evidences: &[&str],
    chain: &[(usize, usize)],
) -> DesireInstance {
    let g = RuleGrammar::builtin();
    let d = annotate(desire, &g).unwrap();
    let verb = d
        .tokens
        .iter()
        .position(|t| ["want", "wish", "hope"].contains(&t.lemma.as_str()))
        .expect("desire verb");
    let subj = d
        .arcs
        .iter()
        .find(|a| a.head == verb && a.rel == Relation::Subject)
        .expect("desire subject")
        .dep;
    let subject = MentionSpan {
        sentence: 0,
        start: subj,
        end: subj + 1,
    };
    let mut mentions = vec![subject];
    mentions.extend(chain.iter().map(|&(s, t)| MentionSpan {
        sentence: s,
        start: t,
        end: t + 1,
    }));
    let mut inst = DesireInstance {
        id: id.into(),
        desire_expression: d,
        evidences: evidences.iter().map(|e| annotate(e, &g).unwrap()).collect(),
        desire_subject: subject,
        desire_verb_token: verb,
        coref_chains: if chain.is_empty() {
            vec![]
        } else {
            vec![mentions]
        },
        label: None,
    };
    inst.validate().unwrap();
    inst
}

/// Random per-evidence features with the sparsity of real extractions.
pub fn random_features(rng: &mut ChaCha8Rng, n: usize) -> InstanceFeatures {
    let value = |rng: &mut ChaCha8Rng, max: u32| -> f64 {
        if rng.gen_bool(0.5) {
            0.0
        } else {
            rng.gen_range(0..=max) as f64
        }
    };
    let mut global = FeatureVector::new();
    for id in FeatureId::GLOBAL {
        global.set(id, value(rng, 1));
    }
    let per_evidence = (0..n)
        .map(|_| {
            let mut v = FeatureVector::new();
            for &id in FeatureId::content() {
                v.set(id, value(rng, 3));
            }
            let cue = rng.gen_range(0..3);
            v.set(FeatureId::F16, if cue == 1 { 1.0 } else { 0.0 });
            v.set(FeatureId::F17, if cue == 2 { 1.0 } else { 0.0 });
            v
        })
        .collect();
    InstanceFeatures {
        global,
        per_evidence,
    }
}

pub fn random_weights(rng: &mut ChaCha8Rng, layout: Layout) -> Vec<f64> {
    (0..layout.dim())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect()
}

/// Score of one structure recomputed from keys, following the documented
/// accumulation order.
pub fn oracle_score(
    layout: Layout,
    w: &[f64],
    x: &ChainFeatures,
    f: bool,
    states: &[usize],
) -> f64 {
    let wk = |k: LsnmKey| w[layout.index(&k).expect("key in layout")];
    let content = |h: usize, j: usize| {
        let mut s = 0.0;
        for (k, &id) in FeatureId::content().iter().enumerate() {
            s += wk(LsnmKey::Content(h, id)) * x.content[j][k];
        }
        s
    };
    let sustain = |a: usize, b: usize, j: usize| {
        let mut s = 0.0;
        for (k, &id) in FeatureId::SUSTENANCE.iter().enumerate() {
            s += wk(LsnmKey::Sustain(a, b, id)) * x.sustain[j][k];
        }
        s
    };
    let mut total = wk(LsnmKey::Start(states[0])) + content(states[0], 0);
    for j in 1..states.len() {
        let (a, b) = (states[j - 1], states[j]);
        total += (wk(LsnmKey::Transition(a, b)) + sustain(a, b, j)) + content(b, j);
    }
    let mut global = 0.0;
    for (k, &id) in FeatureId::aggregated().iter().enumerate() {
        global += wk(LsnmKey::OutputGlobal(f, id)) * x.global[k];
    }
    total + (wk(LsnmKey::OutputState(f, states[states.len() - 1])) + global)
}

/// Best `(score, f, states)` by exhaustive enumeration.
pub fn brute_force(
    layout: Layout,
    w: &[f64],
    x: &ChainFeatures,
    clamp: Option<bool>,
) -> (f64, bool, Vec<usize>) {
    let h = layout.states;
    let n = x.len();
    let mut best: Option<(f64, bool, Vec<usize>)> = None;
    for f in [false, true] {
        if clamp.is_some_and(|c| c != f) {
            continue;
        }
        for code in 0..h.pow(n as u32) {
            let mut states = vec![0; n];
            let mut c = code;
            for s in states.iter_mut().rev() {
                *s = c % h;
                c /= h;
            }
            let score = oracle_score(layout, w, x, f, &states);
            if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
                best = Some((score, f, states));
            }
        }
    }
    best.expect("nonempty search space")
}
