//! Feature extraction: F1-F3 per instance, F4-F17 per evidence.
//!
//! | id  | meaning                                                        |
//! |-----|----------------------------------------------------------------|
//! | F1  | entailment prediction                                          |
//! | F2  | "but" follows the desire verb                                  |
//! | F3  | "so" follows the desire verb                                   |
//! | F4  | occurrences of the focal word(s)                               |
//! | F5  | occurrences of same-POS synonyms of the focal word(s)          |
//! | F6  | occurrences of same-POS antonyms of the focal word(s)          |
//! | F7  | F4 + F5                                                        |
//! | F8  | occurrences of the focal lemma(s)                              |
//! | F9  | mentions of the desire subject                                 |
//! | F10 | positive adjectives modifying a subject mention                |
//! | F11 | negative adjectives modifying a subject mention                |
//! | F12 | subject-agent verbs agreeing in connotation with the intended action |
//! | F13 | subject-agent verbs disagreeing with the intended action       |
//! | F14 | positive verbs with the subject as patient                     |
//! | F15 | negative verbs with the subject as patient                     |
//! | F16 | evidence opens with a conforming phrase                        |
//! | F17 | evidence opens with a dissenting phrase                        |

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    AnnotatedSentence, DesireInstance, Lexicons, MentionSpan, Polarity, Pos, Relation,
};
use crate::entailment::{self, EntailmentError, EntailmentJudgment};
use crate::normalize::{self, FocalWord, NormalizedHypothesis};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureId {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
    F10,
    F11,
    F12,
    F13,
    F14,
    F15,
    F16,
    F17,
}

impl FeatureId {
    pub const ALL: [FeatureId; 17] = [
        FeatureId::F1,
        FeatureId::F2,
        FeatureId::F3,
        FeatureId::F4,
        FeatureId::F5,
        FeatureId::F6,
        FeatureId::F7,
        FeatureId::F8,
        FeatureId::F9,
        FeatureId::F10,
        FeatureId::F11,
        FeatureId::F12,
        FeatureId::F13,
        FeatureId::F14,
        FeatureId::F15,
        FeatureId::F16,
        FeatureId::F17,
    ];
    pub const GLOBAL: [FeatureId; 3] = [FeatureId::F1, FeatureId::F2, FeatureId::F3];
    pub const SUSTENANCE: [FeatureId; 2] = [FeatureId::F16, FeatureId::F17];

    /// Per-evidence content features F4-F15.
    pub fn content() -> &'static [FeatureId] {
        &Self::ALL[3..15]
    }

    /// Features entering the aggregated instance vector: F1-F15.
    pub fn aggregated() -> &'static [FeatureId] {
        &Self::ALL[..15]
    }

    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(n: usize) -> Option<FeatureId> {
        Self::ALL.get(n.checked_sub(1)?).copied()
    }

    pub fn parse(s: &str) -> Option<FeatureId> {
        s.strip_prefix('F')?
            .parse()
            .ok()
            .and_then(Self::from_number)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.number())
    }
}

pub type FeatureVector = SparseVector<FeatureId>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFeatures {
    pub global: FeatureVector,
    pub per_evidence: Vec<FeatureVector>,
}

impl InstanceFeatures {
    pub fn len(&self) -> usize {
        self.per_evidence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_evidence.is_empty()
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Spans referring to the desire subject in sentence `sid`: chain mentions
/// plus literal repeats of any named mention.
pub fn subject_mentions(instance: &DesireInstance, sid: usize) -> Vec<MentionSpan> {
    let Some(sentence) = instance.sentence(sid) else {
        return Vec::new();
    };
    let chain: Vec<MentionSpan> = match instance.subject_chain() {
        Some(c) => c.to_vec(),
        None => vec![instance.desire_subject],
    };
    let mut spans: Vec<MentionSpan> = chain
        .iter()
        .filter(|m| m.sentence == sid)
        .copied()
        .collect();

    let mut patterns: BTreeSet<Vec<String>> = BTreeSet::new();
    for m in &chain {
        let toks = instance.span_tokens(m);
        if !toks.is_empty() && !toks.iter().all(|t| t.pos == Pos::Pron) {
            patterns.insert(toks.iter().map(|t| t.surface.to_lowercase()).collect());
        }
    }
    let words: Vec<String> = sentence
        .tokens
        .iter()
        .map(|t| t.surface.to_lowercase())
        .collect();
    for pattern in &patterns {
        let n = pattern.len();
        for start in 0..words.len().saturating_sub(n - 1) {
            if words[start..start + n] != pattern[..] {
                continue;
            }
            let span = MentionSpan {
                sentence: sid,
                start,
                end: start + n,
            };
            if !spans.iter().any(|s| s.overlaps(&span)) {
                spans.push(span);
            }
        }
    }
    spans.sort();
    spans
}

fn focal_counts(evidence: &AnnotatedSentence, focal: &[FocalWord], lex: &Lexicons) -> [f64; 4] {
    let mut exact = 0.0;
    let mut syn = 0.0;
    let mut ant = 0.0;
    let mut lemma = 0.0;
    for fw in focal {
        let synonyms = lex.synonyms_of(&fw.lemma, fw.pos);
        let antonyms = lex.antonyms_of(&fw.lemma, fw.pos);
        for tok in &evidence.tokens {
            let tl = tok.lemma.to_lowercase();
            if tok.surface.to_lowercase() == fw.form {
                exact += 1.0;
            }
            if tl == fw.lemma {
                lemma += 1.0;
            }
            if tok.pos == fw.pos {
                if synonyms.is_some_and(|s| s.contains(&tl)) {
                    syn += 1.0;
                }
                if antonyms.is_some_and(|s| s.contains(&tl)) {
                    ant += 1.0;
                }
            }
        }
    }
    [exact, syn, ant, lemma]
}

fn token_polarity(sentence: &AnnotatedSentence, i: usize, lex: &Lexicons) -> Polarity {
    let tok = &sentence.tokens[i];
    let p = lex.polarity(&tok.lemma);
    if tok.negated {
        p.flipped()
    } else {
        p
    }
}

/// Longest conforming or dissenting phrase opening the sentence, after any
/// leading punctuation. Returns `(conforming, dissenting)` indicators.
pub fn sustenance(sentence: &AnnotatedSentence, lex: &Lexicons) -> (bool, bool) {
    let words: Vec<String> = sentence
        .tokens
        .iter()
        .skip_while(|t| t.is_punctuation())
        .map(|t| t.surface.to_lowercase())
        .collect();
    let longest = |phrases: &[String]| {
        phrases
            .iter()
            .map(|p| p.split(' ').collect::<Vec<_>>())
            .filter(|p| p.len() <= words.len() && p.iter().zip(&words).all(|(a, b)| a == b))
            .map(|p| p.len())
            .max()
            .unwrap_or(0)
    };
    let conforming = longest(&lex.conforming);
    let dissenting = longest(&lex.dissenting);
    if dissenting > 0 && dissenting >= conforming {
        (false, true)
    } else {
        (conforming > 0, false)
    }
}

fn evidence_features(
    instance: &DesireInstance,
    sid: usize,
    hyp: &NormalizedHypothesis,
    lex: &Lexicons,
) -> FeatureVector {
    use FeatureId::*;
    let ev = instance.sentence(sid).expect("evidence exists");
    let mut v = FeatureVector::new();

    let [exact, syn, ant, lemma] = focal_counts(ev, &hyp.focal_words, lex);
    v.set(F4, exact);
    v.set(F5, syn);
    v.set(F6, ant);
    v.set(F7, exact + syn);
    v.set(F8, lemma);

    let mentions = subject_mentions(instance, sid);
    v.set(F9, mentions.len() as f64);
    let is_mention = |i: usize| mentions.iter().any(|m| m.contains(sid, i));

    let (mut pos_adj, mut neg_adj) = (0.0, 0.0);
    for (i, tok) in ev.tokens.iter().enumerate() {
        if tok.pos != Pos::Adj {
            continue;
        }
        let modifies = ev.heads_of(i, Relation::AdjectivalModifier).any(is_mention)
            || ev.dependents(i, Relation::Subject).any(is_mention);
        if modifies {
            match token_polarity(ev, i, lex) {
                Polarity::Positive => pos_adj += 1.0,
                Polarity::Negative => neg_adj += 1.0,
                Polarity::Neutral => {}
            }
        }
    }
    v.set(F10, pos_adj);
    v.set(F11, neg_adj);

    let intended = hyp
        .intended_action
        .as_deref()
        .map(|a| lex.polarity(a))
        .unwrap_or(Polarity::Neutral);
    let (mut agree, mut disagree, mut pos_patient, mut neg_patient) = (0.0, 0.0, 0.0, 0.0);
    for (i, tok) in ev.tokens.iter().enumerate() {
        if tok.pos != Pos::Verb {
            continue;
        }
        let polarity = token_polarity(ev, i, lex);
        if polarity == Polarity::Neutral {
            continue;
        }
        if intended != Polarity::Neutral && ev.dependents(i, Relation::Subject).any(is_mention) {
            if polarity == intended {
                agree += 1.0;
            } else {
                disagree += 1.0;
            }
        }
        let patient = ev.dependents(i, Relation::Object).any(is_mention)
            || ev.dependents(i, Relation::PassiveSubject).any(is_mention);
        if patient {
            match polarity {
                Polarity::Positive => pos_patient += 1.0,
                _ => neg_patient += 1.0,
            }
        }
    }
    v.set(F12, agree);
    v.set(F13, disagree);
    v.set(F14, pos_patient);
    v.set(F15, neg_patient);

    let (conforming, dissenting) = sustenance(ev, lex);
    v.set(F16, indicator(conforming));
    v.set(F17, indicator(dissenting));
    v
}

pub fn extract(
    instance: &DesireInstance,
    hyp: &NormalizedHypothesis,
    lex: &Lexicons,
    te: &EntailmentJudgment,
) -> InstanceFeatures {
    let d = &instance.desire_expression;
    let after_verb = &d.tokens[instance.desire_verb_token + 1..];
    let follows = |w: &str| after_verb.iter().any(|t| t.lemma.eq_ignore_ascii_case(w));
    let mut global = FeatureVector::new();
    global.set(FeatureId::F1, indicator(te.entailed));
    global.set(FeatureId::F2, indicator(follows("but")));
    global.set(FeatureId::F3, indicator(follows("so")));
    let per_evidence = (1..=instance.evidences.len())
        .map(|sid| evidence_features(instance, sid, hyp, lex))
        .collect();
    InstanceFeatures {
        global,
        per_evidence,
    }
}

/// F1-F3 as-is plus F4-F15 summed over evidences.
pub fn aggregate(feats: &InstanceFeatures) -> FeatureVector {
    let mut out = FeatureVector::new();
    for id in FeatureId::GLOBAL {
        out.add(id, feats.global.get(&id));
    }
    for ev in &feats.per_evidence {
        for &id in FeatureId::content() {
            out.add(id, ev.get(&id));
        }
    }
    out
}

/// Everything derived from one instance that the models consume.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub id: String,
    pub label: Option<bool>,
    pub hypothesis: NormalizedHypothesis,
    pub entailment: EntailmentJudgment,
    pub features: InstanceFeatures,
    pub aggregated: FeatureVector,
}

pub fn prepare(
    instance: &DesireInstance,
    lex: &Lexicons,
    te_threshold: f64,
) -> Result<Prepared, EntailmentError> {
    let hypothesis = normalize::normalize(instance, lex);
    let entailment = entailment::judge(instance, &hypothesis, lex, te_threshold)?;
    let features = extract(instance, &hypothesis, lex, &entailment);
    let aggregated = aggregate(&features);
    Ok(Prepared {
        id: instance.id.clone(),
        label: instance.label,
        hypothesis,
        entailment,
        features,
        aggregated,
    })
}

pub fn prepare_all(
    corpus: &[DesireInstance],
    lex: &Lexicons,
    te_threshold: f64,
) -> Result<Vec<Prepared>, EntailmentError> {
    use rayon::prelude::*;
    corpus
        .par_iter()
        .map(|inst| prepare(inst, lex, te_threshold))
        .collect()
}

/// Rows `id<TAB>G|j<TAB>Fk<TAB>value` for every feature, zeros included.
pub fn dump_tsv(id: &str, feats: &InstanceFeatures) -> String {
    let mut out = String::new();
    for fid in FeatureId::GLOBAL {
        out.push_str(&format!("{id}\tG\t{fid}\t{}\n", feats.global.get(&fid)));
    }
    for (j, ev) in feats.per_evidence.iter().enumerate() {
        for &fid in &FeatureId::ALL[3..] {
            out.push_str(&format!("{id}\t{}\t{fid}\t{}\n", j + 1, ev.get(&fid)));
        }
    }
    out
}
