//! Lexical-alignment entailment between the normalized hypothesis and each
//! evidence fragment. The desire counts as fulfilled when any single
//! evidence covers enough of the hypothesis content.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedSentence, DesireInstance, Lexicons, Pos};
use crate::normalize::{HypothesisToken, NormalizedHypothesis};

pub const DEFAULT_THRESHOLD: f64 = 0.75;

const STOPWORDS: &str = include_str!("../resources/stopwords.txt");

#[derive(Debug, Error, PartialEq)]
pub enum EntailmentError {
    #[error("entailment threshold must lie in (0, 1], got {0}")]
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailmentJudgment {
    pub entailed: bool,
    /// Best coverage over all evidences.
    pub coverage: f64,
    /// `(evidence index, coverage)`, evidences numbered from 1.
    pub per_evidence: Vec<(usize, f64)>,
}

fn stopwords() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    })
}

pub fn check_threshold(threshold: f64) -> Result<(), EntailmentError> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(EntailmentError::Threshold(threshold))
    }
}

/// Distinct open-class, non-stopword hypothesis tokens.
pub fn content_tokens(hyp: &[HypothesisToken]) -> Vec<&HypothesisToken> {
    let mut seen = HashSet::new();
    hyp.iter()
        .filter(|t| matches!(t.pos, Pos::Noun | Pos::Verb | Pos::Adj))
        .filter(|t| !stopwords().contains(&t.lemma.to_lowercase()))
        .filter(|t| seen.insert(t.lemma.to_lowercase()))
        .collect()
}

fn aligned(h: &HypothesisToken, evidence: &AnnotatedSentence, lex: &Lexicons) -> bool {
    let lemma = h.lemma.to_lowercase();
    let surface = h.surface.to_lowercase();
    let antonyms = lex.antonyms_of(&lemma, h.pos);
    let synonyms = lex.synonyms_of(&lemma, h.pos);
    let mut matched = false;
    for tok in &evidence.tokens {
        let tl = tok.lemma.to_lowercase();
        if antonyms.is_some_and(|a| a.contains(&tl)) {
            return false;
        }
        matched |= tl == lemma
            || tok.surface.to_lowercase() == surface
            || synonyms.is_some_and(|s| s.contains(&tl));
    }
    matched
}

/// Fraction of hypothesis content aligned in one evidence; 0 for an empty
/// hypothesis.
pub fn coverage(hyp: &[HypothesisToken], evidence: &AnnotatedSentence, lex: &Lexicons) -> f64 {
    let content = content_tokens(hyp);
    if content.is_empty() {
        return 0.0;
    }
    let hits = content.iter().filter(|h| aligned(h, evidence, lex)).count();
    hits as f64 / content.len() as f64
}

pub fn judge_evidences(
    hyp: &[HypothesisToken],
    evidences: &[AnnotatedSentence],
    lex: &Lexicons,
    threshold: f64,
) -> Result<EntailmentJudgment, EntailmentError> {
    check_threshold(threshold)?;
    let per_evidence: Vec<(usize, f64)> = evidences
        .iter()
        .enumerate()
        .map(|(j, e)| (j + 1, coverage(hyp, e, lex)))
        .collect();
    let best = per_evidence.iter().map(|&(_, c)| c).fold(0.0, f64::max);
    Ok(EntailmentJudgment {
        entailed: !content_tokens(hyp).is_empty() && best >= threshold,
        coverage: best,
        per_evidence,
    })
}

pub fn judge(
    instance: &DesireInstance,
    hyp: &NormalizedHypothesis,
    lex: &Lexicons,
    threshold: f64,
) -> Result<EntailmentJudgment, EntailmentError> {
    judge_evidences(&hyp.tokens, &instance.evidences, lex, threshold)
}
