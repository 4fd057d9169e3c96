//! Desire-expression normalization, focal words and intended action.
//!
//! Normalization turns "One day Jerry wanted to paint his barn ." into the
//! hypothesis "Jerry painted his barn": a pronominal subject is replaced by
//! the first named mention in its chain, everything before the subject is
//! dropped, the desire verb with its `to` marker and auxiliaries is removed,
//! and the first verb of the complement is put in the past tense.

use serde::{Deserialize, Serialize};

use crate::corpus::{DesireInstance, Lexicons, Pos, Relation, Token, DESIRE_VERB_LEMMAS};

/// Verbs that are tagged as auxiliaries but still take a past form when they
/// open the complement ("wished to be buried" -> "was buried").
const AUXILIARY_VERBS: [&str; 3] = ["be", "have", "do"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisToken {
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
}

impl From<&Token> for HypothesisToken {
    fn from(t: &Token) -> Self {
        HypothesisToken {
            surface: t.surface.clone(),
            lemma: t.lemma.clone(),
            pos: t.pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalWord {
    /// Word form searched for in evidences (past tense for verbs).
    pub form: String,
    pub lemma: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedHypothesis {
    pub tokens: Vec<HypothesisToken>,
    pub subject_lemma: String,
    pub focal_words: Vec<FocalWord>,
    pub intended_action: Option<String>,
}

impl NormalizedHypothesis {
    pub fn text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn is_desire_lemma(lemma: &str) -> bool {
    DESIRE_VERB_LEMMAS.contains(&lemma.to_lowercase().as_str())
}

fn all_pronouns(tokens: &[Token]) -> bool {
    !tokens.is_empty() && tokens.iter().all(|t| t.pos == Pos::Pron)
}

/// Subject tokens after pronoun substitution.
fn resolved_subject(instance: &DesireInstance) -> Vec<HypothesisToken> {
    let subject = instance.span_tokens(&instance.desire_subject);
    if all_pronouns(subject) {
        if let Some(chain) = instance.subject_chain() {
            let mut mentions: Vec<_> = chain.to_vec();
            mentions.sort();
            if let Some(named) = mentions
                .iter()
                .map(|m| instance.span_tokens(m))
                .find(|toks| !toks.is_empty() && !all_pronouns(toks))
            {
                return named.iter().map(HypothesisToken::from).collect();
            }
        }
    }
    subject.iter().map(HypothesisToken::from).collect()
}

fn complement_of(instance: &DesireInstance) -> Option<usize> {
    instance
        .desire_expression
        .dependents(instance.desire_verb_token, Relation::ClausalComplement)
        .next()
}

fn past_form(token: &Token, lex: &Lexicons) -> Option<String> {
    let lemma = token.lemma.to_lowercase();
    if token.pos == Pos::Verb || AUXILIARY_VERBS.contains(&lemma.as_str()) {
        Some(lex.past_tense(&lemma))
    } else {
        None
    }
}

pub fn normalize(instance: &DesireInstance, lex: &Lexicons) -> NormalizedHypothesis {
    let d = &instance.desire_expression;
    let verb = instance.desire_verb_token;
    let subject = resolved_subject(instance);
    let subject_lemma = subject
        .iter()
        .rev()
        .find(|t| matches!(t.pos, Pos::Noun | Pos::Pron))
        .or(subject.last())
        .map(|t| t.lemma.clone())
        .unwrap_or_default();
    let mut tokens = subject;

    let predicate: Vec<usize> = match complement_of(instance) {
        Some(c) => {
            let markers: Vec<usize> = d.dependents(c, Relation::Marker).collect();
            d.subtree(c)
                .into_iter()
                .filter(|i| !markers.contains(i))
                .collect()
        }
        None => {
            let mut out = Vec::new();
            let mut i = verb + 1;
            if i < d.len() && d.tokens[i].lemma.eq_ignore_ascii_case("to") {
                i += 1;
            }
            while i < d.len() && !d.tokens[i].is_punctuation() {
                out.push(i);
                i += 1;
            }
            out
        }
    };

    let mut converted = false;
    for i in predicate {
        let tok = &d.tokens[i];
        if i == verb || is_desire_lemma(&tok.lemma) || tok.is_punctuation() {
            continue;
        }
        let mut out = HypothesisToken::from(tok);
        if !converted {
            if let Some(past) = past_form(tok, lex) {
                out.surface = past;
            }
            converted = true;
        }
        tokens.push(out);
    }

    NormalizedHypothesis {
        tokens,
        subject_lemma,
        focal_words: focal_words(instance, lex),
        intended_action: intended_action(instance),
    }
}

/// Clausal complement(s) of the desire verb; verbs are returned in past tense.
pub fn focal_words(instance: &DesireInstance, lex: &Lexicons) -> Vec<FocalWord> {
    let d = &instance.desire_expression;
    let Some(head) = complement_of(instance) else {
        return Vec::new();
    };
    let mut heads = vec![head];
    heads.extend(
        d.dependents(head, Relation::Conjunct)
            .filter(|&c| d.tokens[c].pos == d.tokens[head].pos),
    );
    heads
        .into_iter()
        .map(|i| {
            let tok = &d.tokens[i];
            let lemma = tok.lemma.to_lowercase();
            let form = if tok.pos == Pos::Verb {
                lex.past_tense(&lemma)
            } else {
                tok.surface.to_lowercase()
            };
            FocalWord {
                form,
                lemma,
                pos: tok.pos,
            }
        })
        .collect()
}

/// Lemma of the first verb after the desire verb.
pub fn intended_action(instance: &DesireInstance) -> Option<String> {
    instance.desire_expression.tokens[instance.desire_verb_token + 1..]
        .iter()
        .find(|t| t.pos == Pos::Verb)
        .map(|t| t.lemma.to_lowercase())
}
