//! Annotated corpus data model and the JSON corpus format.
//!
//! A corpus file is a JSON array of instances. Sentence id 0 always refers to
//! the desire expression and ids `1..=n` to the evidence fragments in order.

mod lexicon;

pub use lexicon::{load_lexicons, LexiconError, Lexicons, Polarity};

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_EVIDENCES: usize = 5;
pub const DESIRE_VERB_LEMMAS: [&str; 3] = ["want", "wish", "hope"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed corpus JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("instance {instance:?}: field `{field}`: {message}")]
    Schema {
        instance: String,
        field: String,
        message: String,
    },
    #[error("instance {instance:?}: sentence {sentence}: {message}")]
    Index {
        instance: String,
        sentence: usize,
        message: String,
    },
}

/// Coarse part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Other,
}

impl Pos {
    pub fn parse(s: &str) -> Option<Pos> {
        match s {
            "noun" => Some(Pos::Noun),
            "verb" => Some(Pos::Verb),
            "adj" => Some(Pos::Adj),
            "adv" => Some(Pos::Adv),
            "pron" => Some(Pos::Pron),
            "other" => Some(Pos::Other),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adj => "adj",
            Pos::Adv => "adv",
            Pos::Pron => "pron",
            Pos::Other => "other",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dependency relation labels. The serialized names follow the usual
/// Stanford-style abbreviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "nsubj")]
    Subject,
    #[serde(rename = "nsubjpass")]
    PassiveSubject,
    #[serde(rename = "dobj")]
    Object,
    #[serde(rename = "amod")]
    AdjectivalModifier,
    #[serde(rename = "xcomp")]
    ClausalComplement,
    #[serde(rename = "neg")]
    Negation,
    #[serde(rename = "aux")]
    Auxiliary,
    #[serde(rename = "auxpass")]
    PassiveAuxiliary,
    #[serde(rename = "cop")]
    Copula,
    #[serde(rename = "mark")]
    Marker,
    #[serde(rename = "det")]
    Determiner,
    #[serde(rename = "poss")]
    Possessive,
    #[serde(rename = "prep")]
    Preposition,
    #[serde(rename = "pobj")]
    PrepositionalObject,
    #[serde(rename = "advmod")]
    AdverbialModifier,
    #[serde(rename = "cc")]
    Coordination,
    #[serde(rename = "conj")]
    Conjunct,
    #[serde(rename = "punct")]
    Punctuation,
    #[serde(rename = "dep")]
    Dependent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
    /// Position within the sentence; implied by array order in the file.
    #[serde(skip)]
    pub index: usize,
    #[serde(default)]
    pub negated: bool,
}

impl Token {
    pub fn is_punctuation(&self) -> bool {
        !self.surface.is_empty() && self.surface.chars().all(|c| c.is_ascii_punctuation())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub head: usize,
    pub dep: usize,
    pub rel: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub text: String,
    pub tokens: Vec<Token>,
    pub arcs: Vec<Arc>,
}

impl AnnotatedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Dependents of `head` attached with `rel`, in arc order.
    pub fn dependents(&self, head: usize, rel: Relation) -> impl Iterator<Item = usize> + '_ {
        self.arcs
            .iter()
            .filter(move |a| a.head == head && a.rel == rel)
            .map(|a| a.dep)
    }

    pub fn heads_of(&self, dep: usize, rel: Relation) -> impl Iterator<Item = usize> + '_ {
        self.arcs
            .iter()
            .filter(move |a| a.dep == dep && a.rel == rel)
            .map(|a| a.head)
    }

    /// Token indices in the subtree rooted at `root`, ascending.
    pub fn subtree(&self, root: usize) -> Vec<usize> {
        let mut seen = vec![false; self.tokens.len()];
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            if node >= seen.len() || seen[node] {
                continue;
            }
            seen[node] = true;
            stack.extend(self.arcs.iter().filter(|a| a.head == node).map(|a| a.dep));
        }
        seen.iter()
            .enumerate()
            .filter_map(|(i, s)| s.then_some(i))
            .collect()
    }

    fn reindex(&mut self) {
        for (i, tok) in self.tokens.iter_mut().enumerate() {
            tok.index = i;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MentionSpan {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

impl MentionSpan {
    pub fn contains(&self, sentence: usize, token: usize) -> bool {
        self.sentence == sentence && self.start <= token && token < self.end
    }

    pub fn overlaps(&self, other: &MentionSpan) -> bool {
        self.sentence == other.sentence && self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesireInstance {
    pub id: String,
    pub desire_expression: AnnotatedSentence,
    pub evidences: Vec<AnnotatedSentence>,
    pub desire_subject: MentionSpan,
    pub desire_verb_token: usize,
    pub coref_chains: Vec<Vec<MentionSpan>>,
    pub label: Option<bool>,
}

impl DesireInstance {
    /// Sentence by id: 0 is the desire expression, `j >= 1` is evidence `j`.
    pub fn sentence(&self, id: usize) -> Option<&AnnotatedSentence> {
        if id == 0 {
            Some(&self.desire_expression)
        } else {
            self.evidences.get(id - 1)
        }
    }

    pub fn span_tokens(&self, span: &MentionSpan) -> &[Token] {
        match self.sentence(span.sentence) {
            Some(s) if span.end <= s.len() && span.start < span.end => {
                &s.tokens[span.start..span.end]
            }
            _ => &[],
        }
    }

    /// The coreference chain containing the desire subject span, if any.
    pub fn subject_chain(&self) -> Option<&[MentionSpan]> {
        self.coref_chains
            .iter()
            .find(|chain| chain.contains(&self.desire_subject))
            .map(|c| c.as_slice())
    }

    pub fn desire_verb(&self) -> &Token {
        &self.desire_expression.tokens[self.desire_verb_token]
    }

    /// Checks every structural invariant, and fills in token indices.
    pub fn validate(&mut self) -> Result<(), CorpusError> {
        let id = self.id.clone();
        let schema = |field: &str, message: String| CorpusError::Schema {
            instance: id.clone(),
            field: field.to_string(),
            message,
        };
        if self.id.is_empty() {
            return Err(schema("id", "must be nonempty".into()));
        }
        if self.evidences.is_empty() {
            return Err(schema(
                "evidences",
                "at least one evidence is required".into(),
            ));
        }
        if self.evidences.len() > MAX_EVIDENCES {
            return Err(schema(
                "evidences",
                format!(
                    "evidence count exceeds {MAX_EVIDENCES} (got {})",
                    self.evidences.len()
                ),
            ));
        }
        self.desire_expression.reindex();
        for ev in &mut self.evidences {
            ev.reindex();
        }
        for sid in 0..=self.evidences.len() {
            let sentence = self.sentence(sid).expect("sentence id in range");
            validate_sentence(&self.id, sid, sentence)?;
        }

        let d = &self.desire_expression;
        if self.desire_verb_token >= d.len() {
            return Err(CorpusError::Index {
                instance: self.id.clone(),
                sentence: 0,
                message: format!(
                    "desire_verb_token {} out of range for {} tokens",
                    self.desire_verb_token,
                    d.len()
                ),
            });
        }
        let lemma = d.tokens[self.desire_verb_token].lemma.to_lowercase();
        if !DESIRE_VERB_LEMMAS.contains(&lemma.as_str()) {
            return Err(schema(
                "desire_verb_token",
                format!("lemma {lemma:?} is not one of want, wish, hope"),
            ));
        }
        if self.desire_subject.sentence != 0 {
            return Err(schema(
                "desire_subject",
                format!(
                    "must lie in sentence 0, found sentence {}",
                    self.desire_subject.sentence
                ),
            ));
        }
        self.check_span(&self.desire_subject)?;
        for chain in &self.coref_chains {
            for span in chain {
                self.check_span(span)?;
            }
        }
        Ok(())
    }

    fn check_span(&self, span: &MentionSpan) -> Result<(), CorpusError> {
        let err = |message: String| CorpusError::Index {
            instance: self.id.clone(),
            sentence: span.sentence,
            message,
        };
        let sentence = self
            .sentence(span.sentence)
            .ok_or_else(|| err("mention refers to a missing sentence".into()))?;
        if span.start >= span.end || span.end > sentence.len() {
            return Err(err(format!(
                "mention span {}..{} invalid for {} tokens",
                span.start,
                span.end,
                sentence.len()
            )));
        }
        Ok(())
    }
}

fn validate_sentence(id: &str, sid: usize, s: &AnnotatedSentence) -> Result<(), CorpusError> {
    let err = |message: String| CorpusError::Index {
        instance: id.to_string(),
        sentence: sid,
        message,
    };
    if s.tokens.is_empty() {
        return Err(err("sentence has no tokens".into()));
    }
    for (i, tok) in s.tokens.iter().enumerate() {
        if tok.lemma.is_empty() {
            return Err(CorpusError::Schema {
                instance: id.to_string(),
                field: format!("tokens[{i}].lemma"),
                message: format!("empty lemma in sentence {sid}"),
            });
        }
    }
    for arc in &s.arcs {
        if arc.head >= s.len() || arc.dep >= s.len() {
            return Err(err(format!(
                "arc {}->{} out of range for {} tokens",
                arc.head,
                arc.dep,
                s.len()
            )));
        }
    }
    Ok(())
}

/// Parses and validates a corpus from JSON text.
pub fn parse_corpus(json: &str) -> Result<Vec<DesireInstance>, CorpusError> {
    let mut instances: Vec<DesireInstance> = serde_json::from_str(json)?;
    let mut seen = HashSet::new();
    for inst in &mut instances {
        inst.validate()?;
        if !seen.insert(inst.id.clone()) {
            return Err(CorpusError::Schema {
                instance: inst.id.clone(),
                field: "id".into(),
                message: "duplicate instance id".into(),
            });
        }
    }
    Ok(instances)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<DesireInstance>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

/// Deterministic pretty-printed JSON for a corpus.
pub fn serialize_corpus(instances: &[DesireInstance]) -> String {
    let mut out = serde_json::to_string_pretty(instances).expect("corpus serializes");
    out.push('\n');
    out
}

pub fn write_corpus(path: impl AsRef<Path>, instances: &[DesireInstance]) -> std::io::Result<()> {
    std::fs::write(path, serialize_corpus(instances))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(evidence_count: usize, verb_lemma: &str) -> String {
        let ev = r#"{"text":"He did .","tokens":[{"surface":"He","lemma":"he","pos":"pron"},{"surface":"did","lemma":"do","pos":"verb"},{"surface":".","lemma":".","pos":"other"}],"arcs":[{"head":1,"dep":0,"rel":"nsubj"}]}"#;
        let evs = vec![ev; evidence_count].join(",");
        format!(
            r#"[{{"id":"x1","desire_expression":{{"text":"Jerry wanted to paint .","tokens":[
                {{"surface":"Jerry","lemma":"Jerry","pos":"noun"}},
                {{"surface":"wanted","lemma":"{verb_lemma}","pos":"verb"}},
                {{"surface":"to","lemma":"to","pos":"other"}},
                {{"surface":"paint","lemma":"paint","pos":"verb"}},
                {{"surface":".","lemma":".","pos":"other"}}],
              "arcs":[{{"head":1,"dep":0,"rel":"nsubj"}},{{"head":1,"dep":3,"rel":"xcomp"}},{{"head":3,"dep":2,"rel":"mark"}}]}},
              "evidences":[{evs}],
              "desire_subject":{{"sentence":0,"start":0,"end":1}},
              "desire_verb_token":1,
              "coref_chains":[[{{"sentence":0,"start":0,"end":1}},{{"sentence":1,"start":0,"end":1}}]],
              "label":true}}]"#
        )
    }

    #[test]
    fn loads_minimal_file() {
        let corpus = parse_corpus(&minimal(2, "want")).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus[0].evidences.len(), 2);
        assert_eq!(corpus[0].label, Some(true));
        assert_eq!(corpus[0].evidences[1].tokens[2].index, 2);
    }

    #[test]
    fn rejects_non_desire_verb() {
        let err = parse_corpus(&minimal(1, "like")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"like\""), "{msg}");
        assert!(msg.contains("want, wish, hope"), "{msg}");
    }

    #[test]
    fn rejects_six_evidences() {
        let err = parse_corpus(&minimal(6, "want")).unwrap_err();
        assert!(err.to_string().contains("evidence count exceeds 5"));
    }

    #[test]
    fn rejects_bad_coref_span() {
        let text = minimal(1, "want").replace(
            r#"{"sentence":1,"start":0,"end":1}"#,
            r#"{"sentence":1,"start":2,"end":9}"#,
        );
        let err = parse_corpus(&text).unwrap_err();
        assert!(
            matches!(err, CorpusError::Index { sentence: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn serialization_round_trips() {
        let corpus = parse_corpus(&minimal(3, "hope")).unwrap();
        let text = serialize_corpus(&corpus);
        let again = parse_corpus(&text).unwrap();
        assert_eq!(corpus, again);
        assert_eq!(text, serialize_corpus(&again));
    }

    #[test]
    fn subtree_collects_descendants() {
        let corpus = parse_corpus(&minimal(1, "want")).unwrap();
        assert_eq!(corpus[0].desire_expression.subtree(3), vec![2, 3]);
        assert_eq!(corpus[0].desire_expression.subtree(1), vec![0, 1, 2, 3]);
    }
}
