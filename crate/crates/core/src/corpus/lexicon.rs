use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Pos;

const CONNOTATION_FILE: &str = "connotation.tsv";
const SYNONYMS_FILE: &str = "synonyms.tsv";
const ANTONYMS_FILE: &str = "antonyms.tsv";
const CONFORMING_FILE: &str = "conforming.txt";
const DISSENTING_FILE: &str = "dissenting.txt";
const PAST_TENSE_FILE: &str = "past_tense.tsv";

const BUILTIN_CONNOTATION: &str = include_str!("../../lexicons/connotation.tsv");
const BUILTIN_SYNONYMS: &str = include_str!("../../lexicons/synonyms.tsv");
const BUILTIN_ANTONYMS: &str = include_str!("../../lexicons/antonyms.tsv");
const BUILTIN_CONFORMING: &str = include_str!("../../lexicons/conforming.txt");
const BUILTIN_DISSENTING: &str = include_str!("../../lexicons/dissenting.txt");
const BUILTIN_PAST_TENSE: &str = include_str!("../../lexicons/past_tense.tsv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("missing lexicon file {0}")]
    Missing(String),
    #[error("cannot read {file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: duplicate key {key:?}")]
    Duplicate {
        file: String,
        line: usize,
        key: String,
    },
    #[error("phrase {0:?} appears in both conforming and dissenting lists")]
    Overlap(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub fn flipped(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
            Polarity::Neutral => Polarity::Neutral,
        }
    }
}

/// Lexical resources used by normalization, entailment and feature extraction.
#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub connotation: HashMap<String, Polarity>,
    pub synonyms: HashMap<(String, Pos), BTreeSet<String>>,
    pub antonyms: HashMap<(String, Pos), BTreeSet<String>>,
    pub conforming: Vec<String>,
    pub dissenting: Vec<String>,
    pub past_tense: HashMap<String, String>,
}

impl Lexicons {
    /// The default lexicons compiled into the crate.
    pub fn builtin() -> Lexicons {
        Self::from_sources(
            BUILTIN_CONNOTATION,
            BUILTIN_SYNONYMS,
            BUILTIN_ANTONYMS,
            BUILTIN_CONFORMING,
            BUILTIN_DISSENTING,
            BUILTIN_PAST_TENSE,
        )
        .expect("builtin lexicons are well formed")
    }

    pub fn from_sources(
        connotation: &str,
        synonyms: &str,
        antonyms: &str,
        conforming: &str,
        dissenting: &str,
        past_tense: &str,
    ) -> Result<Lexicons, LexiconError> {
        let lex = Lexicons {
            connotation: parse_connotation(CONNOTATION_FILE, connotation)?,
            synonyms: parse_relations(SYNONYMS_FILE, synonyms)?,
            antonyms: parse_relations(ANTONYMS_FILE, antonyms)?,
            conforming: parse_phrases(CONFORMING_FILE, conforming)?,
            dissenting: parse_phrases(DISSENTING_FILE, dissenting)?,
            past_tense: parse_past_tense(PAST_TENSE_FILE, past_tense)?,
        };
        let conforming: HashSet<&str> = lex.conforming.iter().map(String::as_str).collect();
        if let Some(p) = lex
            .dissenting
            .iter()
            .find(|p| conforming.contains(p.as_str()))
        {
            return Err(LexiconError::Overlap(p.clone()));
        }
        Ok(lex)
    }

    pub fn polarity(&self, lemma: &str) -> Polarity {
        self.connotation
            .get(&lemma.to_lowercase())
            .copied()
            .unwrap_or(Polarity::Neutral)
    }

    pub fn synonyms_of(&self, lemma: &str, pos: Pos) -> Option<&BTreeSet<String>> {
        self.synonyms.get(&(lemma.to_lowercase(), pos))
    }

    pub fn antonyms_of(&self, lemma: &str, pos: Pos) -> Option<&BTreeSet<String>> {
        self.antonyms.get(&(lemma.to_lowercase(), pos))
    }

    /// Past tense of a base verb: table lookup, then the regular suffix rules.
    pub fn past_tense(&self, lemma: &str) -> String {
        let lower = lemma.to_lowercase();
        match self.past_tense.get(&lower) {
            Some(past) => past.clone(),
            None => regular_past_tense(&lower),
        }
    }
}

/// Regular past tense formation: `e` -> `ed`, consonant + `y` -> `ied`,
/// doubling of a final consonant after a single short vowel in one-syllable
/// words, otherwise `ed`.
pub fn regular_past_tense(verb: &str) -> String {
    let chars: Vec<char> = verb.chars().collect();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u');
    let n = chars.len();
    if n == 0 {
        return String::new();
    }
    let last = chars[n - 1];
    if last == 'e' {
        return format!("{verb}d");
    }
    if last == 'y' && n >= 2 && !is_vowel(chars[n - 2]) {
        return format!("{}ied", &verb[..verb.len() - 1]);
    }
    let vowel_groups = chars
        .iter()
        .enumerate()
        .filter(|(i, c)| is_vowel(**c) && (*i == 0 || !is_vowel(chars[i - 1])))
        .count();
    if n >= 3
        && vowel_groups == 1
        && !is_vowel(last)
        && !matches!(last, 'w' | 'x' | 'y')
        && is_vowel(chars[n - 2])
        && !is_vowel(chars[n - 3])
    {
        return format!("{verb}{last}ed");
    }
    format!("{verb}ed")
}

pub fn load_lexicons(dir: impl AsRef<Path>) -> Result<Lexicons, LexiconError> {
    let dir = dir.as_ref();
    let read = |name: &str, required: bool| -> Result<Option<String>, LexiconError> {
        let path = dir.join(name);
        if !path.exists() {
            return if required {
                Err(LexiconError::Missing(path.display().to_string()))
            } else {
                Ok(None)
            };
        }
        std::fs::read_to_string(&path)
            .map(Some)
            .map_err(|source| LexiconError::Io {
                file: path.display().to_string(),
                source,
            })
    };
    let connotation = read(CONNOTATION_FILE, true)?.unwrap_or_default();
    let synonyms = read(SYNONYMS_FILE, true)?.unwrap_or_default();
    let antonyms = read(ANTONYMS_FILE, true)?.unwrap_or_default();
    let conforming = read(CONFORMING_FILE, true)?.unwrap_or_default();
    let dissenting = read(DISSENTING_FILE, true)?.unwrap_or_default();
    let past = read(PAST_TENSE_FILE, false)?.unwrap_or_else(|| BUILTIN_PAST_TENSE.to_string());
    Lexicons::from_sources(
        &connotation,
        &synonyms,
        &antonyms,
        &conforming,
        &dissenting,
        &past,
    )
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn malformed(file: &str, line: usize, message: impl Into<String>) -> LexiconError {
    LexiconError::Malformed {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_connotation(file: &str, text: &str) -> Result<HashMap<String, Polarity>, LexiconError> {
    let mut out = HashMap::new();
    for (line, raw) in content_lines(text) {
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 2 {
            return Err(malformed(file, line, "expected `lemma<TAB>polarity`"));
        }
        let lemma = fields[0].trim().to_lowercase();
        let polarity = match fields[1].trim() {
            "positive" => Polarity::Positive,
            "negative" => Polarity::Negative,
            "neutral" => Polarity::Neutral,
            other => return Err(malformed(file, line, format!("unknown polarity {other:?}"))),
        };
        if lemma.is_empty() {
            return Err(malformed(file, line, "empty lemma"));
        }
        if out.insert(lemma.clone(), polarity).is_some() {
            return Err(LexiconError::Duplicate {
                file: file.to_string(),
                line,
                key: lemma,
            });
        }
    }
    Ok(out)
}

fn parse_relations(
    file: &str,
    text: &str,
) -> Result<HashMap<(String, Pos), BTreeSet<String>>, LexiconError> {
    let mut out = HashMap::new();
    for (line, raw) in content_lines(text) {
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(malformed(
                file,
                line,
                "expected `lemma<TAB>pos<TAB>comma-list`",
            ));
        }
        let lemma = fields[0].trim().to_lowercase();
        let pos = Pos::parse(fields[1].trim())
            .ok_or_else(|| malformed(file, line, format!("unknown pos {:?}", fields[1])))?;
        let related: BTreeSet<String> = fields[2]
            .split(',')
            .map(|w| w.trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if lemma.is_empty() || related.is_empty() {
            return Err(malformed(file, line, "empty lemma or related list"));
        }
        let key = (lemma, pos);
        if out.contains_key(&key) {
            return Err(LexiconError::Duplicate {
                file: file.to_string(),
                line,
                key: format!("{}/{}", key.0, key.1),
            });
        }
        out.insert(key, related);
    }
    Ok(out)
}

fn parse_phrases(file: &str, text: &str) -> Result<Vec<String>, LexiconError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, raw) in content_lines(text) {
        let phrase = raw
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase();
        if !seen.insert(phrase.clone()) {
            return Err(LexiconError::Duplicate {
                file: file.to_string(),
                line,
                key: phrase,
            });
        }
        out.push(phrase);
    }
    Ok(out)
}

fn parse_past_tense(file: &str, text: &str) -> Result<HashMap<String, String>, LexiconError> {
    let mut out = HashMap::new();
    for (line, raw) in content_lines(text) {
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 2 || fields[0].trim().is_empty() || fields[1].trim().is_empty() {
            return Err(malformed(file, line, "expected `verb<TAB>past`"));
        }
        let base = fields[0].trim().to_lowercase();
        if out
            .insert(base.clone(), fields[1].trim().to_lowercase())
            .is_some()
        {
            return Err(LexiconError::Duplicate {
                file: file.to_string(),
                line,
                key: base,
            });
        }
    }
    Ok(out)
}
