//! Deterministic rule-based annotator for the closed synthetic vocabulary.
//!
//! Produces tokens, coarse POS tags and a shallow dependency analysis good
//! enough for feature extraction: subjects, objects, passive subjects,
//! adjectival modifiers and copular predicates, clausal complements,
//! negation, prepositional attachments and clause coordination.
//! Text outside the vocabulary is rejected.

use std::collections::HashMap;

use thiserror::Error;

use crate::corpus::{AnnotatedSentence, Arc, Pos, Relation, Token};

const BUILTIN_GRAMMAR: &str = include_str!("../resources/grammar.tsv");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnnotateError {
    #[error("token {0:?} is outside the annotator vocabulary")]
    UnknownToken(String),
    #[error("grammar line {line}: {message}")]
    Grammar { line: usize, message: String },
    #[error("empty sentence")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordClass {
    Name,
    Pronoun,
    Possessive,
    PossessiveOrPronoun,
    Determiner,
    Number,
    Noun,
    Verb,
    VerbPast,
    Adjective,
    Adverb,
    Cue,
    Conjunction,
    And,
    Auxiliary,
    Be,
    Negation,
    To,
    Preposition,
    Punctuation,
}

impl WordClass {
    fn parse(s: &str) -> Option<WordClass> {
        use WordClass::*;
        Some(match s {
            "name" => Name,
            "pron" => Pronoun,
            "poss" => Possessive,
            "poss-or-pron" => PossessiveOrPronoun,
            "det" => Determiner,
            "num" => Number,
            "noun" => Noun,
            "verb" => Verb,
            "verb-past" => VerbPast,
            "adj" => Adjective,
            "adv" => Adverb,
            "cue" => Cue,
            "conj" => Conjunction,
            "and" => And,
            "aux" => Auxiliary,
            "be" => Be,
            "neg" => Negation,
            "to" => To,
            "prep" => Preposition,
            "punct" => Punctuation,
            _ => return None,
        })
    }

    pub fn pos(self) -> Pos {
        use WordClass::*;
        match self {
            Name | Noun => Pos::Noun,
            Pronoun | Possessive | PossessiveOrPronoun => Pos::Pron,
            Verb | VerbPast => Pos::Verb,
            Adjective => Pos::Adj,
            Adverb | Cue | Negation => Pos::Adv,
            _ => Pos::Other,
        }
    }

    fn is_nominal(self) -> bool {
        matches!(self, WordClass::Name | WordClass::Noun | WordClass::Pronoun)
    }

    fn starts_np(self) -> bool {
        use WordClass::*;
        matches!(
            self,
            Determiner | Number | Possessive | Name | Pronoun | Noun | Adjective
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarEntry {
    pub lemma: String,
    pub class: WordClass,
}

/// Closed vocabulary with word classes; the attachment rules are fixed in
/// code and keyed on these classes.
#[derive(Debug, Clone)]
pub struct RuleGrammar {
    entries: HashMap<String, GrammarEntry>,
}

impl RuleGrammar {
    pub fn builtin() -> RuleGrammar {
        RuleGrammar::parse(BUILTIN_GRAMMAR).expect("builtin grammar is well formed")
    }

    /// Parses `surface<TAB>lemma<TAB>class` lines.
    pub fn parse(text: &str) -> Result<RuleGrammar, AnnotateError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |message: &str| AnnotateError::Grammar {
                line: line_no,
                message: message.to_string(),
            };
            if fields.len() != 3 {
                return Err(err("expected three tab-separated fields"));
            }
            let class = WordClass::parse(fields[2]).ok_or_else(|| err("unknown word class"))?;
            let key = fields[0].to_lowercase();
            if entries.contains_key(&key) {
                return Err(err("duplicate surface form"));
            }
            entries.insert(
                key,
                GrammarEntry {
                    lemma: fields[1].to_string(),
                    class,
                },
            );
        }
        Ok(RuleGrammar { entries })
    }

    pub fn lookup(&self, surface: &str) -> Option<&GrammarEntry> {
        self.entries.get(&surface.to_lowercase())
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.lookup(surface).is_some()
    }
}

/// Annotates whitespace-tokenized text. Pure and deterministic.
pub fn annotate(text: &str, grammar: &RuleGrammar) -> Result<AnnotatedSentence, AnnotateError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return Err(AnnotateError::Empty);
    }
    let mut tokens = Vec::with_capacity(words.len());
    let mut classes = Vec::with_capacity(words.len());
    for (index, word) in words.iter().enumerate() {
        let entry = grammar
            .lookup(word)
            .ok_or_else(|| AnnotateError::UnknownToken(word.to_string()))?;
        classes.push(entry.class);
        tokens.push(Token {
            surface: word.to_string(),
            lemma: entry.lemma.clone(),
            pos: entry.class.pos(),
            index,
            negated: false,
        });
    }
    disambiguate(&mut classes);
    for (tok, class) in tokens.iter_mut().zip(&classes) {
        tok.pos = class.pos();
    }

    let mut parser = Parser {
        classes: &classes,
        arcs: Vec::new(),
        negated: vec![false; tokens.len()],
    };
    let mut roots = Vec::new();
    for (start, end) in clause_bounds(&classes) {
        roots.push(parser.clause(start, end));
    }
    let first = roots[0];
    for &r in &roots[1..] {
        parser.arc(first, r, Relation::Conjunct);
    }
    for (tok, neg) in tokens.iter_mut().zip(&parser.negated) {
        tok.negated = *neg;
    }
    Ok(AnnotatedSentence {
        text: words.join(" "),
        tokens,
        arcs: parser.arcs,
    })
}

fn disambiguate(classes: &mut [WordClass]) {
    use WordClass::*;
    for i in 0..classes.len() {
        let next = classes.get(i + 1).copied();
        match classes[i] {
            PossessiveOrPronoun => {
                classes[i] = match next {
                    Some(Noun | Adjective | Number) => Possessive,
                    _ => Pronoun,
                }
            }
            To if !matches!(next, Some(Verb | VerbPast | Be | Negation | Adverb)) => {
                classes[i] = Preposition;
            }
            _ => {}
        }
    }
}

/// Splits at clause-level conjunctions that follow earlier material.
fn clause_bounds(classes: &[WordClass]) -> Vec<(usize, usize)> {
    let mut bounds = Vec::new();
    let mut start = 0;
    let mut seen_content = false;
    for (i, class) in classes.iter().enumerate() {
        match class {
            WordClass::Conjunction if seen_content => {
                bounds.push((start, i));
                start = i;
                seen_content = false;
            }
            WordClass::Conjunction | WordClass::Cue | WordClass::Punctuation => {}
            _ => seen_content = true,
        }
    }
    bounds.push((start, classes.len()));
    bounds
}

struct NounPhrase {
    head: usize,
    end: usize,
    /// Head is a bare adjective with no nominal.
    adjectival: bool,
}

struct Parser<'a> {
    classes: &'a [WordClass],
    arcs: Vec<Arc>,
    negated: Vec<bool>,
}

impl<'a> Parser<'a> {
    fn arc(&mut self, head: usize, dep: usize, rel: Relation) {
        if rel == Relation::Negation {
            self.negated[head] = true;
        }
        self.arcs.push(Arc { head, dep, rel });
    }

    fn class(&self, i: usize) -> WordClass {
        self.classes[i]
    }

    fn noun_phrase(&mut self, start: usize, end: usize) -> NounPhrase {
        use WordClass::*;
        let mut j = start;
        let mut mods = Vec::new();
        while j < end && matches!(self.class(j), Determiner | Number | Possessive | Adjective) {
            mods.push(j);
            j += 1;
        }
        let mut nouns = Vec::new();
        while j < end && self.class(j).is_nominal() {
            let c = self.class(j);
            if let Some(&prev) = nouns.last() {
                let pc = self.class(prev);
                if c == Pronoun || pc == Pronoun || (c == Name) != (pc == Name) {
                    break;
                }
            }
            nouns.push(j);
            j += 1;
        }
        let (head, adjectival) = match nouns.last() {
            Some(&h) => (h, false),
            None => {
                let adj = mods
                    .iter()
                    .rev()
                    .copied()
                    .find(|&m| self.class(m) == Adjective)
                    .unwrap_or(start);
                (adj, true)
            }
        };
        for &m in &mods {
            if m == head {
                continue;
            }
            let rel = match self.class(m) {
                Determiner => Relation::Determiner,
                Possessive => Relation::Possessive,
                Adjective => Relation::AdjectivalModifier,
                _ => Relation::Dependent,
            };
            self.arc(head, m, rel);
        }
        for &n in &nouns[..nouns.len().saturating_sub(1)] {
            self.arc(head, n, Relation::Dependent);
        }
        let mut np = NounPhrase {
            head,
            end: j.max(start + 1),
            adjectival,
        };
        if !adjectival
            && np.end + 1 < end
            && self.class(np.end) == And
            && self.class(np.end + 1).starts_np()
            && self.class(np.end + 1) != Adjective
        {
            let and = np.end;
            let other = self.noun_phrase(and + 1, end);
            self.arc(head, other.head, Relation::Conjunct);
            self.arc(other.head, and, Relation::Coordination);
            np.end = other.end;
        }
        np
    }

    /// Attaches pre-verbal auxiliaries, copulas, negation and adverbs to `head`.
    fn attach_pending(
        &mut self,
        head: usize,
        pending: &mut Vec<usize>,
        passive: bool,
        copular: bool,
    ) {
        for p in pending.drain(..) {
            let rel = match self.class(p) {
                WordClass::Be if copular => Relation::Copula,
                WordClass::Be if passive => Relation::PassiveAuxiliary,
                WordClass::Be | WordClass::Auxiliary => Relation::Auxiliary,
                WordClass::Negation => Relation::Negation,
                _ => Relation::AdverbialModifier,
            };
            self.arc(head, p, rel);
        }
    }

    fn clause(&mut self, start: usize, end: usize) -> usize {
        use WordClass::*;
        let mut i = start;
        let mut leading = Vec::new();
        while i < end && matches!(self.class(i), Cue | Conjunction | Punctuation) {
            leading.push(i);
            i += 1;
        }
        let mut pre_nominals: Vec<usize> = Vec::new();
        let mut pre_preps: Vec<usize> = Vec::new();
        let mut pending: Vec<usize> = Vec::new();
        let mut puncts: Vec<usize> = Vec::new();
        let mut root: Option<usize> = None;
        let mut current: Option<usize> = None;
        let mut has_object = false;
        let mut to_marker: Option<usize> = None;
        let mut prep: Option<usize> = None;
        let mut and_marker: Option<usize> = None;

        while i < end {
            let class = self.class(i);
            if class.starts_np() {
                let np = self.noun_phrase(i, end);
                let has_be = pending.iter().any(|&p| self.class(p) == Be);
                if let Some(p) = prep.take() {
                    self.arc(p, np.head, Relation::PrepositionalObject);
                } else if let (Some(t), Some(cur), true) = (to_marker, current, has_be) {
                    self.arc(cur, np.head, Relation::ClausalComplement);
                    self.arc(np.head, t, Relation::Marker);
                    self.attach_pending(np.head, &mut pending, false, true);
                    to_marker = None;
                    current = Some(np.head);
                    has_object = true;
                } else if root.is_none() && has_be && !pre_nominals.is_empty() {
                    let subject = *pre_nominals.last().unwrap();
                    self.arc(np.head, subject, Relation::Subject);
                    for &other in &pre_nominals[..pre_nominals.len() - 1] {
                        self.arc(np.head, other, Relation::Dependent);
                    }
                    self.attach_pending(np.head, &mut pending, false, true);
                    root = Some(np.head);
                    current = Some(np.head);
                    has_object = true;
                } else if root.is_none() {
                    pre_nominals.push(np.head);
                } else if let Some(cur) = current {
                    if !has_object && !np.adjectival {
                        self.arc(cur, np.head, Relation::Object);
                        has_object = true;
                    } else {
                        self.arc(cur, np.head, Relation::Dependent);
                    }
                }
                i = np.end;
                continue;
            }
            match class {
                Verb | VerbPast => {
                    let passive = class == VerbPast && pending.iter().any(|&p| self.class(p) == Be);
                    if root.is_none() {
                        if let Some(&subject) = pre_nominals.last() {
                            let rel = if passive {
                                Relation::PassiveSubject
                            } else {
                                Relation::Subject
                            };
                            self.arc(i, subject, rel);
                            for &other in &pre_nominals[..pre_nominals.len() - 1] {
                                self.arc(i, other, Relation::Dependent);
                            }
                        }
                        root = Some(i);
                    } else if let (Some(t), Some(cur)) = (to_marker.take(), current) {
                        self.arc(cur, i, Relation::ClausalComplement);
                        self.arc(i, t, Relation::Marker);
                    } else if let Some(cur) = current {
                        let rel = if and_marker.is_some() {
                            Relation::Conjunct
                        } else {
                            Relation::Dependent
                        };
                        self.arc(cur, i, rel);
                    }
                    if let Some(a) = and_marker.take() {
                        self.arc(i, a, Relation::Coordination);
                    }
                    self.attach_pending(i, &mut pending, passive, false);
                    current = Some(i);
                    has_object = false;
                }
                Adverb | Cue => {
                    let next_is_verbal = i + 1 < end
                        && matches!(
                            self.class(i + 1),
                            Verb | VerbPast | Be | Auxiliary | Negation
                        );
                    match current {
                        Some(cur) if !next_is_verbal => {
                            self.arc(cur, i, Relation::AdverbialModifier)
                        }
                        _ => pending.push(i),
                    }
                }
                Auxiliary | Be | Negation => pending.push(i),
                To => to_marker = Some(i),
                Preposition => {
                    match current {
                        Some(cur) => self.arc(cur, i, Relation::Preposition),
                        None => pre_preps.push(i),
                    }
                    prep = Some(i);
                }
                And => and_marker = Some(i),
                Punctuation => puncts.push(i),
                Conjunction => leading.push(i),
                _ => {}
            }
            i += 1;
        }

        let root = root
            .or_else(|| pre_nominals.last().copied())
            .unwrap_or(start);
        if current.is_none() {
            for &other in pre_nominals.iter().filter(|&&n| n != root) {
                self.arc(root, other, Relation::Dependent);
            }
        }
        for p in pre_preps {
            if p != root {
                self.arc(root, p, Relation::Preposition);
            }
        }
        for p in std::mem::take(&mut pending) {
            if p != root {
                self.arc(root, p, Relation::Dependent);
            }
        }
        for t in to_marker.into_iter().chain(and_marker) {
            if t != root {
                self.arc(root, t, Relation::Dependent);
            }
        }
        for c in leading {
            if c == root {
                continue;
            }
            let rel = match self.class(c) {
                Conjunction => Relation::Coordination,
                Punctuation => Relation::Punctuation,
                _ => Relation::AdverbialModifier,
            };
            self.arc(root, c, rel);
        }
        for p in puncts {
            if p != root {
                self.arc(root, p, Relation::Punctuation);
            }
        }
        root
    }
}
