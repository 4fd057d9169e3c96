//! Synthetic corpus generator. Every sentence is produced from a small set
//! of templates and annotated with the rule-based annotator, so generated
//! corpora go through exactly the same pipeline as hand-built ones.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotator::{annotate, AnnotateError, RuleGrammar};
use crate::corpus::{DesireInstance, MentionSpan, MAX_EVIDENCES};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
    #[error("template sentence failed to annotate: {0}")]
    Annotate(#[from] AnnotateError),
}

/// How gold labels are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelRule {
    /// Fulfilled exactly when an odd number of evidences open with a
    /// dissenting cue. The first evidence never carries a cue.
    LastStateParity,
    /// Fulfilled exactly when some evidence states the desired action in the
    /// past tense.
    FocalPresence,
    /// Focal presence, flipped by every dissenting cue.
    Mixed,
}

impl LabelRule {
    pub fn parse(s: &str) -> Option<LabelRule> {
        match s {
            "last-state-parity" => Some(LabelRule::LastStateParity),
            "focal-presence" => Some(LabelRule::FocalPresence),
            "mixed" => Some(LabelRule::Mixed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub count: usize,
    pub min_evidences: usize,
    pub max_evidences: usize,
    /// Chance that an evidence after the first opens with a dissenting cue.
    pub reversal_prob: f64,
    pub seed: u64,
    pub rule: LabelRule,
}

impl SynthConfig {
    pub fn new(count: usize, rule: LabelRule, seed: u64) -> SynthConfig {
        SynthConfig {
            count,
            min_evidences: 1,
            max_evidences: MAX_EVIDENCES,
            reversal_prob: 0.2,
            seed,
            rule,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.to_string()));
        if self.count == 0 {
            return bad("count must be at least 1");
        }
        if self.min_evidences == 0
            || self.min_evidences > self.max_evidences
            || self.max_evidences > MAX_EVIDENCES
        {
            return bad("evidence counts must satisfy 1 <= min <= max <= 5");
        }
        if !(0.0..=1.0).contains(&self.reversal_prob) {
            return bad("reversal probability must lie in [0, 1]");
        }
        Ok(())
    }
}

struct Person {
    name: &'static str,
    pron: &'static str,
    poss: &'static str,
    obj: &'static str,
}

const fn person(name: &'static str, male: bool) -> Person {
    if male {
        Person {
            name,
            pron: "he",
            poss: "his",
            obj: "him",
        }
    } else {
        Person {
            name,
            pron: "she",
            poss: "her",
            obj: "her",
        }
    }
}

const PEOPLE: [Person; 12] = [
    person("Jerry", true),
    person("Tom", true),
    person("Ben", true),
    person("Max", true),
    person("Sam", true),
    person("Leo", true),
    person("Anna", false),
    person("Lucy", false),
    person("Sara", false),
    person("Mia", false),
    person("Emma", false),
    person("Lily", false),
];

/// `(base form, past form, object)`; `{poss}` is the subject's possessive.
const TASKS: [(&str, &str, &str); 10] = [
    ("paint", "painted", "{poss} barn"),
    ("fix", "fixed", "{poss} bike"),
    ("win", "won", "the race"),
    ("bake", "baked", "a cake"),
    ("clean", "cleaned", "{poss} room"),
    ("fly", "flew", "{poss} kite"),
    ("write", "wrote", "a letter"),
    ("climb", "climbed", "the hill"),
    ("build", "built", "a fence"),
    ("plant", "planted", "the flowers"),
];

const DESIRE_VERBS: [&str; 3] = ["wanted", "wished", "hoped"];

const FILLERS: [&str; 14] = [
    "{pron} walked to the park .",
    "{pron} ate lunch .",
    "{pron} watched the rain .",
    "{pron} played a game .",
    "{pron} went home .",
    "{pron} read a book .",
    "{pron} waited for {poss} friend .",
    "{pron} helped {poss} friend .",
    "{pron} lost {poss} book .",
    "{poss} teacher praised {obj} .",
    "{poss} friend ignored {obj} .",
    "{pron} was tired .",
    "{pron} was glad .",
    "the weather was cold .",
];

const DISSENTING: [&str; 5] = ["However", "Instead", "Nevertheless", "Still", "Yet"];
const CONFORMING: [&str; 4] = ["Then", "Finally", "Indeed", "Also"];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn fill(template: &str, person: &Person, pron: &str) -> String {
    template
        .replace("{pron}", pron)
        .replace("{poss}", person.poss)
        .replace("{obj}", person.obj)
        .replace("{name}", person.name)
}

/// Evidence body; the first letter is capitalized unless a cue precedes it.
fn sentence(body: &str, cue: Option<&str>) -> String {
    match cue {
        Some(c) => format!("{c} , {body}"),
        None => capitalize(body),
    }
}

fn instance_text(
    rule: LabelRule,
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> (String, Vec<String>, bool, usize) {
    let person_idx = rng.gen_range(0..PEOPLE.len());
    let person = &PEOPLE[person_idx];
    let (base, past, object) = TASKS[rng.gen_range(0..TASKS.len())];
    let object = fill(object, person, person.pron);
    let verb = DESIRE_VERBS[rng.gen_range(0..DESIRE_VERBS.len())];
    let desire = format!("{} {verb} to {base} {object} .", person.name);
    let n = rng.gen_range(cfg.min_evidences..=cfg.max_evidences);

    let mut bodies: Vec<String> = (0..n)
        .map(|_| fill(FILLERS.choose(rng).expect("nonempty"), person, person.pron))
        .collect();
    let mut label = match rule {
        LabelRule::LastStateParity => false,
        LabelRule::FocalPresence | LabelRule::Mixed => {
            let present = rng.gen_bool(0.5);
            let slot = rng.gen_range(0..n);
            if present {
                bodies[slot] = format!("{} {past} {object} .", person.name);
            } else if rng.gen_bool(0.5) {
                bodies[slot] = format!("{} tried to {base} {object} .", person.pron);
            }
            present
        }
    };

    let mut evidences = Vec::with_capacity(n);
    for (j, body) in bodies.iter().enumerate() {
        let cue = if j == 0 || rule == LabelRule::FocalPresence {
            None
        } else if rng.gen_bool(cfg.reversal_prob) {
            label = !label;
            Some(*DISSENTING.choose(rng).expect("nonempty"))
        } else if rng.gen_bool(0.5) {
            Some(*CONFORMING.choose(rng).expect("nonempty"))
        } else {
            None
        };
        evidences.push(sentence(body, cue));
    }
    (desire, evidences, label, person_idx)
}

fn subject_chain(inst: &DesireInstance, person: &Person) -> Vec<MentionSpan> {
    let name = person.name.to_lowercase();
    let forms = [name.as_str(), person.pron, person.poss, person.obj];
    let mut chain = Vec::new();
    for sid in 0..=inst.evidences.len() {
        let s = inst.sentence(sid).expect("sentence in range");
        for (i, tok) in s.tokens.iter().enumerate() {
            if forms.contains(&tok.surface.to_lowercase().as_str()) {
                chain.push(MentionSpan {
                    sentence: sid,
                    start: i,
                    end: i + 1,
                });
            }
        }
    }
    chain
}

/// Generates `cfg.count` labeled instances with ids `syn-0000`, `syn-0001`, ...
pub fn generate(cfg: &SynthConfig) -> Result<Vec<DesireInstance>, SynthError> {
    cfg.validate()?;
    let grammar = RuleGrammar::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let (desire, evidences, label, person) = instance_text(cfg.rule, cfg, &mut rng);
        let mut inst = DesireInstance {
            id: format!("syn-{i:04}"),
            desire_expression: annotate(&desire, &grammar)?,
            evidences: evidences
                .iter()
                .map(|e| annotate(e, &grammar))
                .collect::<Result<_, _>>()?,
            desire_subject: MentionSpan {
                sentence: 0,
                start: 0,
                end: 1,
            },
            desire_verb_token: 1,
            coref_chains: Vec::new(),
            label: Some(label),
        };
        inst.coref_chains = vec![subject_chain(&inst, &PEOPLE[person])];
        inst.validate().expect("generated instance is well formed");
        out.push(inst);
    }
    Ok(out)
}
