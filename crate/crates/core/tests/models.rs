mod common;

use desire_core::corpus::Lexicons;
use desire_core::eval::{cross_validate, select_h, train_once, Dataset, ModelSpec, TrainedModel};
use desire_core::lsnm::LsnmHyper;
use desire_core::synth::{generate, LabelRule, SynthConfig};
use desire_core::unstructured::{LinearHyper, UnstructuredKind};

fn corpus(rule: LabelRule, parts: &[(usize, u64)]) -> Dataset {
    let instances = parts
        .iter()
        .flat_map(|&(n, seed)| generate(&SynthConfig::new(n, rule, seed)).unwrap())
        .collect();
    Dataset::new(instances, &Lexicons::builtin(), 0.75).unwrap()
}

fn lsnm(states: usize) -> ModelSpec {
    ModelSpec::Lsnm {
        states,
        hyper: LsnmHyper::default(),
        restarts: 1,
    }
}

#[test]
fn focal_rule_is_linearly_learnable() {
    let data = corpus(LabelRule::FocalPresence, &[(300, 21), (100, 22)]);
    let train: Vec<usize> = (0..300).collect();
    let test: Vec<usize> = (300..400).collect();
    let spec = ModelSpec::Linear {
        model: UnstructuredKind::FeatLr,
        hyper: LinearHyper::default(),
    };
    let report = train_once(&spec, &data, &train, 1)
        .unwrap()
        .evaluate(&data, &test)
        .unwrap();
    assert!(report.f1 >= 95.0, "feat-lr f1 {}", report.f1);
}

#[test]
fn cross_validation_picks_two_states_for_parity() {
    let data = corpus(LabelRule::LastStateParity, &[(240, 41)]);
    let (best, scores) = select_h(&data, &[1, 2, 3], LsnmHyper::default(), 3, 3, 5).unwrap();
    assert_eq!(best, 2, "{scores:?}");
    assert!(scores[1].1 > scores[0].1 + 20.0, "{scores:?}");
}

#[test]
fn leave_one_out_runs_for_te() {
    let data = corpus(LabelRule::FocalPresence, &[(12, 3)]);
    let report = cross_validate(&data, &ModelSpec::Te, 12, 0).unwrap();
    assert_eq!(report.total(), 12);
    assert_eq!(report.per_fold.unwrap().len(), 12);
}

/// Pairs of instances differing only in a dissenting cue on one evidence.
fn reversal_pairs() -> Vec<(
    desire_core::corpus::DesireInstance,
    desire_core::corpus::DesireInstance,
)> {
    let stories = [
        (
            "Tom wanted to win the race .",
            ["He played a game .", "He went home .", "He was tired ."],
        ),
        (
            "Anna hoped to bake a cake .",
            [
                "She read a book .",
                "She watched the rain .",
                "She was glad .",
            ],
        ),
        (
            "Ben wished to fix his bike .",
            ["He ate lunch .", "He helped his friend .", "He went home ."],
        ),
        (
            "Lucy wanted to climb the hill .",
            [
                "She walked to the park .",
                "She waited for her friend .",
                "She read a book .",
            ],
        ),
    ];
    let mut pairs = Vec::new();
    for (desire, evs) in stories {
        for j in 1..evs.len() {
            let cued: Vec<String> = evs
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    if i == j {
                        format!("However , {}{}", e[..1].to_lowercase(), &e[1..])
                    } else {
                        e.to_string()
                    }
                })
                .collect();
            let plain_chain: Vec<(usize, usize)> = (1..=evs.len()).map(|s| (s, 0)).collect();
            let cued_chain: Vec<(usize, usize)> = (1..=evs.len())
                .map(|s| (s, if s == j + 1 { 2 } else { 0 }))
                .collect();
            let cued_refs: Vec<&str> = cued.iter().map(String::as_str).collect();
            pairs.push((
                common::instance("a", desire, &evs, &plain_chain),
                common::instance("b", desire, &cued_refs, &cued_chain),
            ));
        }
    }
    pairs
}

#[test]
fn one_dissenting_cue_flips_the_two_state_model() {
    let data = corpus(LabelRule::LastStateParity, &[(500, 61)]);
    let lex = Lexicons::builtin();
    let model = train_once(&lsnm(2), &data, &data.all(), 2).unwrap();
    let TrainedModel::Lsnm(model) = model else {
        unreachable!()
    };
    let prepare = |inst| {
        desire_core::features::prepare(inst, &lex, 0.75)
            .unwrap()
            .features
    };
    let pairs = reversal_pairs();
    let flipped = pairs
        .iter()
        .filter(|(a, b)| {
            model.predict(&prepare(a)).unwrap().f_hat != model.predict(&prepare(b)).unwrap().f_hat
        })
        .count();
    assert!(
        flipped * 10 >= pairs.len() * 9,
        "{flipped} of {}",
        pairs.len()
    );
}

#[test]
fn one_state_model_is_blind_to_cue_order() {
    let data = corpus(LabelRule::LastStateParity, &[(300, 62)]);
    let lex = Lexicons::builtin();
    let TrainedModel::Lsnm(model) = train_once(&lsnm(1), &data, &data.all(), 2).unwrap() else {
        unreachable!()
    };
    let prepare = |inst| {
        desire_core::features::prepare(inst, &lex, 0.75)
            .unwrap()
            .features
    };
    let (a, _) = &reversal_pairs()[0];
    let mut reversed = a.clone();
    reversed.evidences.reverse();
    reversed.coref_chains.clear();
    let mut plain = a.clone();
    plain.coref_chains.clear();
    assert_eq!(
        model.predict(&prepare(&plain)).unwrap().f_hat,
        model.predict(&prepare(&reversed)).unwrap().f_hat
    );
}
