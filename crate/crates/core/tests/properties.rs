mod common;

use desire_core::corpus::{load_corpus, write_corpus, Lexicons};
use desire_core::eval::{f1_from_pr, median, score, stratified_folds, EvalReport};
use desire_core::lsnm::{
    joint_features, train_lsnm, ChainFeatures, Layout, LsnmHyper, LsnmKey, LsnmModel, Scorer,
};
use desire_core::synth::{generate, LabelRule, SynthConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn chain(seed: u64, h: usize, n: usize) -> (Layout, Vec<f64>, ChainFeatures) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = Layout::new(h).unwrap();
    let w = common::random_weights(&mut rng, layout);
    let x = ChainFeatures::new(&common::random_features(&mut rng, n)).unwrap();
    (layout, w, x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constrained_never_beats_unconstrained(seed in any::<u64>(), h in 1usize..4, n in 1usize..6) {
        let (layout, w, x) = chain(seed, h, n);
        let s = Scorer { layout, weights: &w };
        let free = s.viterbi(&x, None).unwrap();
        let neg = s.viterbi(&x, Some(false)).unwrap();
        let pos = s.viterbi(&x, Some(true)).unwrap();
        prop_assert!(neg.score <= free.score && pos.score <= free.score);
        prop_assert_eq!(free.score, neg.score.max(pos.score));
        prop_assert_eq!(s.structure(&x, free.f_hat, &free.states).unwrap(), free.score);
    }

    #[test]
    fn raising_true_outputs_keeps_true_predictions(seed in any::<u64>(), h in 1usize..4, n in 1usize..5, delta in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = Layout::new(h).unwrap();
        let feats = common::random_features(&mut rng, n);
        let mut model = LsnmModel::zeros(h).unwrap();
        let w = common::random_weights(&mut rng, layout);
        for (k, v) in layout.keys().into_iter().zip(w) {
            model.set_weight(&k, v).unwrap();
        }
        let before = model.predict(&feats).unwrap();
        for s in 0..h {
            let k = LsnmKey::OutputState(true, s);
            model.set_weight(&k, model.weight(&k) + delta).unwrap();
        }
        let after = model.predict(&feats).unwrap();
        if before.f_hat {
            prop_assert!(after.f_hat);
        }
        prop_assert!(after.score >= before.score);
    }

    #[test]
    fn sparse_and_dense_scores_agree(seed in any::<u64>(), h in 1usize..4, n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = Layout::new(h).unwrap();
        let feats = common::random_features(&mut rng, n);
        let w = common::random_weights(&mut rng, layout);
        let x = ChainFeatures::new(&feats).unwrap();
        let d = Scorer { layout, weights: &w }.viterbi(&x, None).unwrap();
        let phi = joint_features(&feats, &d.states, d.f_hat).unwrap();
        let dot = phi.dot_with(|k| w[layout.index(k).unwrap()]);
        prop_assert!((dot - d.score).abs() < 1e-9);
    }

    #[test]
    fn score_is_permutation_invariant(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let (gold, pred): (Vec<bool>, Vec<bool>) = pairs.iter().copied().unzip();
        let a = score(&gold, &pred).unwrap();
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (gold, pred): (Vec<bool>, Vec<bool>) = shuffled.into_iter().unzip();
        prop_assert_eq!(a, score(&gold, &pred).unwrap());
    }

    #[test]
    fn f1_lies_between_precision_and_recall(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50, tn in 0usize..50) {
        let r = EvalReport::from_counts(tp, fp, fn_, tn);
        if tp > 0 {
            prop_assert!(r.f1 >= r.precision.min(r.recall) - 1e-9);
            prop_assert!(r.f1 <= r.precision.max(r.recall) + 1e-9);
            prop_assert!((r.f1 - f1_from_pr(r.precision, r.recall)).abs() < 1e-9);
        } else {
            prop_assert_eq!(r.f1, 0.0);
        }
        prop_assert!((0.0..=100.0).contains(&r.f1));
    }

    #[test]
    fn median_ignores_order(mut values in prop::collection::vec(-100.0f64..100.0, 1..30), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let m = median(&values).unwrap();
        values.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(m, median(&values).unwrap());
        let below = values.iter().filter(|&&v| v < m).count();
        prop_assert!(below <= (values.len() - 1) / 2);
    }

    #[test]
    fn folds_are_stratified(labels in prop::collection::vec(any::<bool>(), 10..80), k in 2usize..6, seed in any::<u64>()) {
        let folds = stratified_folds(&labels, k, seed).unwrap();
        prop_assert_eq!(folds.len(), labels.len());
        for class in [false, true] {
            let counts: Vec<usize> = (0..k)
                .map(|f| (0..labels.len()).filter(|&i| folds[i] == f && labels[i] == class).count())
                .collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn training_is_deterministic(data_seed in 0u64..1000, seed in any::<u64>()) {
        let corpus = generate(&SynthConfig::new(30, LabelRule::Mixed, data_seed)).unwrap();
        let lex = Lexicons::builtin();
        let examples: Vec<_> = corpus
            .iter()
            .map(|inst| {
                let p = desire_core::features::prepare(inst, &lex, 0.75).unwrap();
                (p.features, inst.label.unwrap())
            })
            .collect();
        prop_assume!(examples.iter().any(|e| e.1) && examples.iter().any(|e| !e.1));
        let hyper = LsnmHyper { epochs: 3, averaging: true };
        let a = train_lsnm(&examples, 2, hyper, seed).unwrap();
        let b = train_lsnm(&examples, 2, hyper, seed).unwrap();
        prop_assert_eq!(a.to_file(), b.to_file());
    }

    #[test]
    fn synthetic_corpora_round_trip(seed in any::<u64>(), count in 1usize..15) {
        let corpus = generate(&SynthConfig::new(count, LabelRule::LastStateParity, seed)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        write_corpus(&path, &corpus).unwrap();
        prop_assert_eq!(load_corpus(&path).unwrap(), corpus);
    }
}
