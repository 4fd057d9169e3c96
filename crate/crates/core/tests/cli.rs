use std::path::Path;

use desire_core::cli::{self, ModelFile, StoredModel};

fn run(args: &[&str]) -> (i32, String, String) {
    let argv = std::iter::once("desire")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, name: &str, count: &str, rule: &str, seed: &str) -> String {
    let path = dir.join(name);
    let (code, _, err) = run(&[
        "gen-synth",
        "--out",
        s(&path),
        "--count",
        count,
        "--rule",
        rule,
        "--seed",
        seed,
    ]);
    assert_eq!(code, 0, "{err}");
    path.to_string_lossy().into_owned()
}

#[test]
fn unknown_flag_is_usage_error() {
    let (code, _, err) = run(&["eval", "--bogus"]);
    assert_eq!(code, 1);
    assert!(err.contains("--bogus"));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(run(&["serve"]).0, 1);
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("gen-synth"));
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn missing_seed_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "c.json", "20", "focal-presence", "1");
    let out = dir.path().join("m.json");
    for kind in ["lsnm", "feat-lr", "feat-perceptron", "te"] {
        let (code, _, err) = run(&[
            "train",
            "--corpus",
            &corpus,
            "--model-kind",
            kind,
            "--out",
            s(&out),
        ]);
        assert_eq!(code, 1, "{kind}: {err}");
        assert!(err.contains("--seed"));
    }
    assert_eq!(run(&["gen-synth", "--out", s(&out)]).0, 1);
}

#[test]
fn missing_corpus_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&[
        "train",
        "--corpus",
        s(&dir.path().join("absent.json")),
        "--model-kind",
        "feat-lr",
        "--seed",
        "1",
        "--out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn malformed_corpus_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[{\"id\": 3}]").unwrap();
    let (code, _, _) = run(&["dump-features", "--corpus", s(&bad)]);
    assert_eq!(code, 2);
}

#[test]
fn invalid_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "c.json", "20", "focal-presence", "1");
    let out = dir.path().join("m.json");
    let base = [
        "train",
        "--corpus",
        &corpus,
        "--out",
        s(&out),
        "--seed",
        "1",
    ];
    let with = |extra: &[&str]| {
        let mut a = base.to_vec();
        a.extend_from_slice(extra);
        run(&a).0
    };
    assert_eq!(with(&["--model-kind", "lsnm", "--h", "0"]), 1);
    assert_eq!(with(&["--model-kind", "feat-lr", "--restarts", "3"]), 1);
    assert_eq!(with(&["--model-kind", "lsnm", "--te-threshold", "0"]), 1);
    assert_eq!(
        with(&[
            "--model-kind",
            "lsnm",
            "--dev-fraction",
            "1.5",
            "--restarts",
            "2"
        ]),
        1
    );
    assert_eq!(
        with(&["--model-kind", "bow-lr", "--learning-rate", "-1"]),
        1
    );
    assert_eq!(
        run(&["gen-synth", "--out", s(&out), "--seed", "1", "--count", "0"]).0,
        1
    );
    assert_eq!(
        run(&[
            "cv",
            "--corpus",
            &corpus,
            "--model-kind",
            "te",
            "--seed",
            "1",
            "--folds",
            "1"
        ])
        .0,
        1
    );
}

#[test]
fn train_predict_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let train = synth(dir.path(), "train.json", "120", "focal-presence", "1");
    let test = synth(dir.path(), "test.json", "40", "focal-presence", "2");
    for kind in ["te", "bow-lr", "feat-lr", "feat-perceptron", "lsnm"] {
        let model = dir.path().join(format!("{kind}.json"));
        let (code, _, err) = run(&[
            "train",
            "--corpus",
            &train,
            "--model-kind",
            kind,
            "--seed",
            "4",
            "--out",
            s(&model),
        ]);
        assert_eq!(code, 0, "{kind}: {err}");
        let preds = dir.path().join(format!("{kind}.tsv"));
        let (code, _, err) = run(&[
            "predict",
            "--model",
            s(&model),
            "--corpus",
            &test,
            "--out",
            s(&preds),
        ]);
        assert_eq!(code, 0, "{err}");
        let tsv = std::fs::read_to_string(&preds).unwrap();
        assert_eq!(tsv.lines().count(), 41);
        assert!(tsv.starts_with("id\tgold\tpred\tstates\tscore\n"));
        let (code, out, err) = run(&["eval", "--model", s(&model), "--corpus", &test]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("precision"));
    }
}

#[test]
fn restarts_keep_the_median_model() {
    let dir = tempfile::tempdir().unwrap();
    let train = synth(dir.path(), "train.json", "150", "last-state-parity", "3");
    let model = dir.path().join("m.json");
    let report = dir.path().join("r.json");
    let (code, out, err) = run(&[
        "train",
        "--corpus",
        &train,
        "--model-kind",
        "lsnm",
        "--h",
        "2",
        "--restarts",
        "5",
        "--seed",
        "7",
        "--out",
        s(&model),
        "--report-json",
        s(&report),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("restarts=5"));
    let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    let StoredModel::Lsnm(lsnm) = &file.model else {
        panic!("expected an lsnm model")
    };
    assert!((7..12).contains(&lsnm.seed));
    let dev = file.dev_report.unwrap();
    let per_restart = dev.per_restart.clone().unwrap();
    assert_eq!(per_restart.len(), 5);
    let mut sorted = per_restart.clone();
    sorted.sort_by(f64::total_cmp);
    assert_eq!(dev.f1, sorted[2]);
    assert_eq!(per_restart[(lsnm.seed - 7) as usize], dev.f1);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["report"]["f1"].as_f64().unwrap(), dev.f1);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.cfg");
    std::fs::write(&cfg, "# synthetic corpus\ncount = 7\nseed=3\nrule=mixed\n").unwrap();
    let a = dir.path().join("a.json");
    let (code, out, err) = run(&["gen-synth", "--config", s(&cfg), "--out", s(&a)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("wrote 7 instances"));
    let b = dir.path().join("b.json");
    let (code, out, _) = run(&[
        "gen-synth",
        "--config",
        s(&cfg),
        "--out",
        s(&b),
        "--count",
        "4",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("wrote 4 instances"));

    std::fs::write(&cfg, "no-averaging=true\nrestarts=2\n").unwrap();
    let m = dir.path().join("m.json");
    let (code, _, err) = run(&[
        "train",
        "--corpus",
        s(&a),
        "--model-kind",
        "lsnm",
        "--seed",
        "1",
        "--out",
        s(&m),
        "--config",
        s(&cfg),
    ]);
    assert_eq!(code, 0, "{err}");
    let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
    let StoredModel::Lsnm(lsnm) = file.model else {
        panic!("expected an lsnm model")
    };
    assert!(!lsnm.hyper.averaging);
    assert!(file.dev_report.is_some());

    std::fs::write(&cfg, "colour=blue\n").unwrap();
    assert_eq!(
        run(&[
            "gen-synth",
            "--config",
            s(&cfg),
            "--out",
            s(&b),
            "--seed",
            "1"
        ])
        .0,
        1
    );
    std::fs::write(&cfg, "no-averaging=maybe\n").unwrap();
    assert_eq!(
        run(&[
            "train",
            "--config",
            s(&cfg),
            "--corpus",
            s(&a),
            "--model-kind",
            "lsnm",
            "--seed",
            "1",
            "--out",
            s(&m)
        ])
        .0,
        1
    );
}

#[test]
fn identical_flags_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "c.json", "80", "mixed", "9");
    let again = synth(dir.path(), "c2.json", "80", "mixed", "9");
    assert_eq!(
        std::fs::read(&corpus).unwrap(),
        std::fs::read(&again).unwrap()
    );
    let mut reports = Vec::new();
    for run_id in 0..2 {
        let report = dir.path().join(format!("cv{run_id}.json"));
        let (code, out, err) = run(&[
            "cv",
            "--corpus",
            &corpus,
            "--model-kind",
            "lsnm",
            "--seed",
            "2",
            "--folds",
            "4",
            "--h-candidates",
            "1,2",
            "--restarts",
            "2",
            "--report-json",
            s(&report),
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("chosen H="));
        reports.push(std::fs::read(&report).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn dump_features_matches_golden_file() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let (code, out, err) = run(&[
        "dump-features",
        "--corpus",
        s(&data.join("golden_corpus.json")),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(
        out,
        std::fs::read_to_string(data.join("golden_features.tsv")).unwrap()
    );
}
