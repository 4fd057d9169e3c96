//! The `desire` command line: corpus generation, training, prediction,
//! evaluation, cross-validation and feature dumps.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a data error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, load_lexicons, write_corpus, DesireInstance, Lexicons};
use crate::entailment::{check_threshold, DEFAULT_THRESHOLD};
use crate::eval::{
    cross_validate, render_table, run_restarts, select_h, stratified_split, train_once, Dataset,
    EvalError, EvalReport, ModelSpec, TrainedModel, DEFAULT_FOLDS,
};
use crate::features::dump_tsv;
use crate::lsnm::{LsnmHyper, LsnmModel, LsnmModelFile};
use crate::synth::{generate, LabelRule, SynthConfig, SynthError};
use crate::unstructured::{LinearHyper, LinearModel, UnstructuredKind};

pub const MODEL_FILE_VERSION: u32 = 1;

const CONFIG_HELP: &str = "Any subcommand also accepts --config FILE: a file of key=value lines, \
one per flag (for example `restarts=20`). Flags given on the command line win over the file.";

#[derive(Debug, Parser)]
#[command(name = "desire", version, about = "Desire fulfillment prediction", after_help = CONFIG_HELP)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Te,
    BowLr,
    FeatLr,
    FeatPerceptron,
    Lsnm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    LastStateParity,
    FocalPresence,
    Mixed,
}

#[derive(Debug, Clone, clap::Args)]
pub struct HyperArgs {
    /// Latent states for lsnm.
    #[arg(long = "h", default_value_t = 2)]
    pub states: usize,
    /// Training restarts (lsnm only); the median restart is kept.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Epochs; defaults to 20 for lsnm and 50 for the flat models.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Keep the final rather than the averaged lsnm weights.
    #[arg(long)]
    pub no_averaging: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it as JSON.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        model_kind: ModelKind,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        hyper: HyperArgs,
        /// Held-out corpus for choosing among restarts.
        #[arg(long)]
        dev_corpus: Option<PathBuf>,
        /// Share of the training corpus held out when no dev corpus is given.
        #[arg(long, default_value_t = 0.2)]
        dev_fraction: f64,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        te_threshold: f64,
        #[arg(long)]
        lexicons: Option<PathBuf>,
        #[arg(long)]
        report_json: Option<PathBuf>,
    },
    /// Write per-instance predictions as TSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Output TSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        lexicons: Option<PathBuf>,
    },
    /// Score a trained model on a labeled corpus.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        lexicons: Option<PathBuf>,
        #[arg(long)]
        report_json: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation.
    Cv {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        model_kind: ModelKind,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FOLDS)]
        folds: usize,
        #[command(flatten)]
        hyper: HyperArgs,
        /// Comma-separated values of H to choose from (lsnm only).
        #[arg(long, value_delimiter = ',')]
        h_candidates: Option<Vec<usize>>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        te_threshold: f64,
        #[arg(long)]
        lexicons: Option<PathBuf>,
        #[arg(long)]
        report_json: Option<PathBuf>,
    },
    /// Generate a synthetic labeled corpus.
    GenSynth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, value_enum, default_value = "last-state-parity")]
        rule: RuleArg,
        #[arg(long, default_value_t = 1)]
        min_evidences: usize,
        #[arg(long, default_value_t = 5)]
        max_evidences: usize,
        #[arg(long, default_value_t = 0.2)]
        reversal_prob: f64,
        #[arg(long)]
        seed: u64,
    },
    /// Write every F1-F17 value as TSV.
    DumpFeatures {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        te_threshold: f64,
        #[arg(long)]
        lexicons: Option<PathBuf>,
    },
}

/// A stored model together with the entailment threshold its features used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub te_threshold: f64,
    pub model: StoredModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev_report: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum StoredModel {
    Te,
    Linear(LinearModel),
    Lsnm(LsnmModelFile),
}

impl StoredModel {
    fn from_trained(model: &TrainedModel) -> StoredModel {
        match model {
            TrainedModel::Te => StoredModel::Te,
            TrainedModel::Linear(m) => StoredModel::Linear(m.clone()),
            TrainedModel::Lsnm(m) => StoredModel::Lsnm(m.to_file()),
        }
    }

    fn to_trained(&self) -> Result<TrainedModel, CliError> {
        Ok(match self {
            StoredModel::Te => TrainedModel::Te,
            StoredModel::Linear(m) => TrainedModel::Linear(m.clone()),
            StoredModel::Lsnm(f) => TrainedModel::Lsnm(
                LsnmModel::from_file(f).map_err(|e| CliError::Data(e.to_string()))?,
            ),
        })
    }

    fn name(&self) -> String {
        match self {
            StoredModel::Te => "te".into(),
            StoredModel::Linear(m) => m.kind.name().into(),
            StoredModel::Lsnm(f) => format!("lsnm(H={})", f.states),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Folds { .. } | EvalError::Restarts | EvalError::NoCandidates => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn lexicons(dir: &Option<PathBuf>) -> Result<Lexicons, CliError> {
    match dir {
        Some(d) => load_lexicons(d).map_err(data_err),
        None => Ok(Lexicons::builtin()),
    }
}

fn threshold(t: f64) -> Result<f64, CliError> {
    check_threshold(t).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(t)
}

fn corpus(path: &Path) -> Result<Vec<DesireInstance>, CliError> {
    load_corpus(path).map_err(data_err)
}

fn model_spec(kind: ModelKind, h: &HyperArgs) -> Result<ModelSpec, CliError> {
    let usage = |m: &str| Err(CliError::Usage(m.into()));
    if h.restarts == 0 {
        return usage("--restarts must be at least 1");
    }
    if h.restarts > 1 && kind != ModelKind::Lsnm {
        return usage("--restarts applies only to --model-kind lsnm");
    }
    let linear = |model| {
        if !(h.learning_rate > 0.0 && h.learning_rate.is_finite()) || h.l2.is_nan() || h.l2 < 0.0 {
            return usage("--learning-rate must be positive and --l2 nonnegative");
        }
        let hyper = LinearHyper {
            learning_rate: h.learning_rate,
            epochs: h.epochs.unwrap_or(LinearHyper::default().epochs),
            l2: h.l2,
        };
        Ok(ModelSpec::Linear { model, hyper })
    };
    match kind {
        ModelKind::Te => Ok(ModelSpec::Te),
        ModelKind::BowLr => linear(UnstructuredKind::BowLr),
        ModelKind::FeatLr => linear(UnstructuredKind::FeatLr),
        ModelKind::FeatPerceptron => linear(UnstructuredKind::FeatPerceptron),
        ModelKind::Lsnm => {
            if h.states == 0 {
                return usage("--h must be at least 1");
            }
            Ok(ModelSpec::Lsnm {
                states: h.states,
                hyper: LsnmHyper {
                    epochs: h.epochs.unwrap_or(LsnmHyper::default().epochs),
                    averaging: !h.no_averaging,
                },
                restarts: h.restarts,
            })
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ReportJson<'a> {
    model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_scores: Option<Vec<HScore>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_h: Option<usize>,
    report: &'a EvalReport,
}

#[derive(Serialize)]
struct HScore {
    h: usize,
    f1: f64,
}

fn train(cmd: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    let Command::Train {
        corpus: corpus_path,
        model_kind,
        out: model_path,
        seed,
        hyper,
        dev_corpus,
        dev_fraction,
        te_threshold,
        lexicons: lex_dir,
        report_json,
    } = cmd
    else {
        unreachable!("train called with another command")
    };
    let spec = model_spec(*model_kind, hyper)?;
    let te_threshold = threshold(*te_threshold)?;
    if !(*dev_fraction > 0.0 && *dev_fraction < 1.0) {
        return Err(CliError::Usage("--dev-fraction must lie in (0, 1)".into()));
    }
    let lex = lexicons(lex_dir)?;
    let mut instances = corpus(corpus_path)?;
    let n_train = instances.len();
    if let Some(dev) = dev_corpus {
        instances.extend(corpus(dev)?);
    }
    let data = Dataset::new(instances, &lex, te_threshold).map_err(data_err)?;

    let (model, dev_report) = if hyper.restarts > 1 {
        let (train_idx, dev_idx) = if dev_corpus.is_some() {
            ((0..n_train).collect(), (n_train..data.len()).collect())
        } else {
            let labels = data.labels()?;
            stratified_split(&labels, *dev_fraction, *seed)
        };
        if dev_idx.is_empty() {
            return Err(CliError::Data("development split is empty".into()));
        }
        let (report, m) = run_restarts(&spec, &data, &train_idx, &dev_idx, hyper.restarts, *seed)?;
        let model = train_once(&spec, &data, &train_idx, *seed + m as u64)?;
        write!(
            out,
            "{}",
            render_table(&[(format!("{} dev", spec.name()), report.clone())])
        )
        .map_err(data_err)?;
        (model, Some(report))
    } else {
        let idx: Vec<usize> = (0..n_train).collect();
        (train_once(&spec, &data, &idx, *seed)?, None)
    };

    if let (Some(path), Some(report)) = (report_json, &dev_report) {
        let rounded = report.rounded();
        let json = ReportJson {
            model: spec.name(),
            folds: None,
            h_scores: None,
            chosen_h: None,
            report: &rounded,
        };
        write_file(path, &to_json(&json))?;
    }
    let file = ModelFile {
        version: MODEL_FILE_VERSION,
        te_threshold,
        model: StoredModel::from_trained(&model),
        dev_report: dev_report.map(|r| r.rounded()),
    };
    write_file(model_path, &to_json(&file))?;
    writeln!(
        out,
        "wrote {} model to {}",
        spec.name(),
        model_path.display()
    )
    .map_err(data_err)?;
    Ok(())
}

fn load_model(path: &Path) -> Result<(ModelFile, TrainedModel), CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if file.version != MODEL_FILE_VERSION {
        return Err(CliError::Data(format!(
            "unsupported model file version {}",
            file.version
        )));
    }
    check_threshold(file.te_threshold).map_err(data_err)?;
    let model = file.model.to_trained()?;
    Ok((file, model))
}

fn format_bool(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "true",
        Some(false) => "false",
        None => "-",
    }
}

fn run_command(cmd: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Train { .. } => train(cmd, out),
        Command::Predict {
            model,
            corpus: corpus_path,
            out: out_path,
            lexicons: lex_dir,
        } => {
            let (file, model) = load_model(model)?;
            let data = Dataset::new(corpus(corpus_path)?, &lexicons(lex_dir)?, file.te_threshold)
                .map_err(data_err)?;
            let mut tsv = String::from("id\tgold\tpred\tstates\tscore\n");
            for p in model.predict_all(&data, &data.all())? {
                let states = p.states.map_or("-".to_string(), |s| {
                    s.iter()
                        .map(|h| h.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                });
                tsv.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    p.id,
                    format_bool(p.gold),
                    p.pred,
                    states,
                    p.score
                ));
            }
            match out_path {
                Some(path) => write_file(path, &tsv),
                None => out.write_all(tsv.as_bytes()).map_err(data_err),
            }
        }
        Command::Eval {
            model,
            corpus: corpus_path,
            lexicons: lex_dir,
            report_json,
        } => {
            let (file, model) = load_model(model)?;
            let data = Dataset::new(corpus(corpus_path)?, &lexicons(lex_dir)?, file.te_threshold)
                .map_err(data_err)?;
            let report = model.evaluate(&data, &data.all())?;
            let name = file.model.name();
            write!(out, "{}", render_table(&[(name.clone(), report.clone())])).map_err(data_err)?;
            if let Some(path) = report_json {
                let rounded = report.rounded();
                let json = ReportJson {
                    model: name,
                    folds: None,
                    h_scores: None,
                    chosen_h: None,
                    report: &rounded,
                };
                write_file(path, &to_json(&json))?;
            }
            Ok(())
        }
        Command::Cv {
            corpus: corpus_path,
            model_kind,
            seed,
            folds,
            hyper,
            h_candidates,
            te_threshold,
            lexicons: lex_dir,
            report_json,
        } => {
            let mut spec = model_spec(*model_kind, hyper)?;
            let te_threshold = threshold(*te_threshold)?;
            let data = Dataset::new(corpus(corpus_path)?, &lexicons(lex_dir)?, te_threshold)
                .map_err(data_err)?;
            let mut h_scores = None;
            let mut chosen_h = None;
            if let Some(candidates) = h_candidates {
                let ModelSpec::Lsnm {
                    hyper: lh,
                    restarts,
                    ..
                } = spec
                else {
                    return Err(CliError::Usage(
                        "--h-candidates applies only to lsnm".into(),
                    ));
                };
                if candidates.contains(&0) {
                    return Err(CliError::Usage("values of H must be at least 1".into()));
                }
                let (best, scores) = select_h(&data, candidates, lh, *folds, restarts, *seed)?;
                for (h, f1) in &scores {
                    writeln!(out, "H={h}: median cv f1 {:.1}", f1).map_err(data_err)?;
                }
                writeln!(out, "chosen H={best}").map_err(data_err)?;
                spec = ModelSpec::Lsnm {
                    states: best,
                    hyper: lh,
                    restarts,
                };
                h_scores = Some(
                    scores
                        .iter()
                        .map(|&(h, f1)| HScore {
                            h,
                            f1: (f1 * 10.0).round() / 10.0,
                        })
                        .collect(),
                );
                chosen_h = Some(best);
            }
            let report = cross_validate(&data, &spec, *folds, *seed)?;
            let name = format!("{} cv k={folds}", spec.name());
            write!(out, "{}", render_table(&[(name, report.clone())])).map_err(data_err)?;
            if let Some(path) = report_json {
                let rounded = report.rounded();
                let json = ReportJson {
                    model: spec.name(),
                    folds: Some(*folds),
                    h_scores,
                    chosen_h,
                    report: &rounded,
                };
                write_file(path, &to_json(&json))?;
            }
            Ok(())
        }
        Command::GenSynth {
            out: path,
            count,
            rule,
            min_evidences,
            max_evidences,
            reversal_prob,
            seed,
        } => {
            let cfg = SynthConfig {
                count: *count,
                min_evidences: *min_evidences,
                max_evidences: *max_evidences,
                reversal_prob: *reversal_prob,
                seed: *seed,
                rule: match rule {
                    RuleArg::LastStateParity => LabelRule::LastStateParity,
                    RuleArg::FocalPresence => LabelRule::FocalPresence,
                    RuleArg::Mixed => LabelRule::Mixed,
                },
            };
            let instances = generate(&cfg).map_err(|e| match e {
                SynthError::Config(_) => CliError::Usage(e.to_string()),
                _ => CliError::Data(e.to_string()),
            })?;
            write_corpus(path, &instances)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            writeln!(
                out,
                "wrote {} instances to {}",
                instances.len(),
                path.display()
            )
            .map_err(data_err)
        }
        Command::DumpFeatures {
            corpus: corpus_path,
            out: out_path,
            te_threshold,
            lexicons: lex_dir,
        } => {
            let te_threshold = threshold(*te_threshold)?;
            let data = Dataset::new(corpus(corpus_path)?, &lexicons(lex_dir)?, te_threshold)
                .map_err(data_err)?;
            let tsv: String = data
                .prepared
                .iter()
                .map(|p| dump_tsv(&p.id, &p.features))
                .collect();
            match out_path {
                Some(path) => write_file(path, &tsv),
                None => out.write_all(tsv.as_bytes()).map_err(data_err),
            }
        }
    }
}

/// Moves `--config FILE` out of `args` and splices the file's `key=value`
/// pairs in as flags right after the subcommand. Later explicit flags win.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let path = it
                .next()
                .ok_or_else(|| CliError::Usage("--config requires a file".into()))?;
            config = Some(path);
        } else if let Some(path) = a.strip_prefix("--config=") {
            config = Some(path.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    let cmd = Cli::command();
    let Some((pos, sub)) = rest
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(i, a)| cmd.find_subcommand(a).map(|s| (i, s)))
    else {
        return Ok(rest);
    };
    let mut injected = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{path}:{}: expected key=value", n + 1)))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::Usage(format!("{path}:{}: unknown key {key:?}", n + 1)))?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}"));
            injected.push(value.to_string());
        } else {
            match value {
                "true" => injected.push(format!("--{key}")),
                "false" => {}
                _ => {
                    return Err(CliError::Usage(format!(
                        "{path}:{}: {key} expects true or false",
                        n + 1
                    )))
                }
            }
        }
    }
    rest.splice(pos + 1..pos + 1, injected);
    Ok(rest)
}

/// Runs the command line in `args` (program name first) and returns the
/// process exit code.
pub fn run(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match run_command(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}
