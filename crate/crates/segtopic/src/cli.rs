//! The `segtopic` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (including unreadable or malformed files), 3 numeric failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use segtopic_core::corpus::{corpus_stats, generate_corpus, TopicLabel};
use segtopic_core::diagnostics::{mini_gradcheck, MiniModel};
use segtopic_core::eval::{score, system_output, FoldGranularity};
use segtopic_core::pipeline::{crossval_system, train_system};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::config::{CorpusSpecFile, LsaSetting, NoneWord, RunConfig, WindowSide};
use crate::corpus_io::{read_corpus, write_corpus, CORPUS_FORMAT_VERSION};
use crate::error::{CliError, Result};
use crate::float::raw;
use crate::models::{load_system, save_system, FEATURES_VERSION, MODEL_VERSION};
use crate::output::{read_output, write_output, OUTPUT_VERSION};
use crate::report::{crossval_table, report_to_json, summary, REPORT_VERSION};

/// Gradient checks fail above this relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Parser, Debug)]
#[command(name = "segtopic", version, about = "Segment-level multi-label topic identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic corpus from a spec file.
    GenCorpus {
        /// Corpus spec (TOML).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Moves the last N documents to `--test-out`.
        #[arg(long, requires = "test_out")]
        test_documents: Option<usize>,
        #[arg(long, requires = "test_documents")]
        test_out: Option<PathBuf>,
    },
    /// Fit features, train a model and write the feature and model files.
    Train(RunArgs),
    /// Write per-segment posteriors for a corpus.
    Predict {
        /// Run config supplying default paths.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a system-output file against a reference corpus.
    Score {
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Also write the full report (JSON) here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the tie bounds of Relevance AP as well.
        #[arg(long)]
        verbose: bool,
    },
    /// k-fold cross-validation of the configured system.
    Crossval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Granularity::Document)]
        granularity: Granularity,
    },
    /// Finite-difference gradient check of miniature models.
    Gradcheck {
        /// mlp, bigru, attn, attn+gate or all.
        #[arg(long, default_value = "all")]
        variant: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Granularity {
    Document,
    Segment,
}

/// A run config plus flag overrides; flags win.
#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// Run config (TOML). Without it the standard preset is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// A dimension, or "none" for raw tf-idf.
    #[arg(long)]
    pub lsa_dim: Option<String>,
    #[arg(long)]
    pub music: Option<bool>,
    /// A segment count or "unbounded".
    #[arg(long)]
    pub window_left: Option<WindowSide>,
    #[arg(long)]
    pub window_right: Option<WindowSide>,
    #[arg(long)]
    pub gate: Option<bool>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Training log (JSON).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

impl RunArgs {
    /// The effective config: file contents with flags applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::read(p)?,
            None => RunConfig::new(Default::default()),
        };
        if let Some(v) = &self.preset {
            cfg.preset = v.clone();
        }
        if let Some(v) = &self.variant {
            cfg.variant = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = Some(v);
        }
        if let Some(v) = self.epochs {
            cfg.epochs = Some(v);
        }
        if let Some(v) = &self.lsa_dim {
            cfg.model.lsa_dim = Some(match v.as_str() {
                "none" => LsaSetting::Off(NoneWord::None),
                s => LsaSetting::Dim(
                    s.parse()
                        .map_err(|_| CliError::Usage(format!("--lsa-dim expects a count or \"none\", got {s:?}")))?,
                ),
            });
        }
        macro_rules! flag {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.model.$f = Some(v); } )* };
        }
        flag!(music, window_left, window_right, gate);
        macro_rules! path {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { cfg.paths.$f = Some(v.clone()); } )* };
        }
        path!(corpus, validation, features, model, log);
        cfg.to_model_config()?;
        Ok(cfg)
    }
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::Usage(format!("no {what} path given (flag or [paths] in the config)")))
}

fn formats_line() -> String {
    format!(
        "formats: corpus {CORPUS_FORMAT_VERSION}, features {FEATURES_VERSION}, model {MODEL_VERSION}, output {OUTPUT_VERSION}, config {}",
        crate::config::CONFIG_VERSION
    )
}

#[derive(Serialize)]
struct EpochOut {
    epoch: usize,
    train_loss: Box<RawValue>,
    validation_metric: Box<RawValue>,
}

#[derive(Serialize)]
struct TrainLogOut {
    format: &'static str,
    version: u32,
    config_sha256: String,
    seed: u64,
    feature_sha256: String,
    formats: String,
    config: String,
    initial_loss: Option<Box<RawValue>>,
    best_epoch: Option<usize>,
    epochs: Vec<EpochOut>,
}

fn cmd_gen_corpus(
    spec: &Path,
    out_path: &Path,
    seed: Option<u64>,
    test: Option<(usize, &Path)>,
    out: &mut dyn Write,
) -> Result<()> {
    let mut spec = CorpusSpecFile::read(spec)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let docs = generate_corpus(&spec)?;
    let w = |e| CliError::io("<stdout>", e);
    match test {
        None => write_corpus(out_path, &docs)?,
        Some((n, test_path)) => {
            if n == 0 || n >= docs.len() {
                return Err(CliError::Usage(format!(
                    "--test-documents {n} must leave both parts nonempty ({} documents)",
                    docs.len()
                )));
            }
            let (train, test_docs) = docs.split_at(docs.len() - n);
            write_corpus(out_path, train)?;
            write_corpus(test_path, test_docs)?;
            writeln!(out, "split: {} documents to {}, {n} to {}", train.len(), out_path.display(), test_path.display())
                .map_err(w)?;
        }
    }
    let st = corpus_stats(&docs);
    writeln!(out, "seed {}; {}", spec.seed, formats_line()).map_err(w)?;
    writeln!(
        out,
        "documents {}\nsegments {}\nout-of-domain fraction {:.3}",
        st.documents, st.segments, st.ood_fraction
    )
    .map_err(w)?;
    for l in TopicLabel::all() {
        writeln!(out, "{}\t{}", l.name(), st.label_histogram[l.id()]).map_err(w)?;
    }
    Ok(())
}

fn cmd_train(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.resolve()?;
    let mc = cfg.to_model_config()?;
    let corpus = read_corpus(required(&cfg.paths.corpus, "corpus")?)?;
    let validation = cfg.paths.validation.as_deref().map(read_corpus).transpose()?;
    let features_path = required(&cfg.paths.features, "features")?;
    let model_path = required(&cfg.paths.model, "model")?;
    let w = |e| CliError::io("<stdout>", e);
    let config_sha = cfg.sha256();
    writeln!(
        out,
        "train {} ({}) config_sha256 {config_sha} seed {}; {}",
        mc.variant.name(),
        mc.preset.name(),
        mc.seed,
        formats_line()
    )
    .map_err(w)?;

    let (system, log) = train_system(&corpus, validation.as_deref(), &mc)?;
    let feature_sha = save_system(&system, mc.preset, features_path, model_path)?;
    if let Some(log) = &log {
        writeln!(out, "initial loss {:.6}", log.initial_loss).map_err(w)?;
        for e in &log.epochs {
            writeln!(
                out,
                "epoch {:3}  loss {:.6}  validation {:.6}",
                e.epoch, e.train_loss, e.validation_metric
            )
            .map_err(w)?;
        }
        writeln!(out, "best epoch {}", log.best_epoch).map_err(w)?;
    }
    writeln!(
        out,
        "wrote {} and {} (feature_sha256 {feature_sha})",
        features_path.display(),
        model_path.display()
    )
    .map_err(w)?;

    if let Some(log_path) = &cfg.paths.log {
        let record = TrainLogOut {
            format: "segtopic-train-log",
            version: 1,
            config_sha256: config_sha,
            seed: mc.seed,
            feature_sha256: feature_sha,
            formats: formats_line(),
            config: RunConfig::explicit(&mc).to_toml(),
            initial_loss: log.as_ref().map(|l| raw(l.initial_loss)),
            best_epoch: log.as_ref().map(|l| l.best_epoch),
            epochs: log
                .iter()
                .flat_map(|l| &l.epochs)
                .map(|e| EpochOut {
                    epoch: e.epoch,
                    train_loss: raw(e.train_loss),
                    validation_metric: raw(e.validation_metric),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&record).expect("log serializes");
        text.push('\n');
        std::fs::write(log_path, text).map_err(|e| CliError::io(log_path, e))?;
    }
    Ok(())
}

fn cmd_predict(
    config: Option<&Path>,
    model: Option<PathBuf>,
    features: Option<PathBuf>,
    corpus: Option<PathBuf>,
    out_path: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let mut paths = match config {
        Some(p) => RunConfig::read(p)?.paths,
        None => Default::default(),
    };
    paths.model = model.or(paths.model);
    paths.features = features.or(paths.features);
    paths.corpus = corpus.or(paths.corpus);
    paths.output = out_path.or(paths.output);
    let (system, _) = load_system(required(&paths.model, "model")?, required(&paths.features, "features")?)?;
    let docs = read_corpus(required(&paths.corpus, "corpus")?)?;
    let post = system.predict_corpus(&docs)?;
    let sys = system_output(&docs, &post);
    let dest = required(&paths.output, "output")?;
    write_output(dest, &sys)?;
    writeln!(out, "wrote {} records to {}; {}", sys.records.len(), dest.display(), formats_line())
        .map_err(|e| CliError::io("<stdout>", e))?;
    Ok(())
}

fn cmd_score(output: &Path, reference: &Path, report: Option<&Path>, verbose: bool, out: &mut dyn Write) -> Result<()> {
    let sys = read_output(output)?;
    let docs = read_corpus(reference)?;
    let r = score(&sys, &docs)?;
    out.write_all(summary(&r, verbose).as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    if let Some(p) = report {
        std::fs::write(p, report_to_json(&r)).map_err(|e| CliError::io(p, e))?;
    }
    Ok(())
}

fn cmd_crossval(args: &RunArgs, k: usize, granularity: Granularity, out: &mut dyn Write) -> Result<()> {
    let cfg = args.resolve()?;
    let mc = cfg.to_model_config()?;
    let corpus = read_corpus(required(&cfg.paths.corpus, "corpus")?)?;
    let g = match granularity {
        Granularity::Document => FoldGranularity::Document,
        Granularity::Segment => FoldGranularity::Segment,
    };
    let w = |e| CliError::io("<stdout>", e);
    writeln!(
        out,
        "crossval {} ({}) k {k} config_sha256 {} seed {}; {}, score report {REPORT_VERSION}",
        mc.variant.name(),
        mc.preset.name(),
        cfg.sha256(),
        mc.seed,
        formats_line()
    )
    .map_err(w)?;
    let report = crossval_system(&corpus, &mc, k, g)?;
    out.write_all(crossval_table(&report).as_bytes()).map_err(w)?;
    Ok(())
}

fn cmd_gradcheck(variant: &str, seed: u64, out: &mut dyn Write) -> Result<()> {
    let kinds: Vec<MiniModel> = if variant == "all" {
        MiniModel::ALL.to_vec()
    } else {
        vec![MiniModel::from_name(variant).ok_or_else(|| {
            CliError::Usage(format!("unknown gradcheck variant {variant:?} (mlp | bigru | attn | attn+gate | all)"))
        })?]
    };
    let w = |e| CliError::io("<stdout>", e);
    writeln!(out, "gradcheck seed {seed}: d 8, width 8, 4 segments, step 1e-5").map_err(w)?;
    let mut worst: Option<(MiniModel, f64)> = None;
    for kind in kinds {
        let err = mini_gradcheck(kind, seed)?;
        writeln!(out, "{}\tmax relative error {err:.3e}", kind.name()).map_err(w)?;
        if err >= GRADCHECK_TOLERANCE && worst.is_none_or(|(_, e)| err > e) {
            worst = Some((kind, err));
        }
    }
    match worst {
        Some((kind, err)) => Err(segtopic_core::Error::NonFinite(format!(
            "{} gradient check failed: {err:.3e} >= {GRADCHECK_TOLERANCE:e}",
            kind.name()
        ))
        .into()),
        None => Ok(()),
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::GenCorpus {
            spec,
            out: path,
            seed,
            test_documents,
            test_out,
        } => cmd_gen_corpus(&spec, &path, seed, test_documents.zip(test_out.as_deref()), out),
        Command::Train(args) => cmd_train(&args, out),
        Command::Predict {
            config,
            model,
            features,
            corpus,
            out: path,
        } => cmd_predict(config.as_deref(), model, features, corpus, path, out),
        Command::Score {
            output,
            reference,
            report,
            verbose,
        } => cmd_score(&output, &reference, report.as_deref(), verbose, out),
        Command::Crossval { run, k, granularity } => cmd_crossval(&run, k, granularity, out),
        Command::Gradcheck { variant, seed } => cmd_gradcheck(&variant, seed, out),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                1
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
