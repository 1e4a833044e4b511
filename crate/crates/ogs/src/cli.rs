//! The `ogs` command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 IO error, 4 training or
//! experiment failure, 5 model load failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ogs_core::{parse_opcode_file, predict, train, Aggregation, ClassPriors, Error, LabeledSample, TrainConfig};
use serde::Deserialize;

use crate::generate::{read_spec, write_corpus, GenerateError};
use crate::manifest::{load_corpus, CorpusManifest};
use crate::model_file::{self, ModelError};
use crate::report::{evaluate, sweep_table, write_ranking_csv, write_scores_csv, EvalSettings};

#[derive(Debug, Parser)]
#[command(name = "ogs", version, about = "Opcode-graph malware detection")]
pub struct Cli {
    /// JSON file with default values for any flag; flags given on the
    /// command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus and its manifest.
    Generate {
        /// Corpus spec (JSON).
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a detector on a manifest and save the model.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Where to write the model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Also write the full edge ranking as CSV.
        #[arg(long)]
        ranking_csv: Option<PathBuf>,
    },
    /// Score opcode files with a saved model.
    Score {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        aggregation: Option<Aggregation>,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Cross-validate pruned and unpruned detectors on a manifest.
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        aggregation: Option<Aggregation>,
        /// Skip the unpruned baseline pass.
        #[arg(long)]
        no_baseline: bool,
        /// Cross-validate only on benign files plus these malware families;
        /// other malware is scored in every fold.
        #[arg(long = "train-family")]
        train_families: Vec<String>,
        /// Comma-separated top-K values for a sweep table.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
        /// Report JSON path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-sample scores CSV path; defaults to the report path with a
        /// `.scores.csv` extension.
        #[arg(long)]
        scores_csv: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub top_edges: Option<usize>,
    /// Score over the full alphabet instead of the top-ranked edges.
    #[arg(long)]
    pub no_prune: bool,
    /// Class weights for the within-class scatter: equal or empirical.
    #[arg(long, value_parser = parse_priors)]
    pub priors: Option<ClassPriors>,
}

fn parse_priors(s: &str) -> Result<ClassPriors, String> {
    match s {
        "equal" => Ok(ClassPriors::Equal),
        "empirical" => Ok(ClassPriors::Empirical),
        _ => Err(format!("unknown priors `{s}` (expected equal or empirical)")),
    }
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub manifest: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub scores_csv: Option<PathBuf>,
    pub ranking_csv: Option<PathBuf>,
    pub top_edges: Option<usize>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub aggregation: Option<Aggregation>,
    pub priors: Option<ClassPriors>,
    pub prune: Option<bool>,
    pub baseline: Option<bool>,
    pub train_families: Option<Vec<String>>,
    pub sweep: Option<Vec<usize>>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(m: impl ToString) -> Self {
        Self {
            code: 2,
            message: m.to_string(),
        }
    }
    fn io(m: impl ToString) -> Self {
        Self {
            code: 3,
            message: m.to_string(),
        }
    }
    fn training(m: impl ToString) -> Self {
        Self {
            code: 4,
            message: m.to_string(),
        }
    }
    fn model(m: impl ToString) -> Self {
        Self {
            code: 5,
            message: m.to_string(),
        }
    }
}

impl From<GenerateError> for CliError {
    fn from(e: GenerateError) -> Self {
        match e {
            GenerateError::Config(_) => Self::config(e),
            GenerateError::Io { .. } => Self::io(e),
        }
    }
}

fn core_error(e: Error) -> CliError {
    match e {
        Error::InvalidConfig(_) | Error::InvalidTopK | Error::InvalidFoldCount(_) => CliError::config(e),
        _ => CliError::training(e),
    }
}

fn required(v: Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    v.ok_or_else(|| {
        CliError::config(format!(
            "--{flag} is required (or set `{}` in --config)",
            flag.replace('-', "_")
        ))
    })
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn check_settings(top_k: usize, folds: Option<usize>) -> Result<(), CliError> {
    if top_k == 0 {
        return Err(CliError::config("top_edges: must be at least 1"));
    }
    if folds.is_some_and(|k| k < 2) {
        return Err(CliError::config("folds: must be at least 2"));
    }
    Ok(())
}

fn read_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::config(format!("{}: `{}`: {}", path.display(), e.path(), e.inner())))
}

/// Loads every manifest entry; any unreadable or empty file aborts with
/// all of them listed.
fn load_samples(manifest: &Path) -> Result<Vec<LabeledSample>, CliError> {
    let m = CorpusManifest::read(manifest).map_err(CliError::io)?;
    let loaded = load_corpus(&m);
    if !loaded.errors.is_empty() {
        for (i, e) in &loaded.errors {
            eprintln!("error: manifest entry {}: {e}", i + 1);
        }
        return Err(CliError::io(format!(
            "{} manifest entries could not be loaded",
            loaded.errors.len()
        )));
    }
    Ok(loaded.samples)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = read_config(cli.config.as_deref())?;
    match cli.command {
        Command::Generate { spec, out, seed } => {
            let out = required(out.or(cfg.out), "out")?;
            let mut spec = read_spec(&spec)?;
            if let Some(s) = seed.or(cfg.seed) {
                spec.seed = s;
            }
            let m = write_corpus(&spec, &out)?;
            eprintln!("wrote {} files to {}", m.entries.len(), out.display());
        }
        Command::Train {
            corpus,
            model,
            ranking_csv,
        } => {
            let manifest = required(corpus.manifest.or(cfg.manifest), "manifest")?;
            let model_path = required(model.or(cfg.model), "model")?;
            let config = TrainConfig {
                top_k: corpus
                    .top_edges
                    .or(cfg.top_edges)
                    .unwrap_or(TrainConfig::default().top_k),
                prune: !corpus.no_prune && cfg.prune.unwrap_or(true),
                priors: corpus.priors.or(cfg.priors).unwrap_or_default(),
            };
            check_settings(config.top_k, None)?;
            let samples = load_samples(&manifest)?;
            let trained = train(&samples, &config).map_err(core_error)?;
            model_file::save(&trained.model, &model_path).map_err(CliError::io)?;
            if let (Some(path), Some(ranking)) = (ranking_csv.or(cfg.ranking_csv), &trained.ranking) {
                let mut buf = Vec::new();
                write_ranking_csv(ranking, &mut buf).map_err(CliError::io)?;
                write_file(&path, buf)?;
            }
            let selected = trained
                .model
                .filter()
                .map_or("all".to_string(), |f| f.len().to_string());
            println!("threshold\t{}", trained.fit.threshold);
            println!("selected_edges\t{selected}");
            println!("separable\t{}", trained.fit.separable);
            println!("training_gap\t{}", trained.fit.gap());
        }
        Command::Score {
            model,
            aggregation,
            files,
        } => {
            let model_path = required(model.or(cfg.model), "model")?;
            let model = model_file::load(&model_path).map_err(|e| match e {
                ModelError::Io(io) => CliError::model(format!("{}: {io}", model_path.display())),
                other => CliError::model(format!("{}: {other}", model_path.display())),
            })?;
            let aggregation = aggregation.or(cfg.aggregation).unwrap_or_default();
            for path in files {
                let shown = path.display().to_string();
                let text = match fs::read(&path) {
                    Ok(b) => String::from_utf8_lossy(&b).into_owned(),
                    Err(e) => {
                        eprintln!("skipped {shown}: {e}");
                        continue;
                    }
                };
                let verdict = parse_opcode_file(&text, &shown).and_then(|seq| predict(&model, &seq, aggregation));
                match verdict {
                    Ok(v) => {
                        if v.unknown_opcodes > 0 {
                            eprintln!(
                                "note: {shown}: {} opcodes outside the model alphabet were ignored",
                                v.unknown_opcodes
                            );
                        }
                        println!("{shown}\t{}\t{}", v.label, v.aggregate_score);
                    }
                    Err(e) => eprintln!("skipped {shown}: {e}"),
                }
            }
        }
        Command::Evaluate {
            corpus,
            folds,
            seed,
            aggregation,
            no_baseline,
            train_families,
            sweep,
            out,
            scores_csv,
        } => {
            let manifest = required(corpus.manifest.or(cfg.manifest), "manifest")?;
            let d = EvalSettings::default();
            let settings = EvalSettings {
                folds: folds.or(cfg.folds).unwrap_or(d.folds),
                top_k: corpus.top_edges.or(cfg.top_edges).unwrap_or(d.top_k),
                seed: seed.or(cfg.seed).unwrap_or(d.seed),
                aggregation: aggregation.or(cfg.aggregation).unwrap_or(d.aggregation),
                priors: corpus.priors.or(cfg.priors).unwrap_or(d.priors),
                prune: !corpus.no_prune && cfg.prune.unwrap_or(true),
                baseline: !no_baseline && cfg.baseline.unwrap_or(true),
                train_families: if train_families.is_empty() {
                    cfg.train_families.unwrap_or_default()
                } else {
                    train_families
                },
                sweep: if sweep.is_empty() {
                    cfg.sweep.unwrap_or_default()
                } else {
                    sweep
                },
            };
            check_settings(settings.top_k, Some(settings.folds))?;
            for &k in &settings.sweep {
                check_settings(k, None)?;
            }
            let samples = load_samples(&manifest)?;
            let report = evaluate(&samples, &settings).map_err(core_error)?;
            for p in &report.passes {
                let name = if p.report.pruned { "pruned" } else { "unpruned" };
                println!("mma\t{name}\t{:.2}%", 100.0 * p.report.mma);
                for f in &p.families {
                    println!("family\t{name}\t{}\t{:.2}%", f.family, 100.0 * f.mma);
                }
            }
            if !report.sweep.is_empty() {
                print!("{}", sweep_table(&report));
            }
            let out = out.or(cfg.out);
            if let Some(path) = &out {
                write_file(path, report.to_json())?;
            }
            let scores_csv = scores_csv
                .or(cfg.scores_csv)
                .or_else(|| out.map(|p| p.with_extension("scores.csv")));
            if let Some(path) = scores_csv {
                let mut buf = Vec::new();
                write_scores_csv(&report, &mut buf).map_err(CliError::io)?;
                write_file(&path, buf)?;
            }
        }
    }
    Ok(())
}

pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
