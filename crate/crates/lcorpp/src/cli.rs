//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lcorpp_core::classifier::{self, TrainConfig};
use lcorpp_core::dataset::{generate_dataset, GenConfig};
use lcorpp_core::planner::{build_intention_pomdp, IntentionPomdpConfig, PomdpModel};
use lcorpp_core::reasoner::{default_kb, parse_kb, KnowledgeBase};
use lcorpp_core::rng_from_seed;
use thiserror::Error;

use crate::experiments::{self, AugmentConfig, Bench, ExpConfig, ExpError, Learner, Row};
use crate::io::{self, HistoryLine, ModelFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ExpError> for CliError {
    fn from(e: ExpError) -> Self {
        if e.is_input() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))
}

fn in_file<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T, io::FormatError>) -> Result<T, CliError> {
    parse(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lcorpp", version, about = "Human intention estimation with learning, reasoning and planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic trajectory dataset.
    GenerateData(GenerateArgs),
    /// Train a classifier and cross-validate its confusion matrix.
    Train(TrainArgs),
    /// Score a trained classifier on a dataset.
    Eval(EvalArgs),
    /// Compare all six strategies on the accurate knowledge base.
    ExpBaselines(ExpArgs),
    /// Reasoning strategies under high, medium and low accuracy knowledge.
    ExpKnowledge(ExpArgs),
    /// Learning strategies on full and quarter-length trajectories.
    ExpPartial(ExpArgs),
    /// Self-supervised data augmentation from an empty dataset.
    ExpAugment(AugmentArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 2286)]
    pub count: usize,
    /// Fraction of interested instances (overrides the config file).
    #[arg(long)]
    pub positive_rate: Option<f64>,
    /// TOML generator config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5000)]
    pub trials: u64,
    /// Knowledge base the world is drawn from.
    #[arg(long)]
    pub kb: Option<PathBuf>,
    /// Trained classifier; trained from scratch when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Planner model in the POMDP text format.
    #[arg(long)]
    pub pomdp: Option<PathBuf>,
    /// Probability that human feedback is flipped.
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    /// TOML generator config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script plotting the CSV (requires --out).
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub exp: ExpArgs,
    /// Episodes per batch.
    #[arg(long, default_value_t = 500)]
    pub batch: usize,
    #[arg(long, default_value_t = 4)]
    pub batches: usize,
    /// Per-episode and per-batch loop history.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

fn load_gen(path: Option<&Path>) -> Result<(GenConfig, Option<u64>), CliError> {
    match path {
        Some(p) => {
            let f = in_file(p, io::parse_gen_config)?;
            Ok((f.gen, f.seed))
        }
        None => Ok((GenConfig::default(), None)),
    }
}

fn with_overrides(base: TrainConfig, epochs: Option<usize>, hidden: Option<usize>) -> TrainConfig {
    TrainConfig {
        epochs: epochs.unwrap_or(base.epochs),
        hidden: hidden.unwrap_or(base.hidden),
        ..base
    }
}

fn load_kb(path: Option<&Path>) -> Result<KnowledgeBase, CliError> {
    match path {
        Some(p) => parse_kb(&read(p)?).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => Ok(default_kb()),
    }
}

fn load_pomdp(path: Option<&Path>) -> Result<PomdpModel, CliError> {
    match path {
        Some(p) => in_file(p, io::parse_pomdp),
        None => build_intention_pomdp(&IntentionPomdpConfig::default()).map_err(|e| CliError::Numerical(e.to_string())),
    }
}

fn exp_setup(a: &ExpArgs) -> Result<(ExpConfig, Bench), CliError> {
    let (gen, _) = load_gen(a.config.as_deref())?;
    let cfg = ExpConfig {
        seed: a.seed,
        trials: a.trials,
        noise: a.noise,
        gen,
        train: with_overrides(experiments::desk_train_config(), a.epochs, a.hidden),
        ..ExpConfig::default()
    };
    cfg.validate()?;
    let bench = Bench::new(load_kb(a.kb.as_deref())?, load_pomdp(a.pomdp.as_deref())?)?;
    Ok((cfg, bench))
}

fn full_learner(a: &ExpArgs, cfg: &ExpConfig) -> Result<Learner, CliError> {
    match &a.model {
        Some(p) => {
            let m = in_file(p, io::parse_model)?;
            Ok(Learner {
                classifier: m.classifier,
                confusion: m.confusion,
                fraction: 1.0,
            })
        }
        None => Ok(experiments::train_learner(cfg, 1.0)?),
    }
}

/// Gnuplot script drawing F1 per row of an experiment CSV.
pub fn gnuplot_script(csv: &Path, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set title '{title}'\n\
         set style data histograms\n\
         set style fill solid 0.8\n\
         set yrange [0:1]\n\
         set ylabel 'F1'\n\
         set xtics rotate by -45\n\
         plot '{}' every ::1 using 3:xtic(stringcolumn(1).' '.stringcolumn(2)) title 'F1'\n",
        csv.display()
    )
}

fn finish(a: &ExpArgs, rows: &[Row], title: &str) -> Result<(), CliError> {
    emit(a.out.as_deref(), &experiments::to_csv(rows))?;
    if let Some(gp) = &a.gnuplot {
        let csv = a
            .out
            .as_deref()
            .ok_or_else(|| input("--gnuplot needs --out to name the CSV file"))?;
        emit(Some(gp), &gnuplot_script(csv, title))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenerateData(a) => {
            let (mut gen, file_seed) = load_gen(a.config.as_deref())?;
            if let Some(r) = a.positive_rate {
                gen.positive_rate = r;
            }
            let seed = a.seed.or(file_seed).unwrap_or(0);
            let ds = generate_dataset(a.count, &gen, &mut rng_from_seed(seed)).map_err(input)?;
            emit(a.out.as_deref(), &io::write_dataset(&ds))
        }
        Command::Train(a) => {
            let ds = in_file(&a.dataset, io::parse_dataset)?;
            if ds.is_empty() {
                return Err(input(format!("{}: dataset is empty", a.dataset.display())));
            }
            let train = TrainConfig {
                seed: a.seed,
                ..with_overrides(experiments::desk_train_config(), a.epochs, a.hidden)
            };
            train.validate().map_err(input)?;
            if a.folds < 2 {
                return Err(input("--folds must be at least 2"));
            }
            let num = |e: classifier::ClassifierError| CliError::Numerical(e.to_string());
            let classifier = classifier::train(&ds, &train).map_err(num)?;
            let confusion = classifier::cross_validate(&ds, &train, a.folds).map_err(num)?;
            log::info!("confusion {confusion}");
            let model = ModelFile {
                classifier,
                train,
                confusion,
            };
            emit(a.out.as_deref(), &io::write_model(&model))
        }
        Command::Eval(a) => {
            let m = in_file(&a.model, io::parse_model)?;
            let ds = in_file(&a.dataset, io::parse_dataset)?;
            if ds.is_empty() {
                return Err(input(format!("{}: dataset is empty", a.dataset.display())));
            }
            let (c, metrics) = experiments::evaluate(&m.classifier, &ds);
            let text = format!(
                "instances {}\naccuracy {:.6}\nprecision {:.6}\nrecall {:.6}\nf1 {:.6}\nconfusion {c}\n",
                metrics.trials(),
                metrics.accuracy(),
                metrics.precision(),
                metrics.recall(),
                metrics.f1()
            );
            emit(a.out.as_deref(), &text)
        }
        Command::ExpBaselines(a) => {
            let (cfg, bench) = exp_setup(&a)?;
            let learner = full_learner(&a, &cfg)?;
            let rows = experiments::baselines(&cfg, &bench, &learner)?;
            finish(&a, &rows, "Strategies")
        }
        Command::ExpKnowledge(a) => {
            let (cfg, bench) = exp_setup(&a)?;
            let learner = full_learner(&a, &cfg)?;
            let rows = experiments::knowledge(&cfg, &bench, &learner)?;
            finish(&a, &rows, "Knowledge accuracy")
        }
        Command::ExpPartial(a) => {
            let (cfg, bench) = exp_setup(&a)?;
            let quarter = experiments::train_learner(&cfg, 0.25)?;
            let full = full_learner(&a, &cfg)?;
            let rows = experiments::partial(&cfg, &bench, &[quarter, full])?;
            finish(&a, &rows, "Partial trajectories")
        }
        Command::ExpAugment(a) => {
            let (cfg, bench) = exp_setup(&a.exp)?;
            let aug = AugmentConfig {
                batch: a.batch,
                batches: a.batches,
                train: with_overrides(AugmentConfig::default().train, a.exp.epochs, a.exp.hidden),
                ..AugmentConfig::default()
            };
            let out = experiments::augment(&cfg, &aug, &bench)?;
            if let Some(h) = &a.history {
                let mut text = String::new();
                let mut episodes = out.run.episodes.iter().peekable();
                for b in &out.run.batches {
                    while let Some(e) = episodes.next_if(|e| e.trial < b.trials) {
                        text.push_str(&HistoryLine::from(e).to_string());
                        text.push('\n');
                    }
                    text.push_str(&HistoryLine::from(b).to_string());
                    text.push('\n');
                }
                for e in episodes {
                    text.push_str(&HistoryLine::from(e).to_string());
                    text.push('\n');
                }
                emit(Some(h), &text)?;
            }
            finish(&a.exp, &out.rows, "Data augmentation")
        }
    }
}
