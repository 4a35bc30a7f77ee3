use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lendrisk::config::{CohortConfig, CohortScope, Family};
use lendrisk::error::StageExt;
use lendrisk::ingest::build_phase2;
use lendrisk::pipeline::{self, PhaseReport};
use lendrisk::synth::{self, SynthConfig};
use lendrisk::{monthly, scoring, Phase, Result, RunConfig};
use lendrisk_core::grid::Objective;
use lendrisk_core::linear::{ClassWeighting, Penalty};
use lendrisk_core::YearMonth;

#[derive(Parser)]
#[command(name = "lendrisk", version, about = "Two-phase loan acceptance and default models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic accepted/rejected pair plus truth.json.
    Synth(SynthArgs),
    /// Parse both files and print row accounting.
    IngestCheck(Common),
    /// Monthly default and rejection series with moving statistics.
    Stats(Common),
    /// Accept/reject model on the features shared by both files.
    Phase1(PhaseCmd),
    /// Default model on fully paid and defaulted loans.
    Phase2(PhaseCmd),
    /// Both phases, trained on the cohort only and on everything, scored on the cohort.
    Cohort(CohortCmd),
    /// Score a CSV with a saved model.
    Predict(PredictArgs),
    /// Node and edge lists of an MLP model.
    ExportWeights(ExportArgs),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    accepted: Option<PathBuf>,
    #[arg(long)]
    rejected: Option<PathBuf>,
    /// Exclude rows dated after this month (YYYY-MM).
    #[arg(long)]
    cutoff: Option<YearMonth>,
    #[arg(long)]
    coverage_threshold: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(p) = &self.out {
            c.data.out_dir = p.clone();
        }
        if let Some(p) = &self.accepted {
            c.data.accepted = p.clone();
        }
        if let Some(p) = &self.rejected {
            c.data.rejected = p.clone();
        }
        if self.cutoff.is_some() {
            c.cutoff = self.cutoff;
        }
        if let Some(t) = self.coverage_threshold {
            c.coverage_threshold = t;
        }
        Ok(c)
    }
}

fn parse_objective(s: &str) -> std::result::Result<Objective, String> {
    match s {
        "recall_macro" => Ok(Objective::RecallMacro),
        "auc" => Ok(Objective::Auc),
        _ => Err(format!("unknown objective {s:?} (recall_macro, auc)")),
    }
}

fn parse_weighting(s: &str) -> std::result::Result<ClassWeighting, String> {
    match s {
        "balanced" => Ok(ClassWeighting::Balanced),
        "none" => Ok(ClassWeighting::None),
        _ => Err(format!("unknown class weighting {s:?} (balanced, none)")),
    }
}

fn parse_penalty(s: &str) -> std::result::Result<Penalty, String> {
    match s {
        "l1" => Ok(Penalty::L1),
        "l2" => Ok(Penalty::L2),
        _ => Err(format!("unknown penalty {s:?} (l1, l2)")),
    }
}

#[derive(Args)]
struct PhaseCmd {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    selection_fraction: Option<f64>,
    #[arg(long, value_parser = parse_objective)]
    objective: Option<Objective>,
    #[arg(long, value_parser = parse_weighting)]
    class_weighting: Option<ClassWeighting>,
    #[arg(long)]
    downsample: Option<bool>,
    #[arg(long, value_delimiter = ',', value_parser = parse_penalty)]
    penalties: Option<Vec<Penalty>>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Restrict to loans with this purpose token.
    #[arg(long)]
    cohort_token: Option<String>,
    #[arg(long, value_enum)]
    cohort_scope: Option<CohortScope>,
}

impl PhaseCmd {
    fn load(&self, phase: Phase) -> Result<RunConfig> {
        let mut c = self.common.load()?;
        let p = c.phase_mut(phase);
        if let Some(v) = self.family {
            p.family = v;
        }
        if self.train_fraction.is_some() {
            p.train_fraction = self.train_fraction;
        }
        if let Some(v) = self.selection_fraction {
            p.selection_fraction = v;
        }
        if let Some(v) = self.objective {
            p.objective = v;
        }
        if self.class_weighting.is_some() {
            p.class_weighting = self.class_weighting;
        }
        if self.downsample.is_some() {
            p.downsample = self.downsample;
        }
        if let Some(v) = &self.penalties {
            p.penalties = v.clone();
        }
        if let Some(v) = self.learning_rate {
            p.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            p.batch_size = v;
        }
        if let Some(v) = self.max_epochs {
            p.max_epochs = v;
        }
        if let Some(v) = self.patience {
            p.patience = v;
        }
        if let Some(token) = &self.cohort_token {
            let scope = self.cohort_scope.or(c.cohort.as_ref().map(|c| c.scope)).unwrap_or(CohortScope::TrainAndTest);
            c.cohort = Some(CohortConfig { token: token.clone(), scope });
        } else if let (Some(scope), Some(cohort)) = (self.cohort_scope, c.cohort.as_mut()) {
            cohort.scope = scope;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct CohortCmd {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    cohort_token: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML generator configuration; built-in defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    applications: Option<usize>,
}

#[derive(Args)]
struct PredictArgs {
    /// Run configuration, used for the column mapping.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    /// Defaults to preprocess.json next to the model.
    #[arg(long)]
    preprocess: Option<PathBuf>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn print_phase(r: &PhaseReport) {
    println!(
        "{} {:?} selected {} | test auc {:.4} recall0 {:.4} recall1 {:.4} macro {:.4} (n={}) | model {} state {}",
        r.phase.name(),
        r.family,
        r.selected.label(),
        r.test.auc,
        r.test.recall_class0,
        r.test.recall_class1,
        r.test.recall_macro,
        r.test.n_rows,
        r.model_id,
        r.preprocess_id,
    );
}

fn load_synth(args: &SynthArgs) -> Result<SynthConfig> {
    let mut c = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| lendrisk::Error::io(p, e))?;
            toml::from_str(&text).map_err(|e| lendrisk::Error::Config(format!("{}: {e}", p.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(n) = args.applications {
        c.applications = n;
    }
    Ok(c)
}

fn ingest_check(config: &RunConfig) -> Result<()> {
    let p1 = pipeline::load_phase(config, Phase::One)?;
    print!("{}", p1.summary_text());
    let columns = p1.set.columns();
    for c in &columns {
        println!("phase1.coverage[{}] {}", c.name, c.coverage);
    }
    let mut reader = lendrisk::ingest::RecordReader::open(
        &config.data.accepted,
        lendrisk::ingest::Source::Accepted,
        &config.columns,
    )?;
    let records = pipeline::collect_records(&mut reader)?;
    let (set, _) = build_phase2(records)?;
    println!("phase2.rows {}", set.len());
    for c in set.columns() {
        println!("phase2.coverage[{}] {}", c.name, c.coverage);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => {
            let config = load_synth(&args).stage("config")?;
            let data = synth::generate(&config).stage("synth")?;
            data.write(&args.out).stage("write")?;
            println!(
                "wrote {} accepted and {} rejected rows to {}",
                data.truth.accepted,
                data.truth.rejected,
                args.out.display()
            );
        }
        Command::IngestCheck(common) => {
            let config = common.load().stage("config")?;
            ingest_check(&config).stage("ingest")?;
        }
        Command::Stats(common) => {
            let config = common.load().stage("config")?;
            let r = monthly::stats_report(&config)?;
            println!(
                "{} months; suggested cutoff {}",
                r.stats.months.len(),
                r.suggested_cutoff.map_or("none".to_string(), |m| m.to_string())
            );
        }
        Command::Phase1(cmd) => print_phase(&pipeline::run_phase1(&cmd.load(Phase::One).stage("config")?)?),
        Command::Phase2(cmd) => print_phase(&pipeline::run_phase2(&cmd.load(Phase::Two).stage("config")?)?),
        Command::Cohort(cmd) => {
            let mut config = cmd.common.load().stage("config")?;
            if let Some(token) = cmd.cohort_token {
                config.cohort = Some(CohortConfig { token, scope: CohortScope::TrainAndTest });
            }
            let s = pipeline::run_cohort_suite(&config)?;
            println!("cohort {:?}: phase1 share {:.4}, phase2 share {:.4}", s.token, s.phase1_share, s.phase2_share);
            for c in &s.cells {
                println!(
                    "  {} {:<14} auc {:.4} recall0 {:.4} recall1 {:.4} macro {:.4} (train {}, test {})",
                    c.phase.name(),
                    c.scope.name(),
                    c.auc,
                    c.recall_class0,
                    c.recall_class1,
                    c.recall_macro,
                    c.train_rows,
                    c.test_rows
                );
            }
        }
        Command::Predict(args) => {
            let columns = match &args.config {
                Some(p) => RunConfig::load(p).stage("config")?.columns,
                None => Default::default(),
            };
            let s = scoring::predict(&args.model, args.preprocess.as_deref(), &args.input, &args.output, &columns)?;
            println!(
                "scored {} rows with model {} ({} dropped)",
                s.scored,
                s.model_id,
                s.parse.dropped()
            );
        }
        Command::ExportWeights(args) => {
            let g = scoring::export_network_weights(&args.model, &args.out)?;
            println!("{} nodes, {} edges written to {}", g.nodes.len(), g.edges.len(), args.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
