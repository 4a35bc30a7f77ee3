//! End-to-end phase runs and the cohort suite.

use std::fs;
use std::io::Read;
use std::path::Path;

use lendrisk_core::grid::{grid_search, CellOutcome, GridResult, Hyperparams, Labeled, ObjectiveComparison, Selection};
use lendrisk_core::metrics::EvalReport;
use lendrisk_core::preprocess::{downsample_majority, drop_low_coverage, time_split, PreprocessState, SplitSpec};
use lendrisk_core::{DroppedColumn, SampleSet, YearMonth};
use serde::{Deserialize, Serialize};

use crate::artifact::{write_json, ModelArtifact, PreprocessArtifact, MODEL_FILE, PREPROCESS_FILE};
use crate::config::{CohortConfig, CohortScope, Family, Phase, PhaseConfig, RunConfig};
use crate::error::{Error, Result, StageExt};
use crate::ingest::{build_phase1, build_phase2, LoanRecord, ParseSummary, RecordReader, Source, StatusSummary};

pub const REPORT_FILE: &str = "report.json";
pub const GRID_FILE: &str = "grid.csv";
pub const PARSE_SUMMARY_FILE: &str = "parse_summary.txt";
const PURPOSE: &str = "purpose";

/// A phase's sample set with the bookkeeping of how it was read.
#[derive(Debug, Clone)]
pub struct PhaseData {
    pub phase: Phase,
    pub set: SampleSet,
    pub parse: Vec<ParseSummary>,
    pub status: Option<StatusSummary>,
}

impl PhaseData {
    pub fn summary_text(&self) -> String {
        let mut s: String = self.parse.iter().map(ToString::to_string).collect();
        if let Some(st) = &self.status {
            s.push_str(&st.to_string());
        }
        s.push_str(&format!("{}.rows {}\n", self.phase.name(), self.set.len()));
        s
    }
}

/// Reads records until the reader is exhausted or fails.
pub fn collect_records<R: Read>(reader: &mut RecordReader<R>) -> Result<Vec<LoanRecord>> {
    reader.by_ref().collect()
}

pub fn load_phase(config: &RunConfig, phase: Phase) -> Result<PhaseData> {
    let mut accepted = RecordReader::open(&config.data.accepted, Source::Accepted, &config.columns)?;
    let acc = collect_records(&mut accepted)?;
    match phase {
        Phase::One => {
            let mut rejected = RecordReader::open(&config.data.rejected, Source::Rejected, &config.columns)?;
            let rej = collect_records(&mut rejected)?;
            let set = build_phase1(acc, rej)?;
            Ok(PhaseData { phase, set, parse: vec![accepted.summary().clone(), rejected.summary().clone()], status: None })
        }
        Phase::Two => {
            let (set, status) = build_phase2(acc)?;
            Ok(PhaseData { phase, set, parse: vec![accepted.summary().clone()], status: Some(status) })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub negative: usize,
    pub positive: usize,
}

impl ClassCounts {
    fn of(set: &SampleSet) -> Self {
        let [negative, positive] = set.class_counts();
        Self { negative, positive }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub rows: usize,
    pub classes: ClassCounts,
    pub first_month: Option<YearMonth>,
    pub last_month: Option<YearMonth>,
}

impl SplitReport {
    fn of(set: &SampleSet) -> Self {
        Self {
            rows: set.len(),
            classes: ClassCounts::of(set),
            first_month: set.dates().iter().min().copied(),
            last_month: set.dates().iter().max().copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataReport {
    pub parse: Vec<ParseSummary>,
    pub status: Option<StatusSummary>,
    pub rows: usize,
    pub classes: ClassCounts,
    pub dropped_columns: Vec<DroppedColumn>,
    pub cutoff: Option<YearMonth>,
    pub train: SplitReport,
    pub fit_before_downsampling: SplitReport,
    pub fit: SplitReport,
    pub validation: SplitReport,
    pub test: SplitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub token: String,
    pub scope: CohortScope,
    /// Fraction of the phase's rows carrying the token.
    pub share: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSelections {
    pub recall_macro: Selection,
    pub auc: Selection,
    pub recall_macro_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub schema_version: u32,
    pub phase: Phase,
    pub family: Family,
    pub model_id: String,
    pub preprocess_id: String,
    pub cohort: Option<CohortReport>,
    pub data: DataReport,
    pub feature_names: Vec<String>,
    pub selected: Hyperparams,
    pub fit: EvalReport,
    pub validation: EvalReport,
    pub test: EvalReport,
    pub objectives: ObjectiveSelections,
    pub grid: GridResult,
}

/// Cohort share over the whole phase set; fails if the token never occurs.
fn cohort_rows(set: &SampleSet, token: &str) -> Result<Vec<usize>> {
    let rows = set.rows_with_token(PURPOSE, token)?;
    if rows.is_empty() {
        return Err(Error::CohortAbsent(token.into()));
    }
    Ok(rows)
}

fn only_cohort(set: &SampleSet, token: &str) -> Result<SampleSet> {
    Ok(set.select(&set.rows_with_token(PURPOSE, token)?))
}

/// Trains and evaluates one phase on already loaded data and writes its outputs into `out`.
pub fn train_phase(config: &RunConfig, data: &PhaseData, cohort: Option<&CohortConfig>, out: &Path) -> Result<PhaseReport> {
    let phase = data.phase;
    let pc: PhaseConfig = config.phase(phase);
    let grid = pc.grid().stage("config")?;

    let cohort_report = cohort
        .map(|c| -> Result<CohortReport> {
            let rows = cohort_rows(&data.set, &c.token)?;
            Ok(CohortReport {
                token: c.token.clone(),
                scope: c.scope,
                share: rows.len() as f64 / data.set.len() as f64,
                rows: rows.len(),
            })
        })
        .transpose()
        .stage("cohort")?;

    let set = drop_low_coverage(&data.set, config.coverage_threshold).stage("preprocess")?;
    let split = SplitSpec::new(pc.train_fraction()).with_cutoff(config.cutoff);
    let (mut train, mut test) = time_split(&set, &split).stage("split")?;
    if let Some(c) = cohort {
        let filtered = (|| -> Result<()> {
            test = only_cohort(&test, &c.token)?;
            if c.scope == CohortScope::TrainAndTest {
                train = only_cohort(&train, &c.token)?;
            }
            Ok(())
        })();
        filtered.stage("cohort")?;
    }
    if pc.family.is_mlp() && !pc.mlp.categorical {
        train = train.without_categorical();
        test = test.without_categorical();
    }
    let (fit_full, validation) = time_split(&train, &SplitSpec::new(pc.selection_fraction)).stage("split")?;
    let fit = if pc.downsample() {
        downsample_majority(&fit_full, config.seed_for(phase, "downsample")).stage("preprocess")?
    } else {
        fit_full.clone()
    };

    let state = PreprocessState::fit(&fit).stage("preprocess")?;
    let encode = |s: &SampleSet| -> Result<Labeled> {
        let (x, y) = state.apply(s)?;
        Ok(Labeled::new(x, y)?)
    };
    let fit_xy = encode(&fit).stage("preprocess")?;
    let val_xy = encode(&validation).stage("preprocess")?;
    let test_xy = encode(&test).stage("preprocess")?;

    let train_config = pc.train_config(config.seed_for(phase, "train"));
    let (grid_result, model) =
        grid_search(&grid, &train_config, &fit_xy, &val_xy, Some(&test_xy), pc.objective).stage("train")?;
    let comparison = ObjectiveComparison::from_cells(grid_result.cells.clone()).stage("train")?;

    let preprocess = PreprocessArtifact::new(phase, state);
    let best = grid_result.best_cell().clone();
    let artifact = ModelArtifact::new(&preprocess, best.hyperparams.clone(), model);
    let id = artifact.model_id.clone();
    let (fit_report, val_report) = match &best.outcome {
        CellOutcome::Trained { fit, validation, .. } => (fit.clone(), validation.clone()),
        CellOutcome::Failed { .. } => unreachable!("selected cell was trained"),
    };
    let test_report = grid_result.test.clone().expect("test split supplied");

    let report = PhaseReport {
        schema_version: crate::artifact::SCHEMA_VERSION,
        phase,
        family: pc.family,
        model_id: id.clone(),
        preprocess_id: preprocess.preprocess_id.clone(),
        cohort: cohort_report,
        data: DataReport {
            parse: data.parse.clone(),
            status: data.status.clone(),
            rows: data.set.len(),
            classes: ClassCounts::of(&data.set),
            dropped_columns: set.dropped().to_vec(),
            cutoff: config.cutoff,
            train: SplitReport::of(&train),
            fit_before_downsampling: SplitReport::of(&fit_full),
            fit: SplitReport::of(&fit),
            validation: SplitReport::of(&validation),
            test: SplitReport::of(&test),
        },
        feature_names: artifact.feature_names.clone(),
        selected: best.hyperparams.clone(),
        fit: EvalReport { model_id: id.clone(), ..fit_report },
        validation: EvalReport { model_id: id.clone(), ..val_report },
        test: EvalReport { model_id: id, ..test_report },
        objectives: ObjectiveSelections {
            recall_macro_gap: comparison.recall_macro_gap(),
            recall_macro: comparison.recall_macro,
            auc: comparison.auc,
        },
        grid: grid_result,
    };

    let written = (|| -> Result<()> {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let summary = out.join(PARSE_SUMMARY_FILE);
        fs::write(&summary, data.summary_text()).map_err(|e| Error::io(&summary, e))?;
        write_json(&out.join(PREPROCESS_FILE), &preprocess)?;
        write_json(&out.join(MODEL_FILE), &artifact)?;
        write_json(&out.join(REPORT_FILE), &report)?;
        crate::report::write_grid_csv(&out.join(GRID_FILE), &report.grid)
    })();
    written.stage("write")?;
    Ok(report)
}

/// Loads the data for `phase` and runs it into `<out_dir>/<phase>`.
/// A configured cohort filter applies with its configured scope.
pub fn run_phase(config: &RunConfig, phase: Phase) -> Result<PhaseReport> {
    let data = load_phase(config, phase).stage("ingest")?;
    train_phase(config, &data, config.cohort.as_ref(), &config.data.out_dir.join(phase.name()))
}

pub fn run_phase1(config: &RunConfig) -> Result<PhaseReport> {
    run_phase(config, Phase::One)
}

pub fn run_phase2(config: &RunConfig) -> Result<PhaseReport> {
    run_phase(config, Phase::Two)
}

/// One cell of the phase x scope comparison, scored on cohort test rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortCell {
    pub phase: Phase,
    pub scope: CohortScope,
    pub model_id: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub auc: f64,
    pub recall_class0: f64,
    pub recall_class1: f64,
    pub recall_macro: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub token: String,
    pub phase1_share: f64,
    pub phase2_share: f64,
    pub cells: Vec<CohortCell>,
}

impl CohortSummary {
    pub fn cell(&self, phase: Phase, scope: CohortScope) -> Option<&CohortCell> {
        self.cells.iter().find(|c| c.phase == phase && c.scope == scope)
    }
}

pub const COHORT_DIR: &str = "cohort";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_CSV: &str = "summary.csv";

/// Runs both phases with both cohort scopes into `<out_dir>/cohort/<phase>_<scope>`,
/// plus a side-by-side summary.
pub fn run_cohort_suite(config: &RunConfig) -> Result<CohortSummary> {
    let token = config
        .cohort
        .as_ref()
        .map(|c| c.token.clone())
        .ok_or_else(|| Error::Config("cohort suite needs a [cohort] token".into()))
        .stage("config")?;
    let root = config.data.out_dir.join(COHORT_DIR);
    let mut cells = Vec::new();
    let mut shares = [0.0; 2];
    for phase in [Phase::One, Phase::Two] {
        let data = load_phase(config, phase).stage("ingest")?;
        for scope in [CohortScope::TrainAndTest, CohortScope::TestOnly] {
            let cohort = CohortConfig { token: token.clone(), scope };
            let out = root.join(format!("{}_{}", phase.name(), scope.name()));
            let r = train_phase(config, &data, Some(&cohort), &out)?;
            shares[usize::from(phase.number() - 1)] = r.cohort.as_ref().map_or(0.0, |c| c.share);
            cells.push(CohortCell {
                phase,
                scope,
                model_id: r.model_id.clone(),
                train_rows: r.data.train.rows,
                test_rows: r.test.n_rows,
                auc: r.test.auc,
                recall_class0: r.test.recall_class0,
                recall_class1: r.test.recall_class1,
                recall_macro: r.test.recall_macro,
            });
        }
    }
    let summary = CohortSummary { token, phase1_share: shares[0], phase2_share: shares[1], cells };
    let written = (|| -> Result<()> {
        write_json(&root.join(SUMMARY_JSON), &summary)?;
        crate::report::write_cohort_csv(&root.join(SUMMARY_CSV), &summary)
    })();
    written.stage("write")?;
    Ok(summary)
}
