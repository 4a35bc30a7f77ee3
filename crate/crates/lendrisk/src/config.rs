//! TOML run configuration. Relative paths resolve against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use lendrisk_core::grid::{alpha_grid, linear_grid, mlp_grid, Hyperparams, Objective};
use lendrisk_core::linear::{ClassWeighting, LinearKind, Penalty, TrainConfig};
use lendrisk_core::neural::{node_grid, DEFAULT_DROPOUT_RATE, DEFAULT_N1, DEFAULT_N2};
use lendrisk_core::preprocess::DEFAULT_COVERAGE_THRESHOLD;
use lendrisk_core::rng;
use lendrisk_core::YearMonth;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::ColumnMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "phase1")]
    One,
    #[serde(rename = "phase2")]
    Two,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::One => "phase1",
            Phase::Two => "phase2",
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Phase::One => 1,
            Phase::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Logistic,
    Svm,
    /// The `(p, 1)` network: logistic regression trained through the MLP code path.
    MlpLinear,
    /// Two tanh hidden layers over the `n1 x n2` node grid.
    MlpDeep,
}

impl Family {
    pub fn is_mlp(self) -> bool {
        matches!(self, Family::MlpLinear | Family::MlpDeep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CohortScope {
    /// Train and test on cohort rows only.
    TrainAndTest,
    /// Train on every purpose, test on cohort rows.
    TestOnly,
}

impl CohortScope {
    pub fn name(self) -> &'static str {
        match self {
            CohortScope::TrainAndTest => "train_and_test",
            CohortScope::TestOnly => "test_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortConfig {
    pub token: String,
    #[serde(default = "default_scope")]
    pub scope: CohortScope,
}

fn default_scope() -> CohortScope {
    CohortScope::TrainAndTest
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub n1: Vec<usize>,
    pub n2: Vec<usize>,
    pub dropout_rate: f64,
    /// L2 strengths tried for the deep network.
    pub l2_alphas: Vec<f64>,
    /// Fixed L2 strength of the linear network.
    pub linear_l2_alpha: f64,
    /// Feed one-hot categorical columns to the network.
    pub categorical: bool,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            n1: DEFAULT_N1.to_vec(),
            n2: DEFAULT_N2.to_vec(),
            dropout_rate: DEFAULT_DROPOUT_RATE,
            l2_alphas: vec![0.0],
            linear_l2_alpha: 10.0,
            categorical: true,
        }
    }
}

/// Model and training settings for one phase. Unset optional fields take the
/// phase's defaults (see [`PhaseConfig::resolved`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    pub family: Family,
    pub train_fraction: Option<f64>,
    /// Fit share of the training portion; the rest is the validation set.
    pub selection_fraction: f64,
    pub objective: Objective,
    pub class_weighting: Option<ClassWeighting>,
    pub downsample: Option<bool>,
    pub penalties: Vec<Penalty>,
    pub alpha_min_exp: i32,
    pub alpha_max_exp: i32,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub mlp: MlpConfig,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            family: Family::Logistic,
            train_fraction: None,
            selection_fraction: 0.8,
            objective: Objective::RecallMacro,
            class_weighting: None,
            downsample: None,
            penalties: vec![Penalty::L2],
            alpha_min_exp: -5,
            alpha_max_exp: 5,
            learning_rate: train.learning_rate,
            batch_size: train.batch_size,
            max_epochs: train.max_epochs,
            patience: train.patience,
            mlp: MlpConfig::default(),
        }
    }
}

impl PhaseConfig {
    /// Copy with the phase defaults filled in: phase one splits 75/25 with
    /// balanced class weights, phase two splits 90/10 and downsamples.
    pub fn resolved(&self, phase: Phase) -> PhaseConfig {
        let mut c = self.clone();
        let (fraction, weighting, downsample) = match phase {
            Phase::One => (0.75, ClassWeighting::Balanced, false),
            Phase::Two => (0.90, ClassWeighting::None, true),
        };
        c.train_fraction.get_or_insert(fraction);
        c.class_weighting.get_or_insert(weighting);
        c.downsample.get_or_insert(downsample);
        c
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction.expect("resolved phase config")
    }

    pub fn downsample(&self) -> bool {
        self.downsample.expect("resolved phase config")
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed,
            class_weighting: self.class_weighting.expect("resolved phase config"),
        }
    }

    pub fn grid(&self) -> Result<Vec<Hyperparams>> {
        let grid = match self.family {
            Family::Logistic | Family::Svm => {
                if self.alpha_min_exp > self.alpha_max_exp {
                    return Err(Error::Config("alpha_min_exp exceeds alpha_max_exp".into()));
                }
                let kind = if self.family == Family::Logistic { LinearKind::Logistic } else { LinearKind::HingeSvm };
                linear_grid(kind, &self.penalties, &alpha_grid(self.alpha_min_exp, self.alpha_max_exp))
            }
            Family::MlpLinear => mlp_grid(&[Vec::new()], self.mlp.dropout_rate, &[self.mlp.linear_l2_alpha]),
            Family::MlpDeep => {
                let hidden: Vec<Vec<usize>> = node_grid(&self.mlp.n1, &self.mlp.n2).iter().map(|h| h.to_vec()).collect();
                mlp_grid(&hidden, self.mlp.dropout_rate, &self.mlp.l2_alphas)
            }
        };
        if grid.is_empty() {
            return Err(Error::Config("hyperparameter grid is empty".into()));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub accepted: PathBuf,
    pub rejected: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for DataPaths {
    fn default() -> Self {
        Self { accepted: "accepted.csv".into(), rejected: "rejected.csv".into(), out_dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Rows dated after this month are excluded before splitting.
    pub cutoff: Option<YearMonth>,
    pub coverage_threshold: f64,
    pub data: DataPaths,
    pub columns: ColumnMap,
    pub phase1: PhaseConfig,
    pub phase2: PhaseConfig,
    pub cohort: Option<CohortConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            cutoff: None,
            coverage_threshold: DEFAULT_COVERAGE_THRESHOLD,
            data: DataPaths::default(),
            columns: ColumnMap::default(),
            phase1: PhaseConfig::default(),
            phase2: PhaseConfig::default(),
            cohort: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` and resolves relative data paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.data.accepted, &mut config.data.rejected, &mut config.data.out_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn phase(&self, phase: Phase) -> PhaseConfig {
        match phase {
            Phase::One => self.phase1.resolved(phase),
            Phase::Two => self.phase2.resolved(phase),
        }
    }

    pub fn phase_mut(&mut self, phase: Phase) -> &mut PhaseConfig {
        match phase {
            Phase::One => &mut self.phase1,
            Phase::Two => &mut self.phase2,
        }
    }

    /// Seed for one named use within one phase.
    pub fn seed_for(&self, phase: Phase, purpose: &str) -> u64 {
        rng::derive_seed(&[self.seed, u64::from(phase.number()), rng::label_hash(purpose)])
    }
}
