//! Hyperparameter grid search with a selectable validation objective.
//!
//! Every cell is trained on the fit split and scored on the validation split.
//! The best cell maximizes the objective; ties go to the larger regularization
//! strength, then to the earlier cell. The test split is scored once, for the
//! selected cell only.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linear::{train_linear, LinearKind, LinearParams, Penalty, TrainConfig, TrainTrace};
use crate::matrix::Matrix;
use crate::metrics::{recall_report, EvalReport};
use crate::neural::{mlp_predict, train_mlp, MlpParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Objective {
    RecallMacro,
    Auc,
}

impl Objective {
    pub fn score(self, report: &EvalReport) -> f64 {
        match self {
            Objective::RecallMacro => report.recall_macro,
            Objective::Auc => report.auc,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::RecallMacro => "recall_macro",
            Objective::Auc => "auc",
        }
    }
}

/// One grid cell's settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum Hyperparams {
    Linear { kind: LinearKind, penalty: Penalty, alpha: f64 },
    Mlp { hidden: Vec<usize>, dropout_rate: f64, l2_alpha: f64 },
}

impl Hyperparams {
    /// Penalty strength, used for tie-breaking.
    pub fn regularization(&self) -> f64 {
        match self {
            Hyperparams::Linear { alpha, .. } => *alpha,
            Hyperparams::Mlp { l2_alpha, .. } => *l2_alpha,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Hyperparams::Linear { kind, penalty, alpha } => {
                let pen = match penalty {
                    Penalty::L1 => "l1",
                    Penalty::L2 => "l2",
                };
                format!("{}-{}-alpha{:e}", kind.name(), pen, alpha)
            }
            Hyperparams::Mlp { hidden, dropout_rate, l2_alpha } => {
                let shape: Vec<String> = hidden.iter().map(ToString::to_string).collect();
                format!("mlp-[{}]-dropout{}-l2{:e}", shape.join(","), dropout_rate, l2_alpha)
            }
        }
    }
}

/// `10^k` for each integer `k` in `min_exp..=max_exp`.
pub fn alpha_grid(min_exp: i32, max_exp: i32) -> Vec<f64> {
    (min_exp..=max_exp)
        .map(|k| {
            let mag = (0..k.unsigned_abs()).fold(1.0, |m, _| m * 10.0);
            if k >= 0 {
                mag
            } else {
                1.0 / mag
            }
        })
        .collect()
}

/// Penalties outermost, alphas inner. L1 and L2 are separate cells, never mixed.
pub fn linear_grid(kind: LinearKind, penalties: &[Penalty], alphas: &[f64]) -> Vec<Hyperparams> {
    penalties
        .iter()
        .flat_map(|&penalty| alphas.iter().map(move |&alpha| Hyperparams::Linear { kind, penalty, alpha }))
        .collect()
}

pub fn mlp_grid(hidden: &[Vec<usize>], dropout_rate: f64, l2_alphas: &[f64]) -> Vec<Hyperparams> {
    hidden
        .iter()
        .flat_map(|h| {
            l2_alphas.iter().map(move |&l2_alpha| Hyperparams::Mlp { hidden: h.clone(), dropout_rate, l2_alpha })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum Model {
    Linear(LinearParams),
    Mlp(MlpParams),
}

impl Model {
    /// Probabilities for logistic and MLP models, margins for SVMs.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            Model::Linear(p) => p.scores(x),
            Model::Mlp(p) => mlp_predict(p, x),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Model::Linear(p) => p.kind.threshold(),
            Model::Mlp(_) => 0.5,
        }
    }

    pub fn evaluate(&self, data: &Labeled) -> Result<EvalReport> {
        recall_report(&self.scores(&data.x)?, &data.y, self.threshold())
    }
}

/// A design matrix with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub x: Matrix,
    pub y: Vec<u8>,
}

impl Labeled {
    pub fn new(x: Matrix, y: Vec<u8>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch { what: "labels", expected: x.rows(), found: y.len() });
        }
        Ok(Self { x, y })
    }
}

pub fn train_model(hp: &Hyperparams, config: &TrainConfig, fit: &Labeled, validation: &Labeled) -> Result<(Model, TrainTrace)> {
    match hp {
        Hyperparams::Linear { kind, penalty, alpha } => {
            let (p, t) = train_linear(*kind, *alpha, *penalty, &fit.x, &fit.y, config, &validation.x, &validation.y)?;
            Ok((Model::Linear(p), t))
        }
        Hyperparams::Mlp { hidden, dropout_rate, l2_alpha } => {
            let (p, t) = train_mlp(hidden, *dropout_rate, *l2_alpha, &fit.x, &fit.y, config, &validation.x, &validation.y)?;
            Ok((Model::Mlp(p), t))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "status", rename_all = "snake_case"))]
#[allow(clippy::large_enum_variant)]
pub enum CellOutcome {
    Trained { fit: EvalReport, validation: EvalReport, epochs_run: usize, best_epoch: Option<usize> },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridCell {
    pub hyperparams: Hyperparams,
    pub outcome: CellOutcome,
}

impl GridCell {
    pub fn validation(&self) -> Option<&EvalReport> {
        match &self.outcome {
            CellOutcome::Trained { validation, .. } => Some(validation),
            CellOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridResult {
    pub objective: Objective,
    pub cells: Vec<GridCell>,
    pub best: usize,
    /// Test scores of the selected cell, when a test split was supplied.
    pub test: Option<EvalReport>,
}

impl GridResult {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }
}

/// Index of the best trained cell under `objective`, or `None` if all failed.
pub fn select_best(cells: &[GridCell], objective: Objective) -> Option<usize> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, cell) in cells.iter().enumerate() {
        let Some(v) = cell.validation() else { continue };
        let score = objective.score(v);
        let reg = cell.hyperparams.regularization();
        let better = match best {
            None => true,
            Some((_, s, r)) => score > s || (score == s && reg > r),
        };
        if better {
            best = Some((i, score, reg));
        }
    }
    best.map(|(i, _, _)| i)
}

fn run_cells(grid: &[Hyperparams], config: &TrainConfig, fit: &Labeled, validation: &Labeled) -> Result<(Vec<GridCell>, Vec<Option<Model>>)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut cells = Vec::with_capacity(grid.len());
    let mut models = Vec::with_capacity(grid.len());
    for hp in grid {
        let trained = train_model(hp, config, fit, validation).and_then(|(model, trace)| {
            let label = hp.label();
            let fit_report = model.evaluate(fit)?.named("fit", label.clone());
            let val_report = model.evaluate(validation)?.named("validation", label);
            Ok((model, trace, fit_report, val_report))
        });
        match trained {
            Ok((model, trace, fit_report, val_report)) => {
                cells.push(GridCell {
                    hyperparams: hp.clone(),
                    outcome: CellOutcome::Trained {
                        fit: fit_report,
                        validation: val_report,
                        epochs_run: trace.epochs.len(),
                        best_epoch: trace.best_epoch,
                    },
                });
                models.push(Some(model));
            }
            Err(e) => {
                cells.push(GridCell { hyperparams: hp.clone(), outcome: CellOutcome::Failed { reason: e.to_string() } });
                models.push(None);
            }
        }
    }
    Ok((cells, models))
}

/// Train every cell, select by `objective`, and score `test` with the winner.
/// Returns the result summary and the selected model.
pub fn grid_search(
    grid: &[Hyperparams],
    config: &TrainConfig,
    fit: &Labeled,
    validation: &Labeled,
    test: Option<&Labeled>,
    objective: Objective,
) -> Result<(GridResult, Model)> {
    let (cells, mut models) = run_cells(grid, config, fit, validation)?;
    let best = select_best(&cells, objective).ok_or(Error::AllCellsFailed)?;
    let model = models[best].take().expect("selected cell was trained");
    let test = test
        .map(|t| model.evaluate(t).map(|r| r.named("test", cells[best].hyperparams.label())))
        .transpose()?;
    Ok((GridResult { objective, cells, best, test }, model))
}

/// The cell one objective would pick, with its validation scores.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Selection {
    pub objective: Objective,
    pub best: usize,
    pub hyperparams: Hyperparams,
    pub validation: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectiveComparison {
    pub cells: Vec<GridCell>,
    pub recall_macro: Selection,
    pub auc: Selection,
}

impl ObjectiveComparison {
    pub fn from_cells(cells: Vec<GridCell>) -> Result<Self> {
        let pick = |objective| -> Result<Selection> {
            let best = select_best(&cells, objective).ok_or(Error::AllCellsFailed)?;
            Ok(Selection {
                objective,
                best,
                hyperparams: cells[best].hyperparams.clone(),
                validation: cells[best].validation().cloned().expect("selected cell was trained"),
            })
        };
        let recall_macro = pick(Objective::RecallMacro)?;
        let auc = pick(Objective::Auc)?;
        Ok(Self { cells, recall_macro, auc })
    }

    /// Validation recall-macro gap between the two selections.
    pub fn recall_macro_gap(&self) -> f64 {
        libm::fabs(self.recall_macro.validation.recall_macro - self.auc.validation.recall_macro)
    }
}

/// Train the grid once and report which cell each objective selects.
pub fn compare_objectives(grid: &[Hyperparams], config: &TrainConfig, fit: &Labeled, validation: &Labeled) -> Result<ObjectiveComparison> {
    let (cells, _) = run_cells(grid, config, fit, validation)?;
    ObjectiveComparison::from_cells(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Confusion;
    use alloc::vec;

    fn report(recall_macro: f64, auc: f64) -> EvalReport {
        EvalReport {
            auc,
            recall_class0: recall_macro,
            recall_class1: recall_macro,
            recall_macro,
            confusion: Confusion::default(),
            threshold: 0.5,
            n_rows: 0,
            split_name: "validation".into(),
            model_id: String::new(),
        }
    }

    fn cell(alpha: f64, rm: f64, auc: f64) -> GridCell {
        GridCell {
            hyperparams: Hyperparams::Linear { kind: LinearKind::Logistic, penalty: Penalty::L2, alpha },
            outcome: CellOutcome::Trained { fit: report(rm, auc), validation: report(rm, auc), epochs_run: 1, best_epoch: Some(0) },
        }
    }

    #[test]
    fn widest_alpha_grid_has_eleven_powers_of_ten() {
        let g = alpha_grid(-5, 5);
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 1e-5);
        assert_eq!(g[5], 1.0);
        assert_eq!(g[10], 1e5);
        assert_eq!(g[2], 1e-3);
        assert_eq!(linear_grid(LinearKind::Logistic, &[Penalty::L2], &g).len(), 11);
        assert_eq!(linear_grid(LinearKind::HingeSvm, &[Penalty::L1, Penalty::L2], &g).len(), 22);
    }

    #[test]
    fn ties_prefer_stronger_regularization() {
        let cells = vec![cell(0.01, 0.7, 0.8), cell(1.0, 0.7, 0.8), cell(0.1, 0.7, 0.8)];
        assert_eq!(select_best(&cells, Objective::RecallMacro), Some(1));
        let cells = vec![cell(1.0, 0.7, 0.8), cell(1.0, 0.7, 0.8)];
        assert_eq!(select_best(&cells, Objective::Auc), Some(0));
    }

    #[test]
    fn failed_cells_excluded() {
        let mut cells = vec![cell(0.01, 0.6, 0.8), cell(1.0, 0.9, 0.9)];
        cells[1].outcome = CellOutcome::Failed { reason: "diverged".into() };
        assert_eq!(select_best(&cells, Objective::RecallMacro), Some(0));
        cells[0].outcome = CellOutcome::Failed { reason: "diverged".into() };
        assert_eq!(select_best(&cells, Objective::RecallMacro), None);
    }

    #[test]
    fn objectives_can_disagree() {
        let cells = vec![cell(0.01, 0.75, 0.80), cell(1.0, 0.60, 0.85)];
        let cmp = ObjectiveComparison::from_cells(cells).unwrap();
        assert_eq!(cmp.recall_macro.best, 0);
        assert_eq!(cmp.auc.best, 1);
        assert!((cmp.recall_macro_gap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn identical_cells_give_identical_selections() {
        let cells = vec![cell(0.5, 0.7, 0.8); 3];
        let cmp = ObjectiveComparison::from_cells(cells).unwrap();
        assert_eq!(cmp.recall_macro.best, cmp.auc.best);
    }

    fn toy(seed: u64, n: usize) -> Labeled {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![4.0 * crate::rng::keyed_uniform(&[seed, i as u64]) - 2.0, 4.0 * crate::rng::keyed_uniform(&[seed, 99, i as u64]) - 2.0])
            .collect();
        let y = rows
            .iter()
            .enumerate()
            .map(|(i, r)| u8::from(crate::math::sigmoid(2.0 * r[0] - r[1]) > crate::rng::keyed_uniform(&[seed, 7, i as u64])))
            .collect();
        Labeled::new(Matrix::from_rows(&rows).unwrap(), y).unwrap()
    }

    #[test]
    fn single_cell_grid_selects_it_and_scores_test() {
        let (fit, val, test) = (toy(1, 300), toy(2, 100), toy(3, 100));
        let grid = linear_grid(LinearKind::Logistic, &[Penalty::L2], &[0.01]);
        let cfg = TrainConfig { batch_size: 32, ..TrainConfig::default() };
        let (res, model) = grid_search(&grid, &cfg, &fit, &val, Some(&test), Objective::RecallMacro).unwrap();
        assert_eq!(res.best, 0);
        let t = res.test.unwrap();
        assert_eq!(t, model.evaluate(&test).unwrap().named("test", grid[0].label()));
        assert!(t.auc > 0.8);
    }

    #[test]
    fn grid_is_deterministic() {
        let (fit, val) = (toy(4, 200), toy(5, 80));
        let grid = linear_grid(LinearKind::HingeSvm, &[Penalty::L1, Penalty::L2], &alpha_grid(-3, 1));
        let cfg = TrainConfig { batch_size: 16, max_epochs: 20, ..TrainConfig::default() };
        let a = grid_search(&grid, &cfg, &fit, &val, None, Objective::Auc).unwrap();
        let b = grid_search(&grid, &cfg, &fit, &val, None, Objective::Auc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_grid_and_all_failures_are_fatal() {
        let (fit, val) = (toy(6, 50), toy(7, 20));
        let cfg = TrainConfig::default();
        assert_eq!(grid_search(&[], &cfg, &fit, &val, None, Objective::Auc).unwrap_err(), Error::EmptyGrid);
        let bad = vec![Hyperparams::Mlp { hidden: vec![3, 2], dropout_rate: 0.9, l2_alpha: 0.0 }];
        assert_eq!(grid_search(&bad, &cfg, &fit, &val, None, Objective::Auc).unwrap_err(), Error::AllCellsFailed);
    }
}
