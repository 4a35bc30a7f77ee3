//! Flat CSV views of grid results and cohort summaries.

use std::path::Path;

use lendrisk_core::grid::{CellOutcome, GridResult, Hyperparams};
use lendrisk_core::metrics::EvalReport;

use crate::error::{Error, Result};
use crate::pipeline::CohortSummary;

pub(crate) fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const GRID_HEADER: [&str; 22] = [
    "cell",
    "label",
    "family",
    "penalty",
    "alpha",
    "hidden",
    "dropout_rate",
    "l2_alpha",
    "status",
    "selected",
    "epochs_run",
    "best_epoch",
    "fit_auc",
    "fit_recall_class0",
    "fit_recall_class1",
    "fit_recall_macro",
    "validation_auc",
    "validation_recall_class0",
    "validation_recall_class1",
    "validation_recall_macro",
    "objective",
    "reason",
];

fn metric_cells(r: Option<&EvalReport>) -> [String; 4] {
    match r {
        Some(r) => [r.auc, r.recall_class0, r.recall_class1, r.recall_macro].map(|v| v.to_string()),
        None => Default::default(),
    }
}

/// One row per grid cell: hyperparameters, fit scores, validation scores.
pub fn write_grid_csv(path: &Path, grid: &GridResult) -> Result<()> {
    let rows = grid.cells.iter().enumerate().map(|(i, cell)| {
        let (family, penalty, alpha, hidden, dropout, l2) = match &cell.hyperparams {
            Hyperparams::Linear { kind, penalty, alpha } => (
                kind.name().to_string(),
                format!("{penalty:?}").to_lowercase(),
                alpha.to_string(),
                String::new(),
                String::new(),
                String::new(),
            ),
            Hyperparams::Mlp { hidden, dropout_rate, l2_alpha } => (
                "mlp".to_string(),
                String::new(),
                String::new(),
                hidden.iter().map(ToString::to_string).collect::<Vec<_>>().join("x"),
                dropout_rate.to_string(),
                l2_alpha.to_string(),
            ),
        };
        let (status, epochs, best_epoch, fit, val, reason) = match &cell.outcome {
            CellOutcome::Trained { fit, validation, epochs_run, best_epoch } => (
                "trained",
                epochs_run.to_string(),
                best_epoch.map(|e| e.to_string()).unwrap_or_default(),
                Some(fit),
                Some(validation),
                String::new(),
            ),
            CellOutcome::Failed { reason } => ("failed", String::new(), String::new(), None, None, reason.clone()),
        };
        let mut row = vec![
            i.to_string(),
            cell.hyperparams.label(),
            family,
            penalty,
            alpha,
            hidden,
            dropout,
            l2,
            status.to_string(),
            u8::from(i == grid.best).to_string(),
            epochs,
            best_epoch,
        ];
        row.extend(metric_cells(fit));
        row.extend(metric_cells(val));
        row.push(grid.objective.name().to_string());
        row.push(reason);
        row
    });
    write_rows(path, &GRID_HEADER, rows)
}

pub fn write_cohort_csv(path: &Path, summary: &CohortSummary) -> Result<()> {
    let header = [
        "token",
        "phase",
        "scope",
        "cohort_share",
        "train_rows",
        "test_rows",
        "auc",
        "recall_class0",
        "recall_class1",
        "recall_macro",
        "model_id",
    ];
    let rows = summary.cells.iter().map(|c| {
        let share = match c.phase.number() {
            1 => summary.phase1_share,
            _ => summary.phase2_share,
        };
        vec![
            summary.token.clone(),
            c.phase.name().to_string(),
            c.scope.name().to_string(),
            share.to_string(),
            c.train_rows.to_string(),
            c.test_rows.to_string(),
            c.auc.to_string(),
            c.recall_class0.to_string(),
            c.recall_class1.to_string(),
            c.recall_macro.to_string(),
            c.model_id.clone(),
        ]
    });
    write_rows(path, &header, rows)
}
