//! Monthly default/rejection series and their plot-data files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lendrisk_core::stats::{monthly_stats, suggest_cutoff, MonthCounts, MonthlyStats, SeriesPoint, MOVING_WINDOW_MONTHS};
use lendrisk_core::YearMonth;
use serde::{Deserialize, Serialize};

use crate::artifact::write_json;
use crate::config::RunConfig;
use crate::error::{Error, Result, StageExt};
use crate::ingest::{status_label, ParseSummary, RecordReader, Source};
use crate::report::write_rows;
use crate::schema::field;

pub const STATS_DIR: &str = "stats";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub window_months: i32,
    pub window: String,
    pub parse: Vec<ParseSummary>,
    /// Informational only; exclusion happens through the `cutoff` setting.
    pub suggested_cutoff: Option<YearMonth>,
    pub stats: MonthlyStats,
}

/// Per-month counts from both files.
pub fn count_months(config: &RunConfig) -> Result<(Vec<MonthCounts>, Vec<ParseSummary>)> {
    let mut months: BTreeMap<YearMonth, MonthCounts> = BTreeMap::new();
    fn entry(months: &mut BTreeMap<YearMonth, MonthCounts>, m: YearMonth) -> &mut MonthCounts {
        months.entry(m).or_insert(MonthCounts { month: m, accepted: 0, defaulted: 0, rejected: 0 })
    }
    let mut accepted = RecordReader::open(&config.data.accepted, Source::Accepted, &config.columns)?;
    for rec in accepted.by_ref() {
        let rec = rec?;
        let c = entry(&mut months, rec.date);
        c.accepted += 1;
        if rec.get(field::STATUS).and_then(status_label) == Some(1) {
            c.defaulted += 1;
        }
    }
    let mut rejected = RecordReader::open(&config.data.rejected, Source::Rejected, &config.columns)?;
    for rec in rejected.by_ref() {
        entry(&mut months, rec?.date).rejected += 1;
    }
    if months.is_empty() {
        return Err(Error::NoDates);
    }
    Ok((months.into_values().collect(), vec![accepted.summary().clone(), rejected.summary().clone()]))
}

fn series_rows(points: &[SeriesPoint]) -> impl Iterator<Item = Vec<String>> + '_ {
    points.iter().map(|p| {
        vec![p.month.to_string(), p.value.to_string(), p.moving_average.to_string(), p.moving_std.to_string()]
    })
}

/// Writes `months.csv`, one CSV per series, `stats.json` and `stats_report.txt`
/// into `<out_dir>/stats`.
pub fn stats_report(config: &RunConfig) -> Result<StatsReport> {
    let (counts, parse) = count_months(config).stage("ingest")?;
    let stats = monthly_stats(&counts);
    let report = StatsReport {
        window_months: MOVING_WINDOW_MONTHS,
        window: format!(
            "trailing: month t averages months t-{}..t that have data, clipped at series start",
            MOVING_WINDOW_MONTHS - 1
        ),
        parse,
        suggested_cutoff: suggest_cutoff(&stats.default_fraction),
        stats,
    };
    let dir = config.data.out_dir.join(STATS_DIR);
    write_stats(&dir, &report).stage("write")?;
    Ok(report)
}

fn write_stats(dir: &Path, report: &StatsReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let header = ["month", "value", "moving_average", "moving_std"];
    let s = &report.stats;
    write_rows(&dir.join("default_fraction.csv"), &header, series_rows(&s.default_fraction))?;
    write_rows(&dir.join("rejected_fraction.csv"), &header, series_rows(&s.rejected_fraction))?;
    write_rows(&dir.join("total_requested.csv"), &header, series_rows(&s.total_requested))?;
    let months = s.months.iter().map(|m| {
        vec![
            m.month.to_string(),
            m.accepted.to_string(),
            m.defaulted.to_string(),
            m.rejected.to_string(),
            m.requested().to_string(),
        ]
    });
    write_rows(&dir.join("months.csv"), &["month", "accepted", "defaulted", "rejected", "requested"], months)?;
    write_json(&dir.join("stats.json"), report)?;

    let mut text = String::new();
    let _ = writeln!(text, "# moving window: {} months, {}", report.window_months, report.window);
    let _ = writeln!(text, "# default fraction denominator: all accepted loans in the month");
    for p in &report.parse {
        text.push_str(&p.to_string());
    }
    let _ = writeln!(text, "months {}", s.months.len());
    if let (Some(a), Some(b)) = (s.months.first(), s.months.last()) {
        let _ = writeln!(text, "range {} {}", a.month, b.month);
    }
    match report.suggested_cutoff {
        Some(m) => {
            let _ = writeln!(text, "suggested_cutoff {m} (advisory; set `cutoff` to apply)");
        }
        None => {
            let _ = writeln!(text, "suggested_cutoff none");
        }
    }
    let path = dir.join("stats_report.txt");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
