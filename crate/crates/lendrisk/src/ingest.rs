//! Reading the accepted/rejected CSV exports and building labeled sample sets.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use lendrisk_core::{CategoricalColumn, NumericColumn, SampleSet, YearMonth};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{field, ColumnMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Accepted,
    Rejected,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Accepted => "accepted",
            Source::Rejected => "rejected",
        }
    }
}

/// One data row, keyed by logical field name. Empty cells are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct LoanRecord {
    pub source: Source,
    pub date: YearMonth,
    pub fields: BTreeMap<&'static str, String>,
}

impl LoanRecord {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.fields.get(name).map(String::as_str)
    }

    fn number(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(parse_number)
    }

    fn token(&self, name: &str) -> Option<String> {
        self.get(name).and_then(normalize_token)
    }
}

/// Row accounting for one file: `rows_read = retained + dropped_bad_date + dropped_malformed`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseSummary {
    pub source: Source,
    pub rows_read: usize,
    pub retained: usize,
    pub dropped_bad_date: usize,
    pub dropped_malformed: usize,
}

impl ParseSummary {
    fn new(source: Source) -> Self {
        Self { source, rows_read: 0, retained: 0, dropped_bad_date: 0, dropped_malformed: 0 }
    }

    pub fn dropped(&self) -> usize {
        self.dropped_bad_date + self.dropped_malformed
    }
}

impl fmt::Display for ParseSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.source.name();
        writeln!(f, "{s}.rows_read {}", self.rows_read)?;
        writeln!(f, "{s}.retained {}", self.retained)?;
        writeln!(f, "{s}.dropped.bad_date {}", self.dropped_bad_date)?;
        writeln!(f, "{s}.dropped.malformed {}", self.dropped_malformed)
    }
}

/// Streams [`LoanRecord`]s out of one CSV file.
///
/// Rows with the wrong number of cells or invalid UTF-8 are skipped as
/// malformed; rows without a parseable date are skipped as `bad_date`.
pub struct RecordReader<R> {
    reader: csv::Reader<R>,
    path: PathBuf,
    source: Source,
    columns: Vec<(&'static str, usize)>,
    date_index: usize,
    summary: ParseSummary,
    raw: csv::StringRecord,
}

impl<R> fmt::Debug for RecordReader<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RecordReader").field("path", &self.path).field("summary", &self.summary).finish()
    }
}

impl RecordReader<File> {
    pub fn open(path: &Path, source: Source, map: &ColumnMap) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, path, source, map)
    }
}

impl<R: Read> RecordReader<R> {
    /// `path` is only used in error messages.
    pub fn from_reader(input: R, path: &Path, source: Source, map: &ColumnMap) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
        let pairs = match source {
            Source::Accepted => map.accepted.pairs(),
            Source::Rejected => map.rejected.pairs(),
        };
        let mut columns = Vec::new();
        let mut missing = Vec::new();
        for (name, header) in pairs {
            // An empty header leaves the field unmapped, except for the date.
            if header.is_empty() && name != field::DATE {
                continue;
            }
            match headers.iter().position(|h| h.trim() == header) {
                Some(i) => columns.push((name, i)),
                None => missing.push(header.to_string()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingColumns { path: path.into(), columns: missing });
        }
        let date_index = columns.iter().find(|(n, _)| *n == field::DATE).map(|c| c.1).expect("date column mapped");
        Ok(Self {
            reader,
            path: path.into(),
            source,
            columns,
            date_index,
            summary: ParseSummary::new(source),
            raw: csv::StringRecord::new(),
        })
    }

    pub fn summary(&self) -> &ParseSummary {
        &self.summary
    }

    pub fn headers(&mut self) -> Result<csv::StringRecord> {
        self.reader.headers().cloned().map_err(|e| Error::csv(&self.path, e))
    }

    /// Next data row as raw cells plus its parsed record, `None` for skipped rows.
    pub fn next_raw(&mut self) -> Option<Result<(csv::StringRecord, Option<LoanRecord>)>> {
        match self.reader.read_record(&mut self.raw) {
            Ok(false) => None,
            Ok(true) => {
                self.summary.rows_read += 1;
                let record = self.parse_current();
                Some(Ok((self.raw.clone(), record)))
            }
            Err(e) if is_row_error(&e) => {
                self.summary.rows_read += 1;
                self.summary.dropped_malformed += 1;
                Some(Ok((csv::StringRecord::new(), None)))
            }
            Err(e) => Some(Err(Error::csv(&self.path, e))),
        }
    }

    fn parse_current(&mut self) -> Option<LoanRecord> {
        let Some(date) = parse_month(&self.raw[self.date_index]) else {
            self.summary.dropped_bad_date += 1;
            return None;
        };
        let mut fields = BTreeMap::new();
        for &(name, i) in &self.columns {
            let v = self.raw[i].trim();
            if !v.is_empty() {
                fields.insert(name, v.to_string());
            }
        }
        self.summary.retained += 1;
        Some(LoanRecord { source: self.source, date, fields })
    }
}

fn is_row_error(e: &csv::Error) -> bool {
    matches!(e.kind(), csv::ErrorKind::UnequalLengths { .. } | csv::ErrorKind::Utf8 { .. })
}

impl<R: Read> Iterator for RecordReader<R> {
    type Item = Result<LoanRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.next_raw()? {
                Ok((_, Some(rec))) => return Some(Ok(rec)),
                Ok((_, None)) => continue,
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

/// All records of an accepted-loans file.
pub fn parse_accepted(path: &Path, map: &ColumnMap) -> Result<(Vec<LoanRecord>, ParseSummary)> {
    read_all(RecordReader::open(path, Source::Accepted, map)?)
}

/// All records of a rejected-applications file.
pub fn parse_rejected(path: &Path, map: &ColumnMap) -> Result<(Vec<LoanRecord>, ParseSummary)> {
    read_all(RecordReader::open(path, Source::Rejected, map)?)
}

fn read_all<R: Read>(mut reader: RecordReader<R>) -> Result<(Vec<LoanRecord>, ParseSummary)> {
    let records = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((records, reader.summary.clone()))
}

/// `Mon-YYYY` or `YYYY-MM-DD`, reduced to the month.
pub fn parse_month(s: &str) -> Option<YearMonth> {
    let s = s.trim();
    let date = NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(&format!("01-{s}"), "%d-%b-%Y"))
        .ok()?;
    YearMonth::new(date.year(), date.month() as u8)
}

/// Plain decimal with an optional trailing `%`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let s = s.strip_suffix('%').unwrap_or(s).trim();
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// `"10+ years"` → 10, `"< 1 year"` → 0, `"n years"` → n; anything else is missing.
pub fn parse_emp_length(s: &str) -> Option<f64> {
    let s = s.trim().to_ascii_lowercase();
    if s.starts_with('<') {
        return Some(0.0);
    }
    let digits: String = s.chars().take_while(char::is_ascii_digit).collect();
    let rest = s[digits.len()..].trim_start_matches('+').trim();
    if digits.is_empty() || !(rest == "year" || rest == "years") {
        return None;
    }
    digits.parse::<u32>().ok().map(|n| f64::from(n.min(10)))
}

/// `" 36 months"` → 36.
pub fn parse_term(s: &str) -> Option<f64> {
    let s = s.trim();
    parse_number(s.strip_suffix("months").unwrap_or(s))
}

/// Lower-cased, trimmed token; empty is missing.
pub fn normalize_token(s: &str) -> Option<String> {
    let t = s.trim().to_lowercase();
    (!t.is_empty()).then_some(t)
}

/// `Fully Paid` → 0, `Charged Off` / `Default` → 1, anything else excluded.
pub fn status_label(s: &str) -> Option<u8> {
    match s.trim() {
        "Fully Paid" => Some(0),
        "Charged Off" | "Default" => Some(1),
        _ => None,
    }
}

pub const PHASE1_NUMERIC: [&str; 3] = ["dti", "emp_length", "loan_amount"];
pub const PHASE1_CATEGORICAL: [&str; 1] = ["purpose"];

pub const PHASE2_NUMERIC: [&str; 15] = [
    "loan_amount",
    "term",
    "installment",
    "emp_length",
    "dti",
    "earliest_credit_line_years",
    "open_credit_lines",
    "derogatory_public_records",
    "revolving_utilization",
    "total_credit_lines",
    "mortgage_credit_lines",
    "bankruptcies",
    "log_annual_income",
    "fico",
    "log_revolving_balance",
];
pub const PHASE2_CATEGORICAL: [&str; 3] = ["home_ownership", "verification_status", "purpose"];

/// Phase-one feature values of any record, in [`PHASE1_NUMERIC`] / [`PHASE1_CATEGORICAL`] order.
pub fn phase1_features(rec: &LoanRecord) -> ([Option<f64>; 3], [Option<String>; 1]) {
    (
        [
            rec.number(field::DTI),
            rec.get(field::EMP_LENGTH).and_then(parse_emp_length),
            rec.number(field::LOAN_AMOUNT),
        ],
        [rec.token(field::PURPOSE)],
    )
}

/// Phase-two feature values of an accepted record.
pub fn phase2_features(rec: &LoanRecord) -> ([Option<f64>; 15], [Option<String>; 3]) {
    let history = rec
        .get(field::EARLIEST_CREDIT_LINE)
        .and_then(parse_month)
        .map(|first| f64::from(rec.date.months_since(first)) / 12.0)
        .filter(|&y| y >= 0.0);
    let income = rec.number(field::ANNUAL_INCOME).filter(|&v| v > 0.0).map(f64::ln);
    let fico = match (rec.number(field::FICO_LOW), rec.number(field::FICO_HIGH)) {
        (Some(lo), Some(hi)) => Some((lo + hi) / 2.0),
        (lo, hi) => lo.or(hi),
    };
    let balance = rec.number(field::REVOLVING_BALANCE).filter(|&v| v >= 0.0).map(f64::ln_1p);
    (
        [
            rec.number(field::LOAN_AMOUNT),
            rec.get(field::TERM).and_then(parse_term),
            rec.number(field::INSTALLMENT),
            rec.get(field::EMP_LENGTH).and_then(parse_emp_length),
            rec.number(field::DTI),
            history,
            rec.number(field::OPEN_CREDIT_LINES),
            rec.number(field::DEROGATORY_PUBLIC_RECORDS),
            rec.number(field::REVOLVING_UTILIZATION),
            rec.number(field::TOTAL_CREDIT_LINES),
            rec.number(field::MORTGAGE_CREDIT_LINES),
            rec.number(field::BANKRUPTCIES),
            income,
            fico,
            balance,
        ],
        [rec.token(field::HOME_OWNERSHIP), rec.token(field::VERIFICATION_STATUS), rec.token(field::PURPOSE)],
    )
}

/// Column-wise accumulator for a [`SampleSet`].
#[derive(Debug)]
pub struct SetBuilder {
    numeric_names: Vec<&'static str>,
    categorical_names: Vec<&'static str>,
    numeric: Vec<Vec<Option<f64>>>,
    categorical: Vec<Vec<Option<String>>>,
    dates: Vec<YearMonth>,
    labels: Vec<u8>,
}

impl SetBuilder {
    pub fn new(numeric_names: &[&'static str], categorical_names: &[&'static str]) -> Self {
        Self {
            numeric_names: numeric_names.to_vec(),
            categorical_names: categorical_names.to_vec(),
            numeric: vec![Vec::new(); numeric_names.len()],
            categorical: vec![Vec::new(); categorical_names.len()],
            dates: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn phase1() -> Self {
        Self::new(&PHASE1_NUMERIC, &PHASE1_CATEGORICAL)
    }

    pub fn phase2() -> Self {
        Self::new(&PHASE2_NUMERIC, &PHASE2_CATEGORICAL)
    }

    pub fn push(&mut self, numeric: &[Option<f64>], categorical: &[Option<String>], date: YearMonth, label: u8) {
        for (col, v) in self.numeric.iter_mut().zip(numeric) {
            col.push(*v);
        }
        for (col, v) in self.categorical.iter_mut().zip(categorical) {
            col.push(v.clone());
        }
        self.dates.push(date);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn finish(self) -> Result<SampleSet> {
        let numeric = self.numeric_names.iter().zip(self.numeric).map(|(n, v)| NumericColumn::new(*n, v)).collect();
        let categorical =
            self.categorical_names.iter().zip(self.categorical).map(|(n, v)| CategoricalColumn::new(*n, v)).collect();
        Ok(SampleSet::new(numeric, categorical, self.dates, self.labels)?)
    }
}

/// Accepted rows (label 1) followed by rejected rows (label 0), in input order.
pub fn build_phase1(
    accepted: impl IntoIterator<Item = LoanRecord>,
    rejected: impl IntoIterator<Item = LoanRecord>,
) -> Result<SampleSet> {
    let mut b = SetBuilder::phase1();
    for (label, records) in [(1u8, accepted.into_iter().collect::<Vec<_>>()), (0, rejected.into_iter().collect())] {
        if records.is_empty() {
            return Err(lendrisk_core::Error::ClassAbsent(label).into());
        }
        for rec in &records {
            let (num, cat) = phase1_features(rec);
            b.push(&num, &cat, rec.date, label);
        }
    }
    b.finish()
}

/// Loans kept and dropped by the status filter.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusSummary {
    pub fully_paid: usize,
    pub defaulted: usize,
    /// Excluded rows by raw status text.
    pub excluded: BTreeMap<String, usize>,
}

impl StatusSummary {
    pub fn retained(&self) -> usize {
        self.fully_paid + self.defaulted
    }

    pub fn excluded_total(&self) -> usize {
        self.excluded.values().sum()
    }
}

impl fmt::Display for StatusSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "status.fully_paid {}", self.fully_paid)?;
        writeln!(f, "status.defaulted {}", self.defaulted)?;
        for (status, n) in &self.excluded {
            writeln!(f, "status.excluded[{status}] {n}")?;
        }
        Ok(())
    }
}

/// Fully paid (0) and defaulted (1) loans only, in input order.
pub fn build_phase2(accepted: impl IntoIterator<Item = LoanRecord>) -> Result<(SampleSet, StatusSummary)> {
    let mut b = SetBuilder::phase2();
    let mut summary = StatusSummary::default();
    for rec in accepted {
        let status = rec.get(field::STATUS).unwrap_or("");
        let Some(label) = status_label(status) else {
            *summary.excluded.entry(status.to_string()).or_default() += 1;
            continue;
        };
        if label == 1 {
            summary.defaulted += 1;
        } else {
            summary.fully_paid += 1;
        }
        let (num, cat) = phase2_features(&rec);
        b.push(&num, &cat, rec.date, label);
    }
    if b.is_empty() {
        return Err(lendrisk_core::Error::EmptyInput("fully paid or defaulted loans").into());
    }
    Ok((b.finish()?, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reader(text: &str, source: Source) -> Result<RecordReader<&[u8]>> {
        RecordReader::from_reader(text.as_bytes(), Path::new("mem.csv"), source, &ColumnMap::default())
    }

    const REJECTED_HEADER: &str =
        "Amount Requested,Application Date,Loan Title,Risk_Score,Debt-To-Income Ratio,Zip Code,State,Employment Length,Policy Code\n";

    #[test]
    fn months_in_both_formats() {
        assert_eq!(parse_month("Dec-2015"), YearMonth::new(2015, 12));
        assert_eq!(parse_month("2007-05-26"), YearMonth::new(2007, 5));
        assert_eq!(parse_month(""), None);
        assert_eq!(parse_month("2015-13-01"), None);
    }

    #[test]
    fn employment_length_map() {
        assert_eq!(parse_emp_length("10+ years"), Some(10.0));
        assert_eq!(parse_emp_length("< 1 year"), Some(0.0));
        assert_eq!(parse_emp_length("1 year"), Some(1.0));
        assert_eq!(parse_emp_length("7 years"), Some(7.0));
        assert_eq!(parse_emp_length("n/a"), None);
        assert_eq!(parse_emp_length(""), None);
    }

    #[test]
    fn numbers_and_terms() {
        assert_eq!(parse_number("15.2%"), Some(15.2));
        assert_eq!(parse_number(" 3 "), Some(3.0));
        assert_eq!(parse_number("x"), None);
        assert_eq!(parse_number("inf"), None);
        assert_eq!(parse_term(" 36 months"), Some(36.0));
        assert_eq!(normalize_token("  Small_Business "), Some("small_business".into()));
        assert_eq!(normalize_token("  "), None);
    }

    #[test]
    fn rejected_row_fields() {
        let text = format!("{REJECTED_HEADER}1000,2012-03-04,Car,600,15.2%,123xx,NY,10+ years,0\n");
        let recs: Vec<_> = reader(&text, Source::Rejected).unwrap().collect::<Result<_>>().unwrap();
        let (num, cat) = phase1_features(&recs[0]);
        assert_eq!(num, [Some(15.2), Some(10.0), Some(1000.0)]);
        assert_eq!(cat[0].as_deref(), Some("car"));
        assert_eq!(recs[0].get(field::STATUS), None);
    }

    #[test]
    fn empty_date_and_ragged_rows_are_counted() {
        let text = format!(
            "{REJECTED_HEADER}1000,,Car,600,15%,1,NY,1 year,0\n2000,2012-01-01,Car,600,15%,1,NY,1 year,0\n1,2\n"
        );
        let mut r = reader(&text, Source::Rejected).unwrap();
        let recs: Vec<_> = r.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(recs.len(), 1);
        let s = r.summary();
        assert_eq!((s.rows_read, s.retained, s.dropped_bad_date, s.dropped_malformed), (3, 1, 1, 1));
        assert_eq!(s.rows_read, s.retained + s.dropped());
    }

    #[test]
    fn missing_columns_are_listed() {
        let err = reader("Amount Requested,Loan Title\n", Source::Rejected).unwrap_err();
        match err {
            Error::MissingColumns { columns, .. } => {
                assert_eq!(columns, ["Application Date", "Debt-To-Income Ratio", "Employment Length"])
            }
            e => panic!("{e}"),
        }
    }

    fn accepted(status: &str, income: &str, balance: &str) -> LoanRecord {
        let mut fields = BTreeMap::new();
        fields.insert(field::STATUS, status.to_string());
        fields.insert(field::ANNUAL_INCOME, income.to_string());
        fields.insert(field::REVOLVING_BALANCE, balance.to_string());
        fields.insert(field::EARLIEST_CREDIT_LINE, "Jul-2005".to_string());
        fields.insert(field::FICO_LOW, "700".to_string());
        fields.insert(field::FICO_HIGH, "704".to_string());
        LoanRecord { source: Source::Accepted, date: YearMonth::new(2015, 1).unwrap(), fields }
    }

    #[test]
    fn phase2_status_filter_and_transforms() {
        let recs = vec![
            accepted("Fully Paid", "100000", "0"),
            accepted("Current", "1", "1"),
            accepted("Charged Off", "50000", "10"),
            accepted("Default", "0", "-3"),
        ];
        let (set, summary) = build_phase2(recs).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.labels(), [0, 1, 1]);
        assert_eq!(summary.excluded.get("Current"), Some(&1));
        let income = &set.numeric_column("log_annual_income").unwrap().values;
        assert!((income[0].unwrap() - 11.512_925_464_970_229).abs() < 1e-12);
        assert_eq!(income[2], None);
        let bal = &set.numeric_column("log_revolving_balance").unwrap().values;
        assert_eq!(bal[0], Some(0.0));
        assert_eq!(bal[2], None);
        assert_eq!(set.numeric_column("fico").unwrap().values[0], Some(702.0));
        assert_eq!(set.numeric_column("earliest_credit_line_years").unwrap().values[0], Some(9.5));
    }

    #[test]
    fn phase1_counts_and_order() {
        let rec = |source, m| LoanRecord { source, date: YearMonth::new(2014, m).unwrap(), fields: BTreeMap::new() };
        let acc = vec![rec(Source::Accepted, 5), rec(Source::Accepted, 1)];
        let rej = vec![rec(Source::Rejected, 3), rec(Source::Rejected, 2), rec(Source::Rejected, 9)];
        let set = build_phase1(acc.clone(), rej).unwrap();
        assert_eq!(set.len(), 5);
        assert_eq!(set.labels().iter().map(|&l| l as usize).sum::<usize>(), 2);
        assert_eq!(set.dates()[0].month(), 5);
        assert_eq!(set.dates()[4].month(), 9);
        assert!(build_phase1(acc, Vec::new()).is_err());
    }
}
