//! Column-oriented labeled sample sets.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Calendar month. Ordering is chronological.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    /// Months since year 0, January.
    pub fn ordinal(self) -> i32 {
        self.year * 12 + self.month as i32 - 1
    }

    pub fn from_ordinal(ordinal: i32) -> Self {
        Self { year: ordinal.div_euclid(12), month: (ordinal.rem_euclid(12) + 1) as u8 }
    }

    pub fn add_months(self, months: i32) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Signed number of months from `earlier` to `self`.
    pub fn months_since(self, earlier: YearMonth) -> i32 {
        self.ordinal() - earlier.ordinal()
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(alloc::format!("`{s}` is not a YYYY-MM month"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).ok_or_else(bad)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for YearMonth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    /// Non-missing rows over total rows.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DroppedColumn {
    pub name: String,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericColumn {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalColumn {
    pub name: String,
    pub values: Vec<Option<String>>,
}

fn coverage<T>(values: &[Option<T>]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| v.is_some()).count() as f64 / values.len() as f64
}

impl NumericColumn {
    pub fn new(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Self { name: name.into(), values }
    }

    pub fn coverage(&self) -> f64 {
        coverage(&self.values)
    }
}

impl CategoricalColumn {
    pub fn new(name: impl Into<String>, values: Vec<Option<String>>) -> Self {
        Self { name: name.into(), values }
    }

    pub fn coverage(&self) -> f64 {
        coverage(&self.values)
    }
}

/// Numeric and categorical feature columns with a date and a binary label per row.
///
/// All columns share one row count; numeric cells are finite or missing.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    numeric: Vec<NumericColumn>,
    categorical: Vec<CategoricalColumn>,
    dates: Vec<YearMonth>,
    labels: Vec<u8>,
    dropped: Vec<DroppedColumn>,
}

impl SampleSet {
    pub fn new(
        numeric: Vec<NumericColumn>,
        categorical: Vec<CategoricalColumn>,
        dates: Vec<YearMonth>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let n = labels.len();
        if dates.len() != n {
            return Err(Error::DimensionMismatch { what: "dates", expected: n, found: dates.len() });
        }
        for c in &numeric {
            if c.values.len() != n {
                return Err(Error::DimensionMismatch { what: "numeric column", expected: n, found: c.values.len() });
            }
            if c.values.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("numeric column"));
            }
        }
        for c in &categorical {
            if c.values.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "categorical column",
                    expected: n,
                    found: c.values.len(),
                });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidLabel(bad));
        }
        Ok(Self { numeric, categorical, dates, labels, dropped: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn numeric(&self) -> &[NumericColumn] {
        &self.numeric
    }

    pub fn categorical(&self) -> &[CategoricalColumn] {
        &self.categorical
    }

    pub fn dates(&self) -> &[YearMonth] {
        &self.dates
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Columns removed by coverage filtering, with their coverage at the time.
    pub fn dropped(&self) -> &[DroppedColumn] {
        &self.dropped
    }

    pub fn numeric_column(&self, name: &str) -> Option<&NumericColumn> {
        self.numeric.iter().find(|c| c.name == name)
    }

    pub fn categorical_column(&self, name: &str) -> Option<&CategoricalColumn> {
        self.categorical.iter().find(|c| c.name == name)
    }

    /// Numeric columns first, then categorical, each in stored order.
    pub fn columns(&self) -> Vec<ColumnMeta> {
        let num = self.numeric.iter().map(|c| ColumnMeta {
            name: c.name.clone(),
            kind: ColumnKind::Numeric,
            coverage: c.coverage(),
        });
        let cat = self.categorical.iter().map(|c| ColumnMeta {
            name: c.name.clone(),
            kind: ColumnKind::Categorical,
            coverage: c.coverage(),
        });
        num.chain(cat).collect()
    }

    /// `[negatives, positives]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - pos, pos]
    }

    /// Rows at the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> SampleSet {
        SampleSet {
            numeric: self
                .numeric
                .iter()
                .map(|c| NumericColumn { name: c.name.clone(), values: idx.iter().map(|&i| c.values[i]).collect() })
                .collect(),
            categorical: self
                .categorical
                .iter()
                .map(|c| CategoricalColumn {
                    name: c.name.clone(),
                    values: idx.iter().map(|&i| c.values[i].clone()).collect(),
                })
                .collect(),
            dates: idx.iter().map(|&i| self.dates[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dropped: self.dropped.clone(),
        }
    }

    /// Indices of rows whose categorical `column` equals `token`.
    pub fn rows_with_token(&self, column: &str, token: &str) -> Result<Vec<usize>> {
        let col = self.categorical_column(column).ok_or_else(|| Error::MissingColumn(column.into()))?;
        Ok(col
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.as_deref() == Some(token))
            .map(|(i, _)| i)
            .collect())
    }

    /// Same rows without any categorical columns.
    pub fn without_categorical(&self) -> SampleSet {
        SampleSet { categorical: Vec::new(), ..self.clone() }
    }

    pub(crate) fn retain_columns(
        &self,
        keep_numeric: impl Fn(&NumericColumn) -> bool,
        keep_categorical: impl Fn(&CategoricalColumn) -> bool,
        newly_dropped: Vec<DroppedColumn>,
    ) -> SampleSet {
        let mut dropped = self.dropped.clone();
        dropped.extend(newly_dropped);
        SampleSet {
            numeric: self.numeric.iter().filter(|c| keep_numeric(c)).cloned().collect(),
            categorical: self.categorical.iter().filter(|c| keep_categorical(c)).cloned().collect(),
            dates: self.dates.clone(),
            labels: self.labels.clone(),
            dropped,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn ym(y: i32, m: u8) -> YearMonth {
        YearMonth::new(y, m).unwrap()
    }

    #[test]
    fn year_month_arithmetic() {
        assert_eq!(ym(2015, 12).add_months(1), ym(2016, 1));
        assert_eq!(ym(2016, 1).months_since(ym(2014, 7)), 18);
        assert_eq!(YearMonth::from_ordinal(ym(2007, 3).ordinal()), ym(2007, 3));
        assert!(ym(2015, 12) < ym(2016, 1));
        assert_eq!("2016-01".parse::<YearMonth>().unwrap(), ym(2016, 1));
        assert!("2016-13".parse::<YearMonth>().is_err());
        assert_eq!(ym(2009, 4).to_string(), "2009-04");
    }

    #[test]
    fn rejects_ragged_and_bad_labels() {
        let d = vec![ym(2010, 1); 2];
        assert!(SampleSet::new(vec![NumericColumn::new("a", vec![Some(1.0)])], vec![], d.clone(), vec![0, 1]).is_err());
        assert!(SampleSet::new(vec![], vec![], d.clone(), vec![0, 2]).is_err());
        assert!(SampleSet::new(vec![NumericColumn::new("a", vec![Some(f64::NAN), None])], vec![], d, vec![0, 1]).is_err());
    }

    #[test]
    fn coverage_fraction() {
        let s = SampleSet::new(
            vec![NumericColumn::new("a", vec![Some(1.0), None, Some(2.0), None])],
            vec![CategoricalColumn::new("p", vec![Some("x".into()), Some("y".into()), None, Some("x".into())])],
            vec![ym(2010, 1); 4],
            vec![0, 1, 0, 1],
        )
        .unwrap();
        let cols = s.columns();
        assert_eq!(cols[0].coverage, 0.5);
        assert_eq!(cols[1].coverage, 0.75);
        assert_eq!(s.rows_with_token("p", "x").unwrap(), vec![0, 3]);
    }
}
