//! Everything between raw sample sets and trainable design matrices.
//!
//! [`PreprocessState::fit`] only ever sees training rows; [`PreprocessState::apply`]
//! never refits. Splits are time-ordered, never random.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;

use crate::dataset::{DroppedColumn, SampleSet, YearMonth};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::rng;

/// Columns observed in fewer than this fraction of rows are excluded.
pub const DEFAULT_COVERAGE_THRESHOLD: f64 = 0.70;

/// Remove columns whose coverage is strictly below `threshold`.
pub fn drop_low_coverage(set: &SampleSet, threshold: f64) -> Result<SampleSet> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidFraction(threshold));
    }
    let mut dropped = Vec::new();
    for c in set.numeric() {
        if c.coverage() < threshold {
            dropped.push(DroppedColumn { name: c.name.clone(), coverage: c.coverage() });
        }
    }
    for c in set.categorical() {
        if c.coverage() < threshold {
            dropped.push(DroppedColumn { name: c.name.clone(), coverage: c.coverage() });
        }
    }
    if dropped.len() == set.numeric().len() + set.categorical().len() {
        return Err(Error::AllColumnsDropped);
    }
    Ok(set.retain_columns(|c| c.coverage() >= threshold, |c| c.coverage() >= threshold, dropped))
}

/// Imputation mean and standardization parameters of one numeric column.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NumericScaler {
    pub name: String,
    /// Mean of the observed training values; fills missing cells.
    pub impute_mean: f64,
    pub mean: f64,
    /// Population standard deviation after imputation, 1 for constant columns.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CategoricalVocab {
    pub name: String,
    /// Sorted, deduplicated training tokens.
    pub tokens: Vec<String>,
}

/// Fitted preprocessing. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreprocessState {
    pub numeric: Vec<NumericScaler>,
    pub categorical: Vec<CategoricalVocab>,
    pub dropped_columns: Vec<DroppedColumn>,
}

impl PreprocessState {
    /// Mean imputation, then population mean/std, then vocabularies, all from `train`.
    pub fn fit(train: &SampleSet) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyInput("training set"));
        }
        let mut numeric = Vec::with_capacity(train.numeric().len());
        for col in train.numeric() {
            let observed: Vec<f64> = col.values.iter().flatten().copied().collect();
            if observed.is_empty() {
                return Err(Error::ColumnAllMissing(col.name.clone()));
            }
            let impute_mean = observed.iter().sum::<f64>() / observed.len() as f64;
            let n = col.values.len() as f64;
            let mean = col.values.iter().map(|v| v.unwrap_or(impute_mean)).sum::<f64>() / n;
            let var = col
                .values
                .iter()
                .map(|v| {
                    let d = v.unwrap_or(impute_mean) - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            let std = math::sqrt(var);
            let floor = f64::EPSILON * math::abs(mean).max(1.0);
            let std = if std > floor { std } else { 1.0 };
            numeric.push(NumericScaler { name: col.name.clone(), impute_mean, mean, std });
        }
        let categorical = train
            .categorical()
            .iter()
            .map(|col| {
                let tokens: BTreeSet<&str> = col.values.iter().flatten().map(String::as_str).collect();
                CategoricalVocab { name: col.name.clone(), tokens: tokens.into_iter().map(String::from).collect() }
            })
            .collect();
        Ok(Self { numeric, categorical, dropped_columns: train.dropped().to_vec() })
    }

    /// Design-matrix width: scaled numeric columns, then one-hot blocks.
    pub fn width(&self) -> usize {
        self.numeric.len() + self.categorical.iter().map(|v| v.tokens.len()).sum::<usize>()
    }

    /// Names of design-matrix columns in order, `column=token` for one-hot cells.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.numeric.iter().map(|s| s.name.clone()).collect();
        for v in &self.categorical {
            names.extend(v.tokens.iter().map(|t| format!("{}={}", v.name, t)));
        }
        names
    }

    /// Encode `set` with the fitted parameters. Columns are looked up by name,
    /// so extra columns in `set` are ignored. Unseen or missing tokens encode
    /// as an all-zero block.
    pub fn apply(&self, set: &SampleSet) -> Result<(Matrix, Vec<u8>)> {
        let n = set.len();
        let width = self.width();
        let mut x = Matrix::zeros(n, width);
        for (j, scaler) in self.numeric.iter().enumerate() {
            let col = set.numeric_column(&scaler.name).ok_or_else(|| Error::MissingColumn(scaler.name.clone()))?;
            for (i, v) in col.values.iter().enumerate() {
                x.set(i, j, (v.unwrap_or(scaler.impute_mean) - scaler.mean) / scaler.std);
            }
        }
        let mut offset = self.numeric.len();
        for vocab in &self.categorical {
            let col = set.categorical_column(&vocab.name).ok_or_else(|| Error::MissingColumn(vocab.name.clone()))?;
            for (i, v) in col.values.iter().enumerate() {
                if let Some(tok) = v {
                    if let Ok(k) = vocab.tokens.binary_search(tok) {
                        x.set(i, offset + k, 1.0);
                    }
                }
            }
            offset += vocab.tokens.len();
        }
        Ok((x, set.labels().to_vec()))
    }
}

/// How to cut a set into an earlier training part and a later test part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    /// Rows dated after this month are discarded before splitting.
    pub cutoff: Option<YearMonth>,
}

impl SplitSpec {
    pub fn new(train_fraction: f64) -> Self {
        Self { train_fraction, cutoff: None }
    }

    pub fn with_cutoff(mut self, cutoff: Option<YearMonth>) -> Self {
        self.cutoff = cutoff;
        self
    }
}

/// Sort by (date, original index) and take the first `floor(fraction * n)` rows as train.
pub fn time_split(set: &SampleSet, spec: &SplitSpec) -> Result<(SampleSet, SampleSet)> {
    if !(0.0..=1.0).contains(&spec.train_fraction) || spec.train_fraction.is_nan() {
        return Err(Error::InvalidFraction(spec.train_fraction));
    }
    let dates = set.dates();
    let mut order: Vec<usize> = (0..set.len()).filter(|&i| spec.cutoff.is_none_or(|c| dates[i] <= c)).collect();
    order.sort_by_key(|&i| (dates[i], i));
    let n_train = libm::floor(spec.train_fraction * order.len() as f64) as usize;
    if n_train == 0 {
        return Err(Error::EmptySplit("train"));
    }
    if n_train == order.len() {
        return Err(Error::EmptySplit("test"));
    }
    Ok((set.select(&order[..n_train]), set.select(&order[n_train..])))
}

/// Subsample the majority class without replacement down to the minority count.
/// Kept rows stay in their original order.
pub fn downsample_majority(set: &SampleSet, seed: u64) -> Result<SampleSet> {
    let [neg, pos] = set.class_counts();
    if pos == 0 {
        return Err(Error::ClassAbsent(1));
    }
    if neg == 0 {
        return Err(Error::ClassAbsent(0));
    }
    if neg == pos {
        return Ok(set.clone());
    }
    let majority = if neg > pos { 0 } else { 1 };
    let minority_count = neg.min(pos);
    let majority_rows: Vec<usize> = (0..set.len()).filter(|&i| set.labels()[i] == majority).collect();
    let mut rng = rng::seeded(seed);
    let picked = index::sample(&mut rng, majority_rows.len(), minority_count);
    let mut keep: Vec<usize> = (0..set.len()).filter(|&i| set.labels()[i] != majority).collect();
    keep.extend(picked.iter().map(|k| majority_rows[k]));
    keep.sort_unstable();
    Ok(set.select(&keep))
}

/// Per-class sample weights `N / (2 N_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassWeights {
    pub negative: f64,
    pub positive: f64,
}

impl ClassWeights {
    pub const UNIT: ClassWeights = ClassWeights { negative: 1.0, positive: 1.0 };

    pub fn weight(&self, label: u8) -> f64 {
        if label == 1 {
            self.positive
        } else {
            self.negative
        }
    }

    pub fn sample_weights(&self, labels: &[u8]) -> Vec<f64> {
        labels.iter().map(|&l| self.weight(l)).collect()
    }
}

pub fn class_weights(labels: &[u8]) -> Result<ClassWeights> {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 {
        return Err(Error::ClassAbsent(1));
    }
    if neg == 0 {
        return Err(Error::ClassAbsent(0));
    }
    let n = labels.len() as f64;
    Ok(ClassWeights { negative: n / (2.0 * neg as f64), positive: n / (2.0 * pos as f64) })
}
