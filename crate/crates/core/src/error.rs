use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Row/column counts of two inputs disagree.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A binary task needs both classes; this one is missing.
    ClassAbsent(u8),
    /// A label outside {0, 1}.
    InvalidLabel(u8),
    EmptyInput(&'static str),
    AllColumnsDropped,
    ColumnAllMissing(String),
    MissingColumn(String),
    InvalidFraction(f64),
    EmptySplit(&'static str),
    NonFinite(&'static str),
    NegativeWeight,
    WrongModelKind {
        expected: &'static str,
    },
    Diverged {
        epoch: usize,
        learning_rate: f64,
    },
    InvalidConfig(String),
    InvalidArchitecture(String),
    EmptyGrid,
    AllCellsFailed,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { what, expected, found } => {
                write!(f, "dimension mismatch in {what}: expected {expected}, found {found}")
            }
            Error::ClassAbsent(c) => write!(f, "class {c} is absent; a binary task needs both classes"),
            Error::InvalidLabel(l) => write!(f, "label {l} is not 0 or 1"),
            Error::EmptyInput(what) => write!(f, "{what} is empty"),
            Error::AllColumnsDropped => f.write_str("every feature column fell below the coverage threshold"),
            Error::ColumnAllMissing(name) => write!(f, "column `{name}` has no observed values; cannot impute"),
            Error::MissingColumn(name) => write!(f, "column `{name}` is required but absent"),
            Error::InvalidFraction(v) => write!(f, "fraction {v} outside [0, 1]"),
            Error::EmptySplit(which) => write!(f, "empty {which} split"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::NegativeWeight => f.write_str("sample weights must be nonnegative with positive total"),
            Error::WrongModelKind { expected } => write!(f, "operation requires a {expected} model"),
            Error::Diverged { epoch, learning_rate } => {
                write!(f, "training diverged at epoch {epoch} (learning rate {learning_rate})")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::InvalidArchitecture(msg) => write!(f, "invalid architecture: {msg}"),
            Error::EmptyGrid => f.write_str("hyperparameter grid is empty"),
            Error::AllCellsFailed => f.write_str("every grid cell failed"),
        }
    }
}

impl core::error::Error for Error {}
