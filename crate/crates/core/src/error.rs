//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by metrics, training, the pipeline, and persistence.
///
/// Degenerate denominators get their own variants rather than producing
/// NaN: a NaN compatibility score would silently propagate into model
/// selection.
#[derive(Debug, Error)]
pub enum Error {
    /// An evaluation set contains only one label class; patient-pairs
    /// cannot be formed.
    #[error("evaluation set contains a single label class (n0={n0}, n1={n1})")]
    SingleClass { n0: usize, n1: usize },

    /// Score and label vectors (or two score vectors) differ in length.
    #[error("length mismatch: {left} vs {right} ({what})")]
    LengthMismatch {
        left: usize,
        right: usize,
        what: &'static str,
    },

    /// BTC denominator is zero: the original model labels no patient
    /// correctly at the given threshold.
    #[error("original model labels no patient correctly at tau={tau}")]
    OriginalAllWrong { tau: f64 },

    /// RBC denominator is zero: the original model ranks no discordant
    /// pair correctly.
    #[error("original model ranks no discordant pair correctly")]
    OriginalNoCorrectPairs,

    /// General-form RBC: no pair of patients has ordered labels.
    #[error("no patient-pair with ordered labels (all labels equal)")]
    NoOrderedPairs,

    /// AUROC pair outside the model-updating regime the analytic bounds
    /// are derived for (0.5 < AUROC_o <= AUROC_u <= 1).
    #[error("AUROC pair ({auroc_o}, {auroc_u}) outside regime 0.5 < AUROC_o <= AUROC_u <= 1")]
    OutOfRegime { auroc_o: f64, auroc_u: f64 },

    /// A score is NaN, infinite, or outside [0, 1].
    #[error("score at index {index} is not a finite value in [0, 1]: {value}")]
    NonFiniteScore { index: usize, value: f64 },

    /// A value that must be finite (model parameter, feature, report
    /// field) is NaN or infinite.
    #[error("non-finite {what}: {value}")]
    NonFiniteValue { what: &'static str, value: f64 },

    /// Feature-matrix column count does not match the model dimension.
    #[error("dimension mismatch: model expects d={expected}, data has d={actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Training with alpha < 1 requires the original model's scores.
    #[error("training with alpha={alpha} < 1 requires an original model")]
    MissingOriginal { alpha: f64 },

    /// Split sizes do not fit the dataset.
    #[error("split spec needs {requested} rows but dataset has {available}")]
    SpecTooLarge { requested: usize, available: usize },

    /// Selection over an empty candidate list.
    #[error("candidate list is empty")]
    EmptyCandidates,

    /// Aggregation needs at least two replications.
    #[error("aggregation needs >= 2 replications, got {got}")]
    TooFewReplications { got: usize },

    /// An operation received no input values.
    #[error("empty input: {what}")]
    EmptyInput { what: &'static str },

    /// AUROC-to-pair-count conversion produced counts outside [0, m].
    #[error("infeasible pair counts: {what}")]
    InfeasibleCounts { what: String },

    /// A configuration value violates its invariant.
    #[error("invalid config: {what}")]
    InvalidConfig { what: String },

    /// A file could not be parsed; positions are 1-based.
    #[error("parse error at {path}:{line}:{column}: {what}")]
    ParseError {
        path: String,
        line: usize,
        column: usize,
        what: String,
    },

    /// A file parsed but is missing required fields or has the wrong shape.
    #[error("schema error in {path}: {what}")]
    SchemaError { path: String, what: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
