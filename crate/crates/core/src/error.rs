use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid BIO label `{0}`")]
    InvalidLabel(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("fraction {0} is outside (0, 1)")]
    FractionOutOfRange(f64),
    #[error("dimension mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("non-finite activation in {0}")]
    NonFiniteActivation(&'static str),
    #[error("non-finite value at coordinate {0}")]
    NonFiniteValue(usize),
    #[error("dropout rate {0} is outside [0, 1)")]
    RateOutOfRange(f64),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("sequence lengths differ: {0} emissions vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("label index {index} out of range for {labels} labels")]
    LabelOutOfRange { index: usize, labels: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("empty sentence")]
    EmptySentence,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("label `{0}` is not in the model's label inventory")]
    LabelInventoryMismatch(String),
    #[error("cannot fit moments of an empty source tensor")]
    EmptySource,
    #[error("number of new rows must be positive")]
    NonPositiveRows,
    #[error("category `{0}` already exists in the source model")]
    CategoryCollision(String),
    #[error("decoder mismatch: source model uses {source_decoder}, {requested} was requested")]
    DecoderMismatch {
        source_decoder: &'static str,
        requested: &'static str,
    },
    #[error("freeze layout does not match gradients: {0}")]
    LayoutMismatch(String),
    #[error("invalid freeze specification: {0}")]
    InvalidFreezeSpec(String),
    #[error("predicted and gold corpora are not aligned: {0}")]
    AlignmentMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("source model already carries an adapter")]
    ChainedTransfer,
}
