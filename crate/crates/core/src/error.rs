use alloc::string::String;

use crate::model::BiasFamily;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid value for {field}: {value:?}")]
    InvalidValue { field: &'static str, value: String },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("ruler_count {0} exceeds the sanity bound of 8")]
    TooManyRulers(u32),

    #[error("variant id {0} outside 1..=5")]
    VariantOutOfRange(u8),

    #[error("duplicate image_id {0:?}")]
    DuplicateId(String),

    #[error("prediction set is empty")]
    EmptyPredictionSet,

    #[error("image_id sets differ: {missing} missing, {extra} unexpected (first: {first:?})")]
    IdMismatch { missing: usize, extra: usize, first: String },

    #[error("no label for image_id {0:?}")]
    MissingLabel(String),

    #[error("annotation for unknown image_id {0:?}")]
    OrphanAnnotation(String),

    #[error("family results must come from a single family, saw {0} and {1}")]
    MixedFamilies(BiasFamily, BiasFamily),

    #[error("no variants to aggregate")]
    NoVariants,

    #[error("image is empty")]
    EmptyImage,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("frame variants must use a constant black pixel source")]
    FrameSourceNotBlack,

    #[error("need at least {needed} samples, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("covariance is not positive semi-definite (eigenvalue {0})")]
    NotPositiveSemidefinite(f64),

    #[error("target is constant")]
    ConstantTarget,

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
