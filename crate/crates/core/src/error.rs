use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dataset has no instances")]
    EmptyDataset,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label {label} at instance {index} is outside 0..{n_classes}")]
    LabelOutOfRange { index: usize, label: usize, n_classes: usize },
    #[error("feature {feature} of instance {index} is not finite")]
    NonFiniteFeature { index: usize, feature: usize },
    #[error("image shape {height}x{width} does not match {n_features} features")]
    ShapeMismatch { height: usize, width: usize, n_features: usize },
    #[error("feature buffer of length {len} is not a multiple of {n_features}")]
    RaggedFeatures { len: usize, n_features: usize },
    #[error("train fraction {0} is outside (0, 1)")]
    InvalidFraction(f64),
    #[error("class {0} has a single instance and cannot be stratified")]
    ClassWithSingleInstance(usize),
    #[error("cross-validation needs at least 2 folds, got {0}")]
    FoldCountTooSmall(usize),
    #[error("{instances} instances cannot fill {folds} folds")]
    TooFewForFolds { instances: usize, folds: usize },
    #[error("forest needs at least one tree")]
    NoTrees,
    #[error("cannot hash an empty vector")]
    EmptyVector,
    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("all location distances are zero")]
    ZeroTotalMass,
    #[error("no location groups to screen")]
    NoGroups,
    #[error("window {window} does not fit inside a {height}x{width} image")]
    WindowLargerThanImage { window: usize, height: usize, width: usize },
    #[error("stride must be positive")]
    ZeroStride,
    #[error("dataset has no image shape")]
    NotAnImage,
    #[error("hash screening eliminated every location")]
    AllLocationsEliminated,
    #[error("window bounds u={u}, l={l} invalid for {m} instances")]
    InvalidBounds { u: usize, l: usize, m: usize },
    #[error("window screening needs at least 2 instances, got {0}")]
    TooFewInstances(usize),
    #[error("{bins} bins exceed {instances} instances")]
    BinCountExceedsInstances { bins: usize, instances: usize },
    #[error("target accuracy {0} is outside (0, 1]")]
    InvalidTargetAccuracy(f64),
    #[error("all paired differences are equal; the t statistic is undefined")]
    ZeroVariance,
    #[error("need at least 2 paired differences, got {0}")]
    TooFewDiffs(usize),
    #[error("rank table is degenerate: {0}")]
    DegenerateTable(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("class count mismatch: {expected} vs {got}")]
    ClassCountMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
