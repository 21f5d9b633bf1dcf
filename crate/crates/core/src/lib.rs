//! Deep-forest training and inference with two cost-reduction mechanisms:
//!
//! * **hash screening** of multi-grained scanning locations. Every sliding
//!   window position gets an average-hash bit signature per instance; positions
//!   whose signatures barely vary across instances are dropped before any
//!   scanning forest is trained.
//! * **window screening** of cascade instances. Instances are ranked by
//!   out-of-fold confidence and a halving window searches for the confidence
//!   threshold above which instances retire at the current level.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration,
//! reports and the command line live in the `hwforest` crate.
//!
//! Module map:
//!
//! | module        | contents                                                  |
//! |---------------|-----------------------------------------------------------|
//! | [`dataset`]   | validated feature matrix, seeded (stratified) splits      |
//! | [`forest`]    | decision trees, random / completely-random forests, OOF   |
//! | [`hash_screen`] | aHash signatures, location distances, threshold `HT`    |
//! | [`scanning`]  | sliding-window patches and per-grain forests              |
//! | [`conf_screen`] | confidence ranking, window and binning thresholds       |
//! | [`cascade`]   | level-wise training, validation stopping, prediction      |
//! | [`evalstats`] | accuracy, paired t, Friedman and Nemenyi statistics       |

#![no_std]

extern crate alloc;
#[cfg(feature = "parallel")]
extern crate std;

pub mod cascade;
pub mod conf_screen;
pub mod dataset;
mod error;
pub mod evalstats;
pub mod forest;
pub mod hash_screen;
mod par;
pub mod rng;
pub mod scanning;

pub use cascade::{CascadeConfig, CascadeFit, CascadeLevel, CascadeModel, Prediction, RankedEntry, Screening, TaRule};
pub use conf_screen::{ConfidenceRecord, ScreenPartition, Threshold};
pub use dataset::{Dataset, SplitSpec};
pub use error::{Error, Result};
pub use forest::{ClassDistribution, FoldPlan, ForestKind, ForestModel};
pub use hash_screen::{HashSignature, HashThresholdResult, LocationGroup};
pub use scanning::{GrainConfig, GrainModel, ScanConfig, ScanModel};
