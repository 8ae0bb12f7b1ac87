//! Feature engineering and outcome prediction for basketball regular seasons.
//!
//! The crate is organised as a pipeline:
//!
//! - [`dataset`] loads match CSVs, normalises franchise names, splits rows
//!   and standardises feature matrices.
//! - [`elo`] keeps per-team Elo ratings with home advantage, generalised
//!   prize/penalty terms and season regression to the mean.
//! - [`features`] turns the match history into ex-ante features: Elo
//!   difference, win-frequency difference (`diff`) and the Four Factors, each
//!   in historical or rolling-window form and optionally split by court.
//! - [`net`] is a small dense binary classifier trained with Adam.
//! - [`eval`] computes ROC/AUC, thresholds and cross-validated reports.
//! - [`synth`] generates synthetic leagues with known ground truth.
//! - [`experiment`] ties everything together for the command line.

pub mod dataset;
pub mod elo;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod net;
pub mod synth;

pub use dataset::{BoxScore, DataError, Dataset, MatchRecord, SplitMode, SplitSpec, Standardizer};
pub use elo::{Adjustments, CourtFilter, EloConfig, EloError, EloLedger};
pub use eval::{EvalError, EvalReport, RocCurve, ThresholdCriterion};
pub use experiment::{ExperimentConfig, ExperimentError};
pub use features::{
    FeatureFamily, FeatureMatrix, FeatureRow, FeatureSpec, FourFactors, Periodicity, View,
};
pub use net::{Activation, LayerSpec, NetConfig, NetError, Network, TrainConfig};
pub use synth::LeagueSpec;
