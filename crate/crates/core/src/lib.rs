//! Competing-risks survival analysis with gradient-boosted trees.
//!
//! The crate estimates every cause-specific cumulative incidence function
//! (CIF) and the all-cause survival function at arbitrary horizons. Training
//! minimises an inverse-probability-of-censoring weighted multiclass log loss,
//! which is strictly proper for the joint `(F_1, .., F_K, S)` vector at a fixed
//! horizon and separable across rows, so horizons can be resampled at every
//! boosting round.
//!
//! Module map:
//!
//! - [`data`]: datasets, CSV ingestion, splitting.
//! - [`nonparametric`]: Kaplan-Meier and Aalen-Johansen estimators.
//! - [`ipcw`]: targets and weights for the reweighted loss.
//! - [`gbt`]: weighted multiclass histogram gradient boosting.
//! - [`survival_boost`]: the competing-risks learner and its model file.
//! - [`metrics`]: censoring-adjusted Brier score, IBS, accuracy in time,
//!   `S_Cen-log-simple`, and the truncated C-index.
//! - [`synth`]: Weibull competing-risks generator with exact oracle curves.

pub mod data;
pub mod error;
pub mod exec;
pub mod gbt;
pub mod ipcw;
pub mod metrics;
pub mod nonparametric;
pub mod predictor;
pub mod survival_boost;
pub mod synth;

pub use data::{Dataset, FeatureMatrix, Schema, TimeGrid};
pub use error::{Error, Result};
pub use exec::Exec;
pub use ipcw::{CensoringEstimator, IpcwTarget};
pub use nonparametric::StepFunction;
pub use predictor::{CifMatrix, Predictor};
pub use survival_boost::{SurvivalBoostConfig, SurvivalModel};
