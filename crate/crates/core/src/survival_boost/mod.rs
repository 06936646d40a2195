//! Gradient-boosted competing-risks model.
//!
//! The horizon `zeta` is stacked onto the covariates, so one multiclass
//! model over classes `0 = still event-free, 1..K = event k occurred first`
//! yields `S` and every `F_k` at any horizon, summing to one by construction.
//! Training resamples horizons each round and reweights targets by the
//! inverse probability of remaining uncensored. A second binary model
//! estimates that probability, alternating with the event model.

mod fit;
mod io;

use serde::{Deserialize, Serialize};

use crate::data::{FeatureInfo, FeatureMatrix, TimeGrid};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gbt::{softmax, BinMapper, BinnedMatrix, Ensemble, GbtConfig, PROB_CLAMP};
use crate::ipcw::{CensoringEstimator, DEFAULT_IPCW_CLIP};
use crate::nonparametric::StepFunction;
use crate::predictor::{CifMatrix, Predictor};

pub use fit::{fit, fit_with, FitLog, RoundLog, Trainer};
pub use io::{load_any, load_model, save_any, save_model, AnyModel, MODEL_FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CensoringStrategy {
    /// Marginal Kaplan-Meier `G` for every round.
    KaplanMeier,
    /// Boosted `G(zeta | x)` refined by the feedback loop.
    #[default]
    Feedback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurvivalBoostConfig {
    /// Event model; `n_iterations` is the number of boosting rounds.
    pub gbt: GbtConfig,
    /// Censoring model; one round per feedback step, `n_iterations` unused.
    /// Defaults to a smaller step and strong L2 shrinkage: late horizons
    /// have few survivors, and unshrunk leaves there drift towards `G = 0`.
    pub censoring_gbt: GbtConfig,
    pub n_horizons_per_row: usize,
    /// Event rounds between censoring-model updates.
    pub feedback_period: usize,
    pub censoring: CensoringStrategy,
    pub ipcw_clip: f64,
    pub seed: u64,
}

impl Default for SurvivalBoostConfig {
    fn default() -> Self {
        Self {
            gbt: GbtConfig::default(),
            censoring_gbt: GbtConfig {
                learning_rate: 0.05,
                l2_regularization: 100.0,
                ..GbtConfig::default()
            },
            n_horizons_per_row: 1,
            feedback_period: 1,
            censoring: CensoringStrategy::Feedback,
            ipcw_clip: DEFAULT_IPCW_CLIP,
            seed: 0,
        }
    }
}

impl SurvivalBoostConfig {
    pub fn validate(&self) -> Result<()> {
        self.gbt.validate()?;
        self.censoring_gbt.validate()?;
        if self.n_horizons_per_row == 0 {
            return Err(Error::InvalidArgument(
                "n_horizons_per_row must be >= 1".into(),
            ));
        }
        if self.feedback_period == 0 {
            return Err(Error::InvalidArgument("feedback_period must be >= 1".into()));
        }
        if !(self.ipcw_clip > 0.0 && self.ipcw_clip < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "ipcw_clip must lie in (0, 0.5), got {}",
                self.ipcw_clip
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CensoringModel {
    Marginal,
    /// Binary model on `(x, zeta)`; class 0 is "not yet censored". Its raw
    /// scores are offset by the log marginal Kaplan-Meier probabilities, so
    /// an untrained ensemble reproduces the marginal estimate.
    Boosted { ensemble: Ensemble },
}

/// Fitted competing-risks model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalModel {
    pub k_events: u32,
    pub t_max: f64,
    pub ipcw_clip: f64,
    pub feature_info: Vec<FeatureInfo>,
    pub event_ensemble: Ensemble,
    pub censoring: CensoringModel,
    pub km_censoring: StepFunction,
}

/// Log marginal `(G, 1 - G)` used as the censoring model's raw offset.
#[inline]
pub(crate) fn km_offset(km: &StepFunction, t: f64, before: bool) -> [f64; 2] {
    let g = if before { km.eval_before(t) } else { km.eval(t) };
    let g = g.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    [g.ln(), (1.0 - g).ln()]
}

/// Bins for query `q`: covariates of row `rows[q]` from `base`, plus the bin
/// of `times[q]` in the mapper's last (horizon) column.
pub(crate) fn augment(
    base: &BinnedMatrix,
    mapper: &BinMapper,
    rows: &[usize],
    times: &[f64],
    exec: Exec,
) -> BinnedMatrix {
    let d = base.n_cols();
    let columns = exec.map_range(d + 1, |j| {
        if j < d {
            let col = base.column(j);
            rows.iter().map(|&r| col[r]).collect::<Vec<u8>>()
        } else {
            times.iter().map(|&t| mapper.bin(d, t)).collect()
        }
    });
    BinnedMatrix::from_columns(columns).expect("augmented columns share the query count")
}

impl SurvivalModel {
    pub fn n_features(&self) -> usize {
        self.feature_info.len()
    }

    fn check_dim(&self, features: &FeatureMatrix) -> Result<()> {
        if features.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: features.n_cols(),
            });
        }
        Ok(())
    }

    /// `(S, F_1, .., F_K)` at horizon `zeta` for one covariate row.
    pub fn predict_row(&self, x: &[f64], zeta: f64, out: &mut [f64]) {
        let mut aug = Vec::with_capacity(x.len() + 1);
        aug.extend_from_slice(x);
        aug.push(zeta);
        self.event_ensemble.predict_proba_row(&aug, out);
    }

    pub fn predict_cif_with(
        &self,
        features: &FeatureMatrix,
        grid: &TimeGrid,
        exec: Exec,
    ) -> Result<CifMatrix> {
        self.check_dim(features)?;
        let c = self.k_events as usize + 1;
        let h = grid.len();
        let mut data = vec![0.0; features.n_rows() * h * c];
        exec.for_each_chunk_mut(&mut data, h * c, |i, block| {
            let x = features.row(i);
            let mut aug = Vec::with_capacity(x.len() + 1);
            aug.extend_from_slice(x);
            aug.push(0.0);
            let last = aug.len() - 1;
            for (j, out) in block.chunks_mut(c).enumerate() {
                aug[last] = grid.horizons()[j];
                self.event_ensemble.predict_proba_row(&aug, out);
            }
        });
        CifMatrix::new(features.n_rows(), grid.clone(), c, data)
    }

    /// As [`Predictor::predict_cif`], optionally clamping each CIF to be
    /// nondecreasing along the grid.
    pub fn predict_cif_monotone(&self, features: &FeatureMatrix, grid: &TimeGrid) -> Result<CifMatrix> {
        Ok(self.predict_cif(features, grid)?.monotone())
    }

    /// Censoring survival `G(t | x)` from the fitted censoring estimator.
    pub fn censoring_survival(&self, x: &[f64], t: f64, before: bool) -> f64 {
        match &self.censoring {
            CensoringModel::Marginal => {
                if before {
                    self.km_censoring.eval_before(t)
                } else {
                    self.km_censoring.eval(t)
                }
            }
            CensoringModel::Boosted { ensemble } => {
                let mut aug = Vec::with_capacity(x.len() + 1);
                aug.extend_from_slice(x);
                aug.push(t);
                let mut raw = [0.0; 2];
                ensemble.raw_row(&aug, &mut raw);
                let off = km_offset(&self.km_censoring, t, before);
                let raw = [off[0] + raw[0], off[1] + raw[1]];
                let mut p = [0.0; 2];
                softmax(&raw, &mut p);
                p[0]
            }
        }
    }
}

impl Predictor for SurvivalModel {
    fn k_events(&self) -> u32 {
        self.k_events
    }

    fn predict_cif(&self, features: &FeatureMatrix, grid: &TimeGrid) -> Result<CifMatrix> {
        self.predict_cif_with(features, grid, Exec::default())
    }
}

impl CensoringEstimator for SurvivalModel {
    fn survival(&self, x: &[f64], t: f64) -> f64 {
        self.censoring_survival(x, t, false)
    }

    fn survival_before(&self, x: &[f64], t: f64) -> f64 {
        self.censoring_survival(x, t, true)
    }
}
