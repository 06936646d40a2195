//! TOML run configuration. Every table is optional; command-line flags
//! override whatever is set here.
//!
//! ```toml
//! seed = 7
//! threads = 4
//!
//! [schema]
//! duration_col = "time"
//! event_col = "status"
//!
//! [survival_boost]
//! n_horizons_per_row = 2
//!
//! [survival_boost.gbt]
//! learning_rate = 0.05
//! n_iterations = 200
//!
//! [synth]
//! n_samples = 20000
//!
//! [evaluate]
//! quantiles = [0.25, 0.5, 0.75]
//! ```

use std::path::Path;

use serde::Deserialize;
use survboost::data::{Schema, DEFAULT_TEST_FRACTION};
use survboost::metrics::{DEFAULT_B, DEFAULT_IBS_POINTS, DEFAULT_QUANTILES};
use survboost::survival_boost::CensoringStrategy;
use survboost::synth::{CensoringMode, SynthConfig};
use survboost::SurvivalBoostConfig;

use crate::args::{BoostOpts, CensoringArg, CensoringModeArg, EvalOpts, SchemaArgs, SynthOpts};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub schema: SchemaConfig,
    pub survival_boost: SurvivalBoostConfig,
    pub synth: SynthConfig,
    pub evaluate: EvalConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    pub duration_col: Option<String>,
    pub event_col: Option<String>,
    pub features: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub grid_size: usize,
    pub quantiles: Vec<f64>,
    pub b: usize,
    pub c_index: bool,
    pub test_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_IBS_POINTS,
            quantiles: DEFAULT_QUANTILES.to_vec(),
            b: DEFAULT_B,
            c_index: false,
            test_fraction: DEFAULT_TEST_FRACTION,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }

    pub fn schema(&self, a: &SchemaArgs) -> Schema {
        let d = Schema::default();
        let s = Schema::new(
            a.duration_col
                .clone()
                .or_else(|| self.schema.duration_col.clone())
                .unwrap_or(d.duration_col),
            a.event_col
                .clone()
                .or_else(|| self.schema.event_col.clone())
                .unwrap_or(d.event_col),
        );
        match a.features.clone().or_else(|| self.schema.features.clone()) {
            Some(cols) => s.with_features(cols),
            None => s,
        }
    }

    pub fn boost(&self, a: &BoostOpts, seed: u64) -> SurvivalBoostConfig {
        let mut c = self.survival_boost.clone();
        let g = &mut c.gbt;
        set(&mut g.learning_rate, a.learning_rate);
        set(&mut g.n_iterations, a.n_iterations);
        set(&mut g.max_depth, a.max_depth);
        set(&mut g.max_bins, a.max_bins);
        set(&mut g.min_samples_leaf, a.min_samples_leaf);
        set(&mut g.l2_regularization, a.l2_regularization);
        set(&mut c.n_horizons_per_row, a.n_horizons);
        set(&mut c.feedback_period, a.feedback_period);
        set(&mut c.ipcw_clip, a.ipcw_clip);
        if let Some(s) = a.censoring {
            c.censoring = match s {
                CensoringArg::Feedback => CensoringStrategy::Feedback,
                CensoringArg::KaplanMeier => CensoringStrategy::KaplanMeier,
            };
        }
        c.seed = seed;
        c
    }

    pub fn synth(&self, a: &SynthOpts, seed: u64) -> SynthConfig {
        let mut c = self.synth.clone();
        set(&mut c.n_samples, a.n_samples);
        set(&mut c.n_events, a.n_events);
        set(&mut c.n_features, a.n_features);
        set(&mut c.target_censoring_rate, a.censoring_rate);
        if let Some(m) = a.censoring_mode {
            c.censoring_mode = match m {
                CensoringModeArg::Independent => CensoringMode::Independent,
                CensoringModeArg::CovariateDependent => CensoringMode::CovariateDependent,
            };
        }
        c.seed = seed;
        c
    }

    pub fn eval(&self, a: &EvalOpts) -> EvalConfig {
        let mut c = self.evaluate.clone();
        set(&mut c.grid_size, a.grid_size);
        set(&mut c.quantiles, a.quantiles.clone());
        set(&mut c.b, a.b);
        c.c_index |= a.c_index;
        c
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let cfg: RunConfig = toml::from_str(
            r#"
            seed = 5
            [survival_boost.gbt]
            learning_rate = 0.2
            max_depth = 3
            "#,
        )
        .unwrap();
        let flags = BoostOpts {
            max_depth: Some(7),
            ..Default::default()
        };
        let c = cfg.boost(&flags, cfg.seed(None));
        assert_eq!(c.gbt.learning_rate, 0.2);
        assert_eq!(c.gbt.max_depth, 7);
        assert_eq!(c.gbt.n_iterations, 100);
        assert_eq!(c.seed, 5);
        assert_eq!(cfg.seed(Some(9)), 9);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("sead = 1").is_err());
    }

    #[test]
    fn schema_precedence() {
        let cfg: RunConfig = toml::from_str("[schema]\nevent_col = \"status\"").unwrap();
        let s = cfg.schema(&SchemaArgs {
            duration_col: Some("t".into()),
            ..Default::default()
        });
        assert_eq!(s.duration_col, "t");
        assert_eq!(s.event_col, "status");
        assert!(s.feature_cols.is_none());
    }
}
