use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{augment, km_offset, CensoringModel, CensoringStrategy, SurvivalBoostConfig, SurvivalModel};
use crate::data::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gbt::{column_edges, softmax, BinMapper, BinnedMatrix, Ensemble, GbtConfig};
use crate::ipcw::{ipcw_rows, CensoringEstimator};
use crate::nonparametric::{censoring_km, StepFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub round: usize,
    /// Weighted training log loss of the event model before and after the round.
    pub loss_before: f64,
    pub loss_after: f64,
    /// Weighted binary log loss of the censoring model, when it was updated.
    pub censoring_loss: Option<f64>,
    pub n_rows: usize,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitLog {
    pub rounds: Vec<RoundLog>,
}

/// Censoring survival during training: marginal KM, optionally corrected by
/// the boosted censoring ensemble. Rows index the training data.
struct CensoringView<'t> {
    km: &'t StepFunction,
    ensemble: Option<&'t Ensemble>,
    base: &'t BinnedMatrix,
    mapper: &'t BinMapper,
}

impl CensoringView<'_> {
    fn eval_raw(&self, x: &[f64], t: f64, before: bool) -> f64 {
        let Some(ens) = self.ensemble else {
            return if before { self.km.eval_before(t) } else { self.km.eval(t) };
        };
        let mut aug = x.to_vec();
        aug.push(t);
        let mut raw = [0.0; 2];
        ens.raw_row(&aug, &mut raw);
        let off = km_offset(self.km, t, before);
        let mut p = [0.0; 2];
        softmax(&[off[0] + raw[0], off[1] + raw[1]], &mut p);
        p[0]
    }
}

impl CensoringEstimator for CensoringView<'_> {
    fn survival(&self, x: &[f64], t: f64) -> f64 {
        self.eval_raw(x, t, false)
    }

    fn survival_before(&self, x: &[f64], t: f64) -> f64 {
        self.eval_raw(x, t, true)
    }

    fn survival_batch(
        &self,
        _features: &FeatureMatrix,
        rows: &[usize],
        times: &[f64],
        before: &[bool],
        exec: Exec,
    ) -> Vec<f64> {
        let Some(ens) = self.ensemble else {
            return times
                .iter()
                .zip(before)
                .map(|(&t, &b)| if b { self.km.eval_before(t) } else { self.km.eval(t) })
                .collect();
        };
        let binned = augment(self.base, self.mapper, rows, times, exec);
        let raw = ens.raw_binned(&binned, exec);
        exec.map_range(rows.len(), |q| {
            let off = km_offset(self.km, times[q], before[q]);
            let mut p = [0.0; 2];
            softmax(&[off[0] + raw[2 * q], off[1] + raw[2 * q + 1]], &mut p);
            p[0]
        })
    }
}

/// Event-free survival `S(t | x)` from the current event model, used to
/// weight the censoring model's targets. Trees split `zeta <= threshold`,
/// so the fitted function is left-continuous in time and its left limit is
/// its value.
struct EventSurvivalView<'t> {
    ensemble: &'t Ensemble,
    base: &'t BinnedMatrix,
    mapper: &'t BinMapper,
}

impl CensoringEstimator for EventSurvivalView<'_> {
    fn survival(&self, x: &[f64], t: f64) -> f64 {
        let mut aug = x.to_vec();
        aug.push(t);
        let mut p = vec![0.0; self.ensemble.n_classes];
        self.ensemble.predict_proba_row(&aug, &mut p);
        p[0]
    }

    fn survival_batch(
        &self,
        _features: &FeatureMatrix,
        rows: &[usize],
        times: &[f64],
        _before: &[bool],
        exec: Exec,
    ) -> Vec<f64> {
        let c = self.ensemble.n_classes;
        let binned = augment(self.base, self.mapper, rows, times, exec);
        let raw = self.ensemble.raw_binned(&binned, exec);
        exec.map_range(rows.len(), |q| {
            let mut p = vec![0.0; c];
            softmax(&raw[q * c..(q + 1) * c], &mut p);
            p[0]
        })
    }
}

/// Training state; [`fit`] drives it for the configured number of rounds.
pub struct Trainer<'a> {
    data: &'a Dataset,
    config: SurvivalBoostConfig,
    exec: Exec,
    rows: Vec<usize>,
    event_mapper: BinMapper,
    event_base: BinnedMatrix,
    cens_mapper: BinMapper,
    cens_base: BinnedMatrix,
    km: StepFunction,
    event: Option<Ensemble>,
    censoring: Option<Ensemble>,
    round: usize,
    log: FitLog,
}

fn mappers(data: &Dataset, cfg: &GbtConfig, exec: Exec) -> Result<(BinMapper, BinnedMatrix)> {
    let x_mapper = BinMapper::fit(&data.features, cfg.max_bins)?;
    let base = x_mapper.transform(&data.features, exec)?;
    let mut edges = x_mapper.edges;
    edges.push(column_edges(&data.durations, cfg.max_bins));
    Ok((BinMapper { edges }, base))
}

impl<'a> Trainer<'a> {
    pub fn new(data: &'a Dataset, config: &SurvivalBoostConfig, exec: Exec) -> Result<Self> {
        config.validate()?;
        if data.durations.iter().any(|t| t.is_nan()) {
            return Err(Error::Validation("NaN duration".into()));
        }
        data.check_fittable()?;
        if !(data.t_max > 0.0) {
            return Err(Error::Validation(
                "maximum observed duration must be positive".into(),
            ));
        }
        let (event_mapper, event_base) = mappers(data, &config.gbt, exec)?;
        let (cens_mapper, cens_base) = if config.censoring_gbt.max_bins == config.gbt.max_bins {
            (event_mapper.clone(), event_base.clone())
        } else {
            mappers(data, &config.censoring_gbt, exec)?
        };
        let km = censoring_km(data)?;
        let censoring = match config.censoring {
            CensoringStrategy::KaplanMeier => None,
            CensoringStrategy::Feedback => Some(Ensemble::new(
                2,
                config.censoring_gbt.learning_rate,
                vec![0.0, 0.0],
                cens_mapper.clone(),
            )),
        };
        let r = config.n_horizons_per_row;
        let rows = (0..data.n_rows()).flat_map(|i| std::iter::repeat_n(i, r)).collect();
        Ok(Self {
            data,
            config: config.clone(),
            exec,
            rows,
            event_mapper,
            event_base,
            cens_mapper,
            cens_base,
            km,
            event: None,
            censoring,
            round: 0,
            log: FitLog::default(),
        })
    }

    /// Augmented rows per round: `n * n_horizons_per_row`.
    pub fn n_augmented_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rounds_done(&self) -> usize {
        self.round
    }

    /// Uniform horizons on `[0, t_max)`, one per augmented row; stream
    /// `2m` for event round `m`, `2m + 1` for its censoring update.
    fn sample_horizons(&self, stream: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(stream);
        let t_max = self.data.t_max;
        (0..self.rows.len()).map(|_| rng.random::<f64>() * t_max).collect()
    }

    fn censoring_view(&self) -> CensoringView<'_> {
        CensoringView {
            km: &self.km,
            ensemble: self.censoring.as_ref(),
            base: &self.cens_base,
            mapper: &self.cens_mapper,
        }
    }

    /// One event-model round: sample horizons, compute IPCW targets against
    /// the current censoring estimate, and add one stage of `K + 1` trees.
    pub fn event_round(&mut self) -> Result<(f64, f64)> {
        let zeta = self.sample_horizons(2 * self.round as u64);
        let (y, w) = ipcw_rows(
            &self.data.features,
            &self.data.durations,
            &self.data.events,
            &self.rows,
            &zeta,
            &self.censoring_view(),
            self.config.ipcw_clip,
            self.exec,
        )?;
        let binned = augment(&self.event_base, &self.event_mapper, &self.rows, &zeta, self.exec);
        let n_classes = self.data.k_events as usize + 1;
        let lr = self.config.gbt.learning_rate;
        let mapper = &self.event_mapper;
        let ens = self
            .event
            .get_or_insert_with(|| Ensemble::with_prior(n_classes, lr, &y, &w, mapper.clone()));
        let mut raw = ens.raw_binned(&binned, self.exec);
        let stats = ens.boost_round_from(&binned, &y, &w, &mut raw, &self.config.gbt, self.exec);
        Ok((stats.loss_before, stats.loss_after))
    }

    /// One censoring-model round with the roles of events and censoring
    /// swapped: the label is "censored by zeta" and weights come from the
    /// event model's survival. Returns the weighted binary log loss before
    /// the update.
    pub fn censoring_feedback_round(&mut self) -> Result<f64> {
        let Some(event) = self.event.as_ref() else {
            return Err(Error::InvalidArgument(
                "censoring feedback needs at least one event-model stage".into(),
            ));
        };
        if self.censoring.is_none() {
            return Err(Error::InvalidArgument(
                "censoring feedback is disabled for this configuration".into(),
            ));
        }
        let zeta = self.sample_horizons(2 * self.round as u64 + 1);
        let swapped: Vec<u32> = self.data.events.iter().map(|&e| (e == 0) as u32).collect();
        let view = EventSurvivalView {
            ensemble: event,
            base: &self.event_base,
            mapper: &self.event_mapper,
        };
        let (y, w) = ipcw_rows(
            &self.data.features,
            &self.data.durations,
            &swapped,
            &self.rows,
            &zeta,
            &view,
            self.config.ipcw_clip,
            self.exec,
        )?;
        let binned = augment(&self.cens_base, &self.cens_mapper, &self.rows, &zeta, self.exec);
        let ens = self.censoring.as_mut().expect("checked above");
        let mut raw = ens.raw_binned(&binned, self.exec);
        for (q, r) in raw.chunks_mut(2).enumerate() {
            let off = km_offset(&self.km, zeta[q], false);
            r[0] += off[0];
            r[1] += off[1];
        }
        let stats = ens.boost_round_from(&binned, &y, &w, &mut raw, &self.config.censoring_gbt, self.exec);
        Ok(stats.loss_before)
    }

    /// Event round plus, every `feedback_period` rounds, a censoring update.
    pub fn step(&mut self) -> Result<RoundLog> {
        let start = Instant::now();
        let (loss_before, loss_after) = self.event_round()?;
        let censoring_loss = if self.censoring.is_some()
            && (self.round + 1).is_multiple_of(self.config.feedback_period)
        {
            Some(self.censoring_feedback_round()?)
        } else {
            None
        };
        let entry = RoundLog {
            round: self.round,
            loss_before,
            loss_after,
            censoring_loss,
            n_rows: self.rows.len(),
            elapsed_secs: start.elapsed().as_secs_f64(),
        };
        self.round += 1;
        self.log.rounds.push(entry.clone());
        Ok(entry)
    }

    /// Model as of the rounds run so far.
    pub fn snapshot(&self) -> Result<SurvivalModel> {
        let event_ensemble = self
            .event
            .clone()
            .ok_or_else(|| Error::InvalidArgument("no boosting rounds were run".into()))?;
        let censoring = match &self.censoring {
            Some(ensemble) => CensoringModel::Boosted {
                ensemble: ensemble.clone(),
            },
            None => CensoringModel::Marginal,
        };
        Ok(SurvivalModel {
            k_events: self.data.k_events,
            t_max: self.data.t_max,
            ipcw_clip: self.config.ipcw_clip,
            feature_info: self.data.feature_info.clone(),
            event_ensemble,
            censoring,
            km_censoring: self.km.clone(),
        })
    }

    pub fn into_model(self) -> Result<(SurvivalModel, FitLog)> {
        Ok((self.snapshot()?, self.log))
    }
}

/// Fits the model with the default execution strategy.
pub fn fit(data: &Dataset, config: &SurvivalBoostConfig) -> Result<SurvivalModel> {
    fit_with(data, config, Exec::default()).map(|(m, _)| m)
}

/// Fits the model, returning the per-round training log.
pub fn fit_with(
    data: &Dataset,
    config: &SurvivalBoostConfig,
    exec: Exec,
) -> Result<(SurvivalModel, FitLog)> {
    let mut trainer = Trainer::new(data, config, exec)?;
    for _ in 0..config.gbt.n_iterations.max(1) {
        trainer.step()?;
    }
    trainer.into_model()
}
