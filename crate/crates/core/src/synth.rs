//! Weibull competing-risks generator with exact oracle curves.
//!
//! Each row draws `x ~ N(0, I_d)`. A fixed coefficient matrix (drawn once
//! from the seed) maps `x` linearly to two scores per event, turned into a
//! Weibull shape `1 + softplus(0.5 s)` and scale `softplus(1 + 1.5 s) +
//! 0.05`. Censoring is Weibull too, covariate dependent or not, with its
//! scale multiplied by a global factor calibrated to hit the requested
//! censoring rate.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureMatrix, TimeGrid};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ipcw::CensoringEstimator;
use crate::predictor::{CifMatrix, Predictor};

pub const QUAD_TOL: f64 = 1e-8;
const CALIBRATION_STEPS: usize = 100;
const CALIBRATION_GOAL: f64 = 0.005;
const CALIBRATION_TOL: f64 = 0.03;
const SIDECAR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CensoringMode {
    Independent,
    #[default]
    CovariateDependent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub n_events: u32,
    pub n_features: usize,
    pub censoring_mode: CensoringMode,
    pub target_censoring_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            n_events: 3,
            n_features: 6,
            censoring_mode: CensoringMode::CovariateDependent,
            target_censoring_rate: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be positive".into()));
        }
        if self.n_events == 0 {
            return Err(Error::InvalidArgument("n_events must be >= 1".into()));
        }
        if self.n_features < 2 * self.n_events as usize {
            return Err(Error::InvalidArgument(format!(
                "n_features must be >= 2 * n_events = {}",
                2 * self.n_events
            )));
        }
        if !(self.target_censoring_rate > 0.0 && self.target_censoring_rate < 1.0) {
            return Err(Error::InvalidArgument(
                "target_censoring_rate must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

fn softplus(v: f64) -> f64 {
    if v > 30.0 {
        v
    } else {
        v.exp().ln_1p()
    }
}

fn weibull_shape(s: f64) -> f64 {
    1.0 + softplus(0.5 * s)
}

fn weibull_scale(s: f64) -> f64 {
    softplus(1.0 + 1.5 * s) + 0.05
}

/// `S(t) = exp(-(t / scale)^shape)`.
fn weibull_survival(shape: f64, scale: f64, t: f64) -> f64 {
    (-(t / scale).powf(shape)).exp()
}

/// Per-row Weibull parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RowParams {
    pub shapes: Vec<f64>,
    pub scales: Vec<f64>,
    pub censoring_shape: f64,
    pub censoring_scale: f64,
}

impl RowParams {
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let cum: f64 = self
            .shapes
            .iter()
            .zip(&self.scales)
            .map(|(&a, &b)| (t / b).powf(a))
            .sum();
        (-cum).exp()
    }

    /// Cause-specific hazard `h_k(t)`; `k` is zero-based here.
    fn hazard(&self, k: usize, t: f64) -> f64 {
        let (a, b) = (self.shapes[k], self.scales[k]);
        a / b * (t / b).powf(a - 1.0)
    }

    /// `F_k(t1) - F_k(t0)`, `k` one-based.
    pub fn cif_increment(&self, k: u32, t0: f64, t1: f64) -> f64 {
        let k = k as usize - 1;
        adaptive_simpson(&|t| self.hazard(k, t) * self.survival(t), t0, t1, QUAD_TOL)
    }

    pub fn cif(&self, k: u32, zeta: f64) -> f64 {
        if zeta <= 0.0 {
            return 0.0;
        }
        self.cif_increment(k, 0.0, zeta)
    }

    pub fn censoring_survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        weibull_survival(self.censoring_shape, self.censoring_scale, t)
    }
}

/// Ground truth for a generated dataset; can evaluate any covariate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOracle {
    pub config: SynthConfig,
    /// `(2K + 2) x d`, row-major: shape and scale scores per event, then
    /// censoring shape and scale.
    pub coefficients: Vec<f64>,
    /// Global multiplier on the censoring scale.
    pub censoring_multiplier: f64,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    oracle: SynthOracle,
}

impl SynthOracle {
    pub fn k_events(&self) -> u32 {
        self.config.n_events
    }

    fn score(&self, x: &[f64], r: usize) -> f64 {
        let d = self.config.n_features;
        self.coefficients[r * d..(r + 1) * d]
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum()
    }

    pub fn params(&self, x: &[f64]) -> RowParams {
        let k = self.config.n_events as usize;
        let shapes = (0..k).map(|e| weibull_shape(self.score(x, 2 * e))).collect();
        let scales = (0..k).map(|e| weibull_scale(self.score(x, 2 * e + 1))).collect();
        let (cs, cl) = match self.config.censoring_mode {
            CensoringMode::CovariateDependent => (self.score(x, 2 * k), self.score(x, 2 * k + 1)),
            CensoringMode::Independent => (0.0, 0.0),
        };
        RowParams {
            shapes,
            scales,
            censoring_shape: weibull_shape(cs),
            censoring_scale: weibull_scale(cl) * self.censoring_multiplier,
        }
    }

    /// `F*_k(zeta | x)` by adaptive Simpson.
    pub fn oracle_cif(&self, x: &[f64], zeta: f64, k: u32) -> f64 {
        self.params(x).cif(k, zeta)
    }

    pub fn oracle_survival(&self, x: &[f64], zeta: f64) -> f64 {
        self.params(x).survival(zeta)
    }

    pub fn oracle_censoring(&self, x: &[f64], t: f64) -> f64 {
        self.params(x).censoring_survival(t)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let s = Sidecar {
            format_version: SIDECAR_VERSION,
            oracle: self.clone(),
        };
        let text = serde_json::to_string_pretty(&s).map_err(|e| Error::ModelFormat(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Sidecar = serde_json::from_str(&text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if s.format_version != SIDECAR_VERSION {
            return Err(Error::VersionMismatch {
                found: s.format_version,
                expected: SIDECAR_VERSION,
            });
        }
        let o = s.oracle;
        o.config.validate()?;
        let rows = 2 * o.config.n_events as usize + 2;
        if o.coefficients.len() != rows * o.config.n_features {
            return Err(Error::ModelFormat("oracle coefficient matrix has the wrong size".into()));
        }
        Ok(o)
    }
}

impl CensoringEstimator for SynthOracle {
    fn survival(&self, x: &[f64], t: f64) -> f64 {
        self.oracle_censoring(x, t)
    }
}

impl Predictor for SynthOracle {
    fn k_events(&self) -> u32 {
        self.config.n_events
    }

    /// Accumulates CIF increments between consecutive horizons.
    fn predict_cif(&self, features: &FeatureMatrix, grid: &TimeGrid) -> Result<CifMatrix> {
        if features.n_cols() != self.config.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.config.n_features,
                got: features.n_cols(),
            });
        }
        let k = self.config.n_events;
        let c = k as usize + 1;
        let h = grid.len();
        let mut data = vec![0.0; features.n_rows() * h * c];
        Exec::default().for_each_chunk_mut(&mut data, h * c, |i, block| {
            let p = self.params(features.row(i));
            let mut acc = vec![0.0; c];
            let mut prev = 0.0;
            for (j, out) in block.chunks_mut(c).enumerate() {
                let z = grid.horizons()[j];
                for e in 1..=k {
                    acc[e as usize] += p.cif_increment(e, prev, z);
                    out[e as usize] = acc[e as usize];
                }
                out[0] = p.survival(z);
                prev = z;
            }
        });
        CifMatrix::new(features.n_rows(), grid.clone(), c, data)
    }
}

/// Adaptive Simpson quadrature on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Raw draws for one row before censoring calibration.
struct RowDraw {
    x: Vec<f64>,
    event_time: f64,
    event: u32,
    /// Censoring time at multiplier 1.
    unit_censoring: f64,
}

fn row_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64 + 1);
    rng
}

/// Inverse-CDF Weibull draw; `u` in `(0, 1]`.
fn weibull_draw(shape: f64, scale: f64, u: f64) -> f64 {
    scale * (-u.ln()).powf(1.0 / shape)
}

fn censoring_fraction(draws: &[RowDraw], mult: f64) -> f64 {
    let c = draws
        .iter()
        .filter(|r| r.unit_censoring * mult < r.event_time)
        .count();
    c as f64 / draws.len() as f64
}

/// Generates a dataset and its oracle.
pub fn generate(config: &SynthConfig) -> Result<(Dataset, SynthOracle)> {
    config.validate()?;
    let k = config.n_events as usize;
    let d = config.n_features;
    let mut coef_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let norm = (d as f64).sqrt();
    let coefficients: Vec<f64> = (0..(2 * k + 2) * d)
        .map(|_| coef_rng.sample::<f64, _>(StandardNormal) / norm)
        .collect();
    let mut oracle = SynthOracle {
        config: config.clone(),
        coefficients,
        censoring_multiplier: 1.0,
    };

    let draws: Vec<RowDraw> = Exec::default().map_range(config.n_samples, |i| {
        let mut rng = row_rng(config.seed, i);
        let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let p = oracle.params(&x);
        let mut event_time = f64::INFINITY;
        let mut event = 0;
        for e in 0..k {
            let u = 1.0 - rng.random::<f64>();
            let t = weibull_draw(p.shapes[e], p.scales[e], u);
            if t < event_time {
                event_time = t;
                event = e as u32 + 1;
            }
        }
        let u = 1.0 - rng.random::<f64>();
        RowDraw {
            x,
            event_time,
            event,
            unit_censoring: weibull_draw(p.censoring_shape, p.censoring_scale, u),
        }
    });

    let target = config.target_censoring_rate;
    // censoring fraction decreases in the multiplier
    let (mut lo, mut hi) = (1e-6f64.ln(), 1e6f64.ln());
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let mut steps = 0;
    while steps < CALIBRATION_STEPS {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        let rate = censoring_fraction(&draws, mid.exp());
        let err = (rate - target).abs();
        if err < best.0 {
            best = (err, mid, rate);
        }
        if err <= CALIBRATION_GOAL {
            break;
        }
        if rate > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > CALIBRATION_TOL {
        return Err(Error::Calibration {
            steps,
            achieved: best.2,
            target,
        });
    }
    let mult = best.1.exp();
    oracle.censoring_multiplier = mult;

    let n = config.n_samples;
    let mut feats = Vec::with_capacity(n * d);
    let mut durations = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for r in &draws {
        feats.extend_from_slice(&r.x);
        let c = r.unit_censoring * mult;
        if c < r.event_time {
            durations.push(c);
            events.push(0);
        } else {
            durations.push(r.event_time);
            events.push(r.event);
        }
    }
    let features = FeatureMatrix::new(n, d, feats)?;
    let info = (0..d)
        .map(|j| crate::data::FeatureInfo::numeric(format!("x{j}")))
        .collect();
    let data = Dataset::with_info(features, durations, events, info)?.with_k_events(config.n_events)?;
    Ok((data, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(k: u32, mode: CensoringMode) -> SynthConfig {
        SynthConfig {
            n_samples: 2000,
            n_events: k,
            n_features: 2 * k as usize,
            censoring_mode: mode,
            target_censoring_rate: 0.4,
            seed: 11,
        }
    }

    #[test]
    fn simpson_polynomial_and_exp() {
        let v = adaptive_simpson(&|t| t * t * t, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(&|t: f64| (-t).exp(), 0.0, 3.0, 1e-10);
        assert!((v - (1.0 - (-3.0f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn k1_matches_weibull_cdf() {
        let (_, o) = generate(&small(1, CensoringMode::Independent)).unwrap();
        for x in [[0.3, -1.2], [1.5, 0.4], [-2.0, 2.0]] {
            let p = o.params(&x);
            for z in [0.1, 0.7, 2.0, 5.0] {
                let exact = 1.0 - weibull_survival(p.shapes[0], p.scales[0], z);
                assert!((o.oracle_cif(&x, z, 1) - exact).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_horizon() {
        let (_, o) = generate(&small(2, CensoringMode::CovariateDependent)).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(o.oracle_cif(&x, 0.0, 1), 0.0);
        assert_eq!(o.oracle_survival(&x, 0.0), 1.0);
    }

    #[test]
    fn symmetric_events_equal_cifs() {
        let p = RowParams {
            shapes: vec![1.7, 1.7],
            scales: vec![2.0, 2.0],
            censoring_shape: 1.0,
            censoring_scale: 1.0,
        };
        for z in [0.5, 1.0, 4.0] {
            assert!((p.cif(1, z) - p.cif(2, z)).abs() < 1e-8);
        }
    }

    #[test]
    fn sums_to_one() {
        let (_, o) = generate(&small(3, CensoringMode::CovariateDependent)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
            let z = rng.random_range(0.0..6.0);
            let total = o.oracle_survival(&x, z) + (1..=3).map(|k| o.oracle_cif(&x, z, k)).sum::<f64>();
            assert!((total - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn calibrated_rate_and_determinism() {
        let cfg = small(2, CensoringMode::CovariateDependent);
        let (a, _) = generate(&cfg).unwrap();
        assert!((a.censoring_rate() - 0.4).abs() <= 0.03);
        let (b, _) = generate(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predictor_matches_pointwise() {
        let (d, o) = generate(&small(2, CensoringMode::Independent)).unwrap();
        let grid = TimeGrid::new(vec![0.5, 1.0, 2.5]).unwrap();
        let x = d.features.select_rows(&[0, 1, 2]);
        let cif = o.predict_cif(&x, &grid).unwrap();
        for i in 0..3 {
            for (j, &z) in grid.horizons().iter().enumerate() {
                assert!((cif.get(i, j, 2) - o.oracle_cif(x.row(i), z, 2)).abs() < 1e-7);
                assert_eq!(cif.get(i, j, 0), o.oracle_survival(x.row(i), z));
            }
        }
    }

    #[test]
    fn rejects_too_few_features() {
        let mut c = small(3, CensoringMode::Independent);
        c.n_features = 5;
        assert!(generate(&c).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let (_, o) = generate(&small(1, CensoringMode::CovariateDependent)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("oracle.json");
        o.save(&p).unwrap();
        assert_eq!(SynthOracle::load(&p).unwrap(), o);
    }
}
