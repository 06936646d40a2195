//! Evaluation metrics for competing-risks predictions.
//!
//! Brier-type scores are reweighted by the inverse censoring survival: rows
//! with an observed outcome by `zeta` use `G(t- | x)`, rows still at risk use
//! `G(zeta | x)`, and rows censored before `zeta` drop out. Rows whose weight
//! would be `1 / 0` are skipped.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TimeGrid};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gbt::percentile;
use crate::ipcw::CensoringEstimator;
use crate::predictor::CifMatrix;

/// Default node count for [`s_cen_log_simple`].
pub const DEFAULT_B: usize = 32;
/// Default number of points in the IBS grid.
pub const DEFAULT_IBS_POINTS: usize = 100;
/// Default horizon quantiles for accuracy and C-index.
pub const DEFAULT_QUANTILES: [f64; 6] = [0.125, 0.25, 0.375, 0.5, 0.625, 0.75];

const LOG_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_event_values: Option<Vec<f64>>,
    pub grid: Vec<f64>,
    pub n_effective: usize,
}

fn check_k(k: u32, data: &Dataset) -> Result<()> {
    if k == 0 || k > data.k_events {
        return Err(Error::InvalidArgument(format!(
            "event index {k} outside 1..={}",
            data.k_events
        )));
    }
    Ok(())
}

fn inv(g: f64) -> f64 {
    if g > 0.0 {
        1.0 / g
    } else {
        0.0
    }
}

/// Per-row inverse weights at one horizon. `w_obs[i]` is `1 / G(t_i- | x_i)`
/// for uncensored rows (0 otherwise); returns `1 / G(zeta | x_i)` for rows
/// with `t_i > zeta` and `w_obs[i]` or 0 for the rest.
struct Weights {
    w_obs: Vec<f64>,
}

impl Weights {
    fn new(data: &Dataset, g: &dyn CensoringEstimator, exec: Exec) -> Self {
        let rows: Vec<usize> = (0..data.n_rows()).filter(|&i| data.events[i] != 0).collect();
        let times: Vec<f64> = rows.iter().map(|&i| data.durations[i]).collect();
        let gv = g.survival_batch(&data.features, &rows, &times, &vec![true; rows.len()], exec);
        let mut w_obs = vec![0.0; data.n_rows()];
        for (&i, gi) in rows.iter().zip(gv) {
            w_obs[i] = inv(gi);
        }
        Self { w_obs }
    }

    /// Weights at each horizon, `[j][i]`.
    fn at(&self, data: &Dataset, g: &dyn CensoringEstimator, grid: &[f64], exec: Exec) -> Vec<Vec<f64>> {
        let n = data.n_rows();
        let mut rows = Vec::new();
        let mut times = Vec::new();
        for &z in grid {
            for i in 0..n {
                if data.durations[i] > z {
                    rows.push(i);
                    times.push(z);
                }
            }
        }
        let gv = g.survival_batch(&data.features, &rows, &times, &vec![false; rows.len()], exec);
        let mut gv = gv.into_iter();
        grid.iter()
            .map(|&z| {
                (0..n)
                    .map(|i| {
                        if data.durations[i] > z {
                            inv(gv.next().expect("one value per query"))
                        } else {
                            self.w_obs[i]
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Brier score of one event given per-row weights at `zeta`.
fn brier_with(pred: &[f64], data: &Dataset, zeta: f64, w: &[f64], k: u32) -> f64 {
    let n = data.n_rows();
    let mut total = 0.0;
    for i in 0..n {
        let (t, d) = (data.durations[i], data.events[i]);
        let f = pred[i];
        let term = if t > zeta {
            f * f
        } else if d == k {
            (1.0 - f) * (1.0 - f)
        } else if d != 0 {
            f * f
        } else {
            continue;
        };
        total += term * w[i];
    }
    total / n as f64
}

/// Censoring-adjusted Brier score `BS_k(zeta)` for predictions `pred[i] =
/// F_k(zeta | x_i)`.
pub fn brier_score_event(
    pred: &[f64],
    data: &Dataset,
    zeta: f64,
    g: &dyn CensoringEstimator,
    k: u32,
) -> Result<f64> {
    check_k(k, data)?;
    if pred.len() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            got: pred.len(),
        });
    }
    if pred.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument("predictions must lie in [0, 1]".into()));
    }
    let exec = Exec::Sequential;
    let w = Weights::new(data, g, exec).at(data, g, &[zeta], exec).remove(0);
    Ok(brier_with(pred, data, zeta, &w, k))
}

fn check_cif(cif: &CifMatrix, data: &Dataset) -> Result<()> {
    if cif.n_rows() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            got: cif.n_rows(),
        });
    }
    if cif.k_events() != data.k_events as usize {
        return Err(Error::DimensionMismatch {
            expected: data.k_events as usize,
            got: cif.k_events(),
        });
    }
    Ok(())
}

/// `BS_k` over the CIF grid: `curve[j][k - 1]`.
pub fn brier_curve(cif: &CifMatrix, data: &Dataset, g: &dyn CensoringEstimator) -> Result<Vec<Vec<f64>>> {
    check_cif(cif, data)?;
    let exec = Exec::default();
    let grid = cif.grid().horizons();
    let weights = Weights::new(data, g, exec).at(data, g, grid, exec);
    let k = data.k_events as usize;
    Ok(exec.map_range(grid.len(), |j| {
        (1..=k)
            .map(|c| brier_with(&cif.cif_column(j, c), data, grid[j], &weights[j], c as u32))
            .collect()
    }))
}

/// Trapezoidal average of `values` over `grid`, normalised by the span.
/// A single point returns its value.
pub fn trapezoid_mean(grid: &[f64], values: &[f64]) -> f64 {
    if grid.len() == 1 {
        return values[0];
    }
    let area: f64 = grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (t[1] - t[0]) * (v[0] + v[1]) / 2.0)
        .sum();
    area / (grid[grid.len() - 1] - grid[0])
}

/// Integrated Brier score per event and their mean, over the CIF's grid.
pub fn integrated_brier_score(
    cif: &CifMatrix,
    data: &Dataset,
    g: &dyn CensoringEstimator,
) -> Result<MetricReport> {
    let grid = cif.grid().horizons();
    if grid[grid.len() - 1] > data.t_max {
        return Err(Error::InvalidArgument(format!(
            "grid ends at {} beyond the largest observed time {}",
            grid[grid.len() - 1],
            data.t_max
        )));
    }
    let curve = brier_curve(cif, data, g)?;
    let k = data.k_events as usize;
    let per_event: Vec<f64> = (0..k)
        .map(|c| {
            let col: Vec<f64> = curve.iter().map(|r| r[c]).collect();
            trapezoid_mean(grid, &col)
        })
        .collect();
    let value = per_event.iter().sum::<f64>() / k as f64;
    Ok(MetricReport {
        name: "ibs".into(),
        value,
        per_event_values: Some(per_event),
        grid: grid.to_vec(),
        n_effective: data.n_rows(),
    })
}

/// `n` evenly spaced points on `(0, max observed event time]`.
pub fn default_ibs_grid(data: &Dataset, n: usize) -> Result<TimeGrid> {
    let end = data
        .durations
        .iter()
        .zip(&data.events)
        .filter(|(_, &e)| e != 0)
        .map(|(&t, _)| t)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(end > 0.0) {
        return Err(Error::NoEvaluableRows);
    }
    TimeGrid::evenly_spaced(end, n)
}

/// Quantiles of the observed any-event times.
pub fn horizon_quantiles(data: &Dataset, quantiles: &[f64]) -> Result<Vec<f64>> {
    let mut times: Vec<f64> = data
        .durations
        .iter()
        .zip(&data.events)
        .filter(|(_, &e)| e != 0)
        .map(|(&t, _)| t)
        .collect();
    if times.is_empty() {
        return Err(Error::NoEvaluableRows);
    }
    if quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::InvalidArgument("quantiles must lie in [0, 1]".into()));
    }
    times.sort_by(f64::total_cmp);
    Ok(quantiles.iter().map(|&q| percentile(&times, q)).collect())
}

/// Argmax with ties to the lowest index.
fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = c;
        }
    }
    best
}

/// Fraction of evaluable rows whose most likely class at `zeta` is the
/// observed one. `probs` is row-major `n x (K + 1)` with survival first.
/// Rows censored by `zeta` are not evaluable.
pub fn accuracy_in_time(probs: &[f64], data: &Dataset, zeta: f64) -> Result<MetricReport> {
    let c = data.k_events as usize + 1;
    if probs.len() != data.n_rows() * c {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows() * c,
            got: probs.len(),
        });
    }
    let mut hit = 0usize;
    let mut n_nc = 0usize;
    for i in 0..data.n_rows() {
        let (t, d) = (data.durations[i], data.events[i]);
        if t <= zeta && d == 0 {
            continue;
        }
        n_nc += 1;
        let y = if t <= zeta { d as usize } else { 0 };
        if argmax(&probs[i * c..(i + 1) * c]) == y {
            hit += 1;
        }
    }
    if n_nc == 0 {
        return Err(Error::NoEvaluableRows);
    }
    Ok(MetricReport {
        name: "accuracy_in_time".into(),
        value: hit as f64 / n_nc as f64,
        per_event_values: None,
        grid: vec![zeta],
        n_effective: n_nc,
    })
}

/// `B + 1` nodes evenly spaced on `[0, t_max]`.
pub fn s_cen_nodes(t_max: f64, b: usize) -> Result<TimeGrid> {
    if b < 2 || !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need B >= 2 and t_max > 0, got B = {b}, t_max = {t_max}"
        )));
    }
    TimeGrid::new((0..=b).map(|i| t_max * i as f64 / b as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SCenLogSimple {
    pub value: f64,
    /// Log arguments raised to the clamp floor, e.g. from nonincreasing
    /// any-event CIFs.
    pub n_clamped: usize,
}

/// `S_Cen-log-simple` averaged over rows. `cif` must be evaluated on the
/// `B + 1` node times (see [`s_cen_nodes`]); the any-event CIF is `1 - S`.
/// Rows with `t` outside `(nodes[0], nodes[B]]` contribute zero.
pub fn s_cen_log_simple(cif: &CifMatrix, data: &Dataset) -> Result<SCenLogSimple> {
    check_cif(cif, data)?;
    let nodes = cif.grid().horizons();
    if nodes.len() < 3 {
        return Err(Error::InvalidArgument("need at least 2 intervals".into()));
    }
    let b = nodes.len() - 1;
    let mut total = 0.0;
    let mut n_clamped = 0usize;
    for i in 0..data.n_rows() {
        let t = data.durations[i];
        if !(t > nodes[0] && t <= nodes[b]) {
            continue;
        }
        // bucket m with nodes[m] < t <= nodes[m + 1]
        let m = nodes.partition_point(|&z| z < t) - 1;
        let f_hi = 1.0 - cif.get(i, m + 1, 0);
        let arg = if data.events[i] != 0 {
            f_hi - (1.0 - cif.get(i, m, 0))
        } else {
            1.0 - f_hi
        };
        if arg < LOG_CLAMP {
            n_clamped += 1;
        }
        total -= arg.max(LOG_CLAMP).ln();
    }
    Ok(SCenLogSimple {
        value: total / data.n_rows() as f64,
        n_clamped,
    })
}

/// Truncated C-index for event `k` at `zeta` with risk scores `risk[i] =
/// F_k(zeta | x_i)`. Pairs: `t_i < t_j`, `delta_i = k`, `t_i <= zeta`.
pub fn c_index_at(risk: &[f64], data: &Dataset, zeta: f64, k: u32) -> Result<MetricReport> {
    check_k(k, data)?;
    if !(zeta > 0.0) {
        return Err(Error::InvalidArgument("zeta must be positive".into()));
    }
    if risk.len() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            got: risk.len(),
        });
    }
    let n = data.n_rows();
    let t = &data.durations;
    // (2 * concordant + ties, comparable) as integers keeps the sum exact
    let counts = Exec::default().map_range(n, |i| {
        if data.events[i] != k || t[i] > zeta {
            return (0u64, 0u64);
        }
        let mut score = 0u64;
        let mut pairs = 0u64;
        for j in 0..n {
            if t[i] < t[j] {
                pairs += 1;
                if risk[i] > risk[j] {
                    score += 2;
                } else if risk[i] == risk[j] {
                    score += 1;
                }
            }
        }
        (score, pairs)
    });
    let (score, pairs) = counts
        .iter()
        .fold((0u64, 0u64), |a, b| (a.0 + b.0, a.1 + b.1));
    if pairs == 0 {
        return Err(Error::NoComparablePairs);
    }
    Ok(MetricReport {
        name: format!("c_index_event{k}"),
        value: score as f64 / (2 * pairs) as f64,
        per_event_values: None,
        grid: vec![zeta],
        n_effective: pairs as usize,
    })
}

pub fn write_reports_json(reports: &[MetricReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(reports).map_err(|e| Error::ModelFormat(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Flat `metric,event,horizon,value,n_effective` rows; `event` is empty for
/// aggregate values.
pub fn write_reports_csv(reports: &[MetricReport], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["metric", "event", "horizon", "value", "n_effective"])?;
    for r in reports {
        let horizon = if r.grid.len() == 1 {
            r.grid[0].to_string()
        } else {
            String::new()
        };
        w.write_record([
            r.name.clone(),
            String::new(),
            horizon.clone(),
            r.value.to_string(),
            r.n_effective.to_string(),
        ])?;
        for (k, v) in r.per_event_values.iter().flatten().enumerate() {
            w.write_record([
                r.name.clone(),
                (k + 1).to_string(),
                horizon.clone(),
                v.to_string(),
                r.n_effective.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

/// `horizon,bs_1,..,bs_K` for plotting.
pub fn write_brier_curve_csv(grid: &TimeGrid, curve: &[Vec<f64>], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let k = curve.first().map_or(0, Vec::len);
    let mut header = vec!["horizon".to_string()];
    header.extend((1..=k).map(|c| format!("bs_{c}")));
    w.write_record(&header)?;
    for (z, row) in grid.horizons().iter().zip(curve) {
        let mut rec = vec![z.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureMatrix;
    use crate::nonparametric::{censoring_km, StepFunction};
    use crate::predictor::{MarginalModel, Predictor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ds(t: Vec<f64>, e: Vec<u32>) -> Dataset {
        let n = t.len();
        Dataset::new(FeatureMatrix::zeros(n, 1), t, e).unwrap()
    }

    fn one() -> StepFunction {
        StepFunction::constant(1.0)
    }

    #[test]
    fn perfect_predictions_zero_brier() {
        let d = ds(vec![1.0, 2.0, 3.0, 4.0], vec![1, 2, 1, 1]);
        let pred = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(brier_score_event(&pred, &d, 2.5, &one(), 1).unwrap(), 0.0);
    }

    #[test]
    fn constant_prediction_closed_form() {
        let d = ds(vec![1.0, 2.0, 3.0, 4.0, 0.5], vec![1, 2, 1, 1, 1]);
        let p = 0.3;
        // rows with t <= 2.5 and event 1: t=1, t=0.5 -> q = 2/5
        let q = 0.4;
        let bs = brier_score_event(&[p; 5], &d, 2.5, &one(), 1).unwrap();
        assert!((bs - (q * (1.0 - p) * (1.0 - p) + (1.0 - q) * p * p)).abs() < 1e-15);
    }

    #[test]
    fn three_row_hand_case() {
        // t = 1 (event 1), 2 (censored), 3 (event 1); zeta = 2.5
        // censoring KM: 1 at t < 2, then 1 - 1/2 = 0.5
        let d = ds(vec![1.0, 2.0, 3.0], vec![1, 0, 1]);
        let g = censoring_km(&d).unwrap();
        let pred = [0.6, 0.2, 0.1];
        // row 0: (1 - .6)^2 / G(1-) = .16; row 1 censored -> 0; row 2: .1^2 / G(2.5) = .02
        let expect = (0.16 + 0.0 + 0.01 / 0.5) / 3.0;
        let bs = brier_score_event(&pred, &d, 2.5, &g, 1).unwrap();
        assert!((bs - expect).abs() < 1e-15);
    }

    #[test]
    fn brier_rejects_bad_k() {
        let d = ds(vec![1.0], vec![1]);
        assert!(brier_score_event(&[0.5], &d, 1.0, &one(), 2).is_err());
        assert!(brier_score_event(&[0.5], &d, 1.0, &one(), 0).is_err());
    }

    #[test]
    fn trapezoid_of_constant() {
        assert!((trapezoid_mean(&[0.5, 1.0, 3.0], &[0.2, 0.2, 0.2]) - 0.2).abs() < 1e-15);
    }

    fn random_data(n: usize, k: u32, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        let e = (0..n).map(|_| rng.random_range(0..=k)).collect();
        ds(t, e)
    }

    #[test]
    fn ibs_marginal_matches_direct_sum() {
        let d = random_data(80, 2, 3);
        let g = censoring_km(&d).unwrap();
        let m = MarginalModel::aalen_johansen(&d).unwrap();
        let grid = default_ibs_grid(&d, 25).unwrap();
        let cif = m.predict_cif(&d.features, &grid).unwrap();
        let rep = integrated_brier_score(&cif, &d, &g).unwrap();
        // direct oracle: explicit loops, no batching
        let z = grid.horizons();
        for k in 1..=2u32 {
            let mut vals = Vec::new();
            for &zeta in z {
                let mut s = 0.0;
                for i in 0..d.n_rows() {
                    let (t, e) = (d.durations[i], d.events[i]);
                    let f = m.cifs[k as usize - 1].eval(zeta);
                    if t > zeta {
                        s += f * f / g.eval(zeta);
                    } else if e == k {
                        s += (1.0 - f) * (1.0 - f) / g.eval_before(t);
                    } else if e != 0 {
                        s += f * f / g.eval_before(t);
                    }
                }
                vals.push(s / d.n_rows() as f64);
            }
            let mut area = 0.0;
            for j in 1..z.len() {
                area += (z[j] - z[j - 1]) * (vals[j] + vals[j - 1]) / 2.0;
            }
            let ibs = area / (z[z.len() - 1] - z[0]);
            let got = rep.per_event_values.as_ref().unwrap()[k as usize - 1];
            assert!((got - ibs).abs() < 1e-12, "{got} vs {ibs}");
        }
    }

    #[test]
    fn ibs_grid_outside_range() {
        let d = random_data(20, 1, 4);
        let m = MarginalModel::kaplan_meier(&d).unwrap();
        let grid = TimeGrid::new(vec![1.0, 100.0]).unwrap();
        let cif = m.predict_cif(&d.features, &grid).unwrap();
        assert!(integrated_brier_score(&cif, &d, &one()).is_err());
    }

    #[test]
    fn accuracy_hand_case() {
        // zeta = 2.5; row 1 censored before zeta is excluded
        let d = ds(vec![1.0, 2.0, 3.0, 1.5, 4.0], vec![1, 0, 2, 2, 0]);
        let probs = [
            0.2, 0.7, 0.1, // y=1, pred 1 ok
            0.9, 0.05, 0.05, // excluded
            0.5, 0.2, 0.3, // y=0, pred 0 ok
            0.1, 0.6, 0.3, // y=2, pred 1 wrong
            0.4, 0.4, 0.2, // y=0, tie 0/1 -> 0 ok
        ];
        let r = accuracy_in_time(&probs, &d, 2.5).unwrap();
        assert_eq!(r.n_effective, 4);
        assert!((r.value - 0.75).abs() < 1e-15);
    }

    #[test]
    fn accuracy_at_zero_all_survive() {
        let d = random_data(30, 2, 5);
        let probs: Vec<f64> = (0..30).flat_map(|_| [0.9, 0.05, 0.05]).collect();
        assert_eq!(accuracy_in_time(&probs, &d, 0.0).unwrap().value, 1.0);
    }

    #[test]
    fn accuracy_no_rows() {
        let d = ds(vec![1.0, 2.0], vec![0, 0]).with_k_events(1).unwrap();
        assert!(matches!(
            accuracy_in_time(&[1.0, 0.0, 1.0, 0.0], &d, 5.0),
            Err(Error::NoEvaluableRows)
        ));
    }

    #[test]
    fn s_cen_exact_jump() {
        // one event at t = 1.5 on nodes 0,1,2,3: F jumps 0 -> 1 in (1, 2]
        let d = ds(vec![1.5], vec![1]);
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let cif = CifMatrix::new(1, grid, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let r = s_cen_log_simple(&cif, &d).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.n_clamped, 0);
    }

    #[test]
    fn s_cen_marginal_direct_formula() {
        let d = random_data(100, 2, 6);
        let m = MarginalModel::kaplan_meier(&d).unwrap();
        let nodes = s_cen_nodes(d.t_max, DEFAULT_B).unwrap();
        let cif = m.predict_cif(&d.features, &nodes).unwrap();
        let r = s_cen_log_simple(&cif, &d).unwrap();
        let z = nodes.horizons();
        let f = |t: f64| 1.0 - m.survival.eval(t);
        let mut s = 0.0;
        for i in 0..d.n_rows() {
            let (t, e) = (d.durations[i], d.events[i]);
            for b in 0..DEFAULT_B {
                if z[b] < t && t <= z[b + 1] {
                    let arg = if e != 0 { f(z[b + 1]) - f(z[b]) } else { 1.0 - f(z[b + 1]) };
                    s -= arg.max(1e-15).ln();
                }
            }
        }
        assert!((r.value - s / 100.0).abs() < 1e-12);
    }

    #[test]
    fn s_cen_counts_clamps() {
        let d = ds(vec![1.5], vec![1]);
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        // F decreasing across the bucket
        let cif = CifMatrix::new(1, grid, 2, vec![1.0, 0.0, 0.5, 0.5, 0.7, 0.3]).unwrap();
        let r = s_cen_log_simple(&cif, &d).unwrap();
        assert_eq!(r.n_clamped, 1);
        assert!((r.value - (-(1e-15f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn c_index_hand_case() {
        // event 1 at t=1 (risk .5), t=2 (risk .5), censored t=3 (.2), event 1 t=4 (.9)
        let d = ds(vec![1.0, 2.0, 3.0, 4.0], vec![1, 1, 0, 1]);
        let risk = [0.5, 0.5, 0.2, 0.9];
        // zeta = 3: i=0 vs j=1 tie (.5), j=2 conc, j=3 disc; i=1 vs j=2 conc, j=3 disc
        let r = c_index_at(&risk, &d, 3.0, 1).unwrap();
        assert_eq!(r.n_effective, 5);
        assert!((r.value - 2.5 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn c_index_constant_and_perfect() {
        let d = ds(vec![1.0, 2.0, 3.0, 4.0], vec![1, 1, 1, 1]);
        assert_eq!(c_index_at(&[0.3; 4], &d, 4.0, 1).unwrap().value, 0.5);
        assert_eq!(c_index_at(&[0.9, 0.7, 0.5, 0.1], &d, 4.0, 1).unwrap().value, 1.0);
        assert!(matches!(
            c_index_at(&[0.3; 4], &d, 0.5, 1),
            Err(Error::NoComparablePairs)
        ));
    }

    #[test]
    fn quantiles_of_event_times() {
        let d = ds(vec![1.0, 2.0, 3.0, 4.0, 10.0], vec![1, 1, 2, 1, 0]);
        assert_eq!(horizon_quantiles(&d, &[0.0, 0.5, 1.0]).unwrap(), vec![1.0, 2.5, 4.0]);
    }

    #[test]
    fn metrics_invariant_to_row_order() {
        let d = random_data(60, 2, 7);
        let mut idx: Vec<usize> = (0..60).collect();
        idx.reverse();
        let r = d.subset(&idx);
        let risk: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let rr: Vec<f64> = idx.iter().map(|&i| risk[i]).collect();
        let a = c_index_at(&risk, &d, 5.0, 1).unwrap().value;
        let b = c_index_at(&rr, &r, 5.0, 1).unwrap().value;
        assert_eq!(a, b);
        let g = censoring_km(&d).unwrap();
        let x = brier_score_event(&risk, &d, 5.0, &g, 2).unwrap();
        let y = brier_score_event(&rr, &r, 5.0, &g, 2).unwrap();
        assert!((x - y).abs() < 1e-14);
    }
}
