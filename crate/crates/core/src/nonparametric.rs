//! Kaplan-Meier and Aalen-Johansen estimators.
//!
//! Ties: at a shared time, events leave the risk set before censorings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Right-continuous piecewise-constant function of time.
///
/// Takes `value_at_0` on `[0, knots[0])` and `values[j]` on
/// `[knots[j], knots[j + 1])`; the last value extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub value_at_0: f64,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, value_at_0: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: knots.len(),
                got: values.len(),
            });
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "step function knots must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            knots,
            values,
            value_at_0,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            knots: Vec::new(),
            values: Vec::new(),
            value_at_0: value,
        }
    }

    /// Value at `t`; at a knot this is the post-jump value.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k <= t) {
            0 => self.value_at_0,
            j => self.values[j - 1],
        }
    }

    /// Left limit `f(t-)`.
    #[inline]
    pub fn eval_before(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k < t) {
            0 => self.value_at_0,
            j => self.values[j - 1],
        }
    }

    pub fn last_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.value_at_0)
    }

    pub fn is_nonincreasing(&self) -> bool {
        std::iter::once(&self.value_at_0)
            .chain(&self.values)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] <= w[0])
    }

    pub fn is_nondecreasing(&self) -> bool {
        std::iter::once(&self.value_at_0)
            .chain(&self.values)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] >= w[0])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            knots: self.knots.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            value_at_0: f(self.value_at_0),
        }
    }

    /// Two-column `time,value` CSV, starting with the value at time 0.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["time", "value"])?;
        w.write_record(["0".to_string(), self.value_at_0.to_string()])?;
        for (k, v) in self.knots.iter().zip(&self.values) {
            w.write_record([k.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

struct TimeBlock {
    time: f64,
    at_risk: usize,
    /// Per-row label counts at this time, indexed like the caller's labels.
    counts: Vec<usize>,
}

/// Groups rows by distinct duration. `labels[i] < n_labels`.
fn time_blocks(durations: &[f64], labels: &[usize], n_labels: usize) -> Vec<TimeBlock> {
    let mut order: Vec<usize> = (0..durations.len()).collect();
    order.sort_by(|&a, &b| durations[a].total_cmp(&durations[b]));
    let mut blocks: Vec<TimeBlock> = Vec::new();
    let mut remaining = durations.len();
    let mut i = 0;
    while i < order.len() {
        let t = durations[order[i]];
        let mut counts = vec![0; n_labels];
        let mut j = i;
        while j < order.len() && durations[order[j]] == t {
            counts[labels[order[j]]] += 1;
            j += 1;
        }
        blocks.push(TimeBlock {
            time: t,
            at_risk: remaining,
            counts,
        });
        remaining -= j - i;
        i = j;
    }
    blocks
}

fn check_inputs(durations: &[f64], len: usize) -> Result<()> {
    if durations.is_empty() {
        return Err(Error::InvalidArgument("empty input".into()));
    }
    if durations.len() != len {
        return Err(Error::DimensionMismatch {
            expected: durations.len(),
            got: len,
        });
    }
    if durations.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "durations must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// Product-limit estimate `S(t) = prod_{t_j <= t} (1 - d_j / n_j)`, where
/// `indicator[i]` is true when the modelled event occurred at `durations[i]`.
pub fn kaplan_meier(durations: &[f64], indicator: &[bool]) -> Result<StepFunction> {
    check_inputs(durations, indicator.len())?;
    let labels: Vec<usize> = indicator.iter().map(|&b| b as usize).collect();
    let mut s = 1.0;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for b in time_blocks(durations, &labels, 2) {
        let d = b.counts[1];
        if d > 0 {
            s *= 1.0 - d as f64 / b.at_risk as f64;
            knots.push(b.time);
            values.push(s);
        }
    }
    StepFunction::new(knots, values, 1.0)
}

/// Marginal censoring survival `G(t) = P(C > t)`.
///
/// Rows with an observed event at the same time as a censoring left the
/// risk set first, so they are not counted at risk for that censoring.
pub fn censoring_km(data: &Dataset) -> Result<StepFunction> {
    // 0 = censored, 1 = event
    let labels: Vec<usize> = data.events.iter().map(|&e| (e != 0) as usize).collect();
    check_inputs(&data.durations, labels.len())?;
    let mut g = 1.0;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for b in time_blocks(&data.durations, &labels, 2) {
        let c = b.counts[0];
        if c > 0 {
            let at_risk = b.at_risk - b.counts[1];
            g *= 1.0 - c as f64 / at_risk as f64;
            knots.push(b.time);
            values.push(g);
        }
    }
    StepFunction::new(knots, values, 1.0)
}

/// Marginal competing-risks estimate: all-cause survival plus one CIF per event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AalenJohansen {
    pub survival: StepFunction,
    pub cifs: Vec<StepFunction>,
}

/// `F_k(t) = sum_{t_j <= t} S(t_j-) d_kj / n_j` with `S` the all-cause
/// Kaplan-Meier survival. Returns `data.k_events` CIFs.
pub fn aalen_johansen(data: &Dataset) -> Result<AalenJohansen> {
    let k = data.k_events as usize;
    if k == 0 && data.n_rows() > 0 {
        // every row censored and no declared events: nothing to estimate
        return Ok(AalenJohansen {
            survival: StepFunction::constant(1.0),
            cifs: Vec::new(),
        });
    }
    let labels: Vec<usize> = data.events.iter().map(|&e| e as usize).collect();
    check_inputs(&data.durations, labels.len())?;
    let mut s = 1.0;
    let mut f = vec![0.0; k];
    let mut knots = Vec::new();
    let mut s_values = Vec::new();
    let mut f_values: Vec<Vec<f64>> = vec![Vec::new(); k];
    for b in time_blocks(&data.durations, &labels, k + 1) {
        let d: usize = b.counts[1..].iter().sum();
        if d == 0 {
            continue;
        }
        let n = b.at_risk as f64;
        for (kk, fk) in f.iter_mut().enumerate() {
            *fk += s * b.counts[kk + 1] as f64 / n;
        }
        s *= 1.0 - d as f64 / n;
        knots.push(b.time);
        s_values.push(s);
        for (kk, fv) in f_values.iter_mut().enumerate() {
            fv.push(f[kk]);
        }
    }
    let survival = StepFunction::new(knots.clone(), s_values, 1.0)?;
    let cifs = f_values
        .into_iter()
        .map(|v| StepFunction::new(knots.clone(), v, 0.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(AalenJohansen { survival, cifs })
}
