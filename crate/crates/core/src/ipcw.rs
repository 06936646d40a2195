//! Multiclass targets and inverse-probability-of-censoring weights.
//!
//! For a row observed at `(t, delta)` and a horizon `zeta`:
//!
//! | case                  | target    | weight                   |
//! |-----------------------|-----------|--------------------------|
//! | `t > zeta`            | 0         | `1 / G(zeta \| x)`       |
//! | `t <= zeta`, event k  | k         | `1 / G(t- \| x)`         |
//! | `t <= zeta`, censored | 0         | 0                        |
//!
//! Weighted by these, the observed-data log loss has the same expectation
//! as the uncensored one, assuming `T* ⊥ C | X`.

use crate::data::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nonparametric::StepFunction;

/// Default lower clip on `G` inside weights (weights capped at 50).
pub const DEFAULT_IPCW_CLIP: f64 = 0.02;

/// Probability of remaining censor-free, possibly covariate dependent.
pub trait CensoringEstimator: Sync {
    /// `G(t | x)`.
    fn survival(&self, x: &[f64], t: f64) -> f64;

    /// Left limit `G(t- | x)`.
    fn survival_before(&self, x: &[f64], t: f64) -> f64 {
        self.survival(x, t)
    }

    /// Evaluates query `q` on row `rows[q]` of `features` at `times[q]`,
    /// taking the left limit where `before[q]` is set.
    fn survival_batch(
        &self,
        features: &FeatureMatrix,
        rows: &[usize],
        times: &[f64],
        before: &[bool],
        exec: Exec,
    ) -> Vec<f64> {
        exec.map_range(rows.len(), |q| {
            let x = features.row(rows[q]);
            if before[q] {
                self.survival_before(x, times[q])
            } else {
                self.survival(x, times[q])
            }
        })
    }
}

impl CensoringEstimator for StepFunction {
    fn survival(&self, _x: &[f64], t: f64) -> f64 {
        self.eval(t)
    }

    fn survival_before(&self, _x: &[f64], t: f64) -> f64 {
        self.eval_before(t)
    }
}

impl<T: CensoringEstimator + ?Sized> CensoringEstimator for &T {
    fn survival(&self, x: &[f64], t: f64) -> f64 {
        (**self).survival(x, t)
    }

    fn survival_before(&self, x: &[f64], t: f64) -> f64 {
        (**self).survival_before(x, t)
    }

    fn survival_batch(
        &self,
        features: &FeatureMatrix,
        rows: &[usize],
        times: &[f64],
        before: &[bool],
        exec: Exec,
    ) -> Vec<f64> {
        (**self).survival_batch(features, rows, times, before, exec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpcwTarget {
    pub y: u32,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Survivor,
    Event,
    Censored,
}

fn branch(t: f64, delta: u32, zeta: f64) -> Branch {
    if t > zeta {
        Branch::Survivor
    } else if delta != 0 {
        Branch::Event
    } else {
        Branch::Censored
    }
}

fn check_clip(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "ipcw clip must lie in (0, 0.5), got {eps}"
        )));
    }
    Ok(())
}

#[inline]
fn weight(g: f64, eps: f64) -> f64 {
    1.0 / g.max(eps)
}

/// Target and weight for a single `(row, horizon)` pair.
pub fn ipcw_target(
    t: f64,
    delta: u32,
    zeta: f64,
    x: &[f64],
    g: &dyn CensoringEstimator,
    eps: f64,
) -> Result<IpcwTarget> {
    if t.is_nan() || zeta.is_nan() {
        return Err(Error::InvalidArgument("NaN time or horizon".into()));
    }
    check_clip(eps)?;
    Ok(match branch(t, delta, zeta) {
        Branch::Survivor => IpcwTarget {
            y: 0,
            w: weight(g.survival(x, zeta), eps),
        },
        Branch::Event => IpcwTarget {
            y: delta,
            w: weight(g.survival_before(x, t), eps),
        },
        Branch::Censored => IpcwTarget { y: 0, w: 0.0 },
    })
}

/// Targets and weights, one per row of `data`, with `horizons[i]` for row `i`.
pub fn ipcw_batch(
    data: &Dataset,
    horizons: &[f64],
    g: &dyn CensoringEstimator,
    eps: f64,
) -> Result<(Vec<u32>, Vec<f64>)> {
    if horizons.len() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            got: horizons.len(),
        });
    }
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    ipcw_rows(
        &data.features,
        &data.durations,
        &data.events,
        &rows,
        horizons,
        g,
        eps,
        Exec::default(),
    )
}

/// Query `q` refers to data row `rows[q]` at horizon `horizons[q]`; rows may
/// repeat when several horizons are drawn per observation.
#[allow(clippy::too_many_arguments)]
pub(crate) fn ipcw_rows(
    features: &FeatureMatrix,
    durations: &[f64],
    events: &[u32],
    rows: &[usize],
    horizons: &[f64],
    g: &dyn CensoringEstimator,
    eps: f64,
    exec: Exec,
) -> Result<(Vec<u32>, Vec<f64>)> {
    check_clip(eps)?;
    if horizons.iter().any(|z| z.is_nan()) {
        return Err(Error::InvalidArgument("NaN horizon".into()));
    }
    let branches: Vec<Branch> = rows
        .iter()
        .zip(horizons)
        .map(|(&r, &z)| branch(durations[r], events[r], z))
        .collect();
    // only evaluate G where the weight needs it
    let mut q_rows = Vec::new();
    let mut q_times = Vec::new();
    let mut q_before = Vec::new();
    for (q, b) in branches.iter().enumerate() {
        match b {
            Branch::Survivor => {
                q_rows.push(rows[q]);
                q_times.push(horizons[q]);
                q_before.push(false);
            }
            Branch::Event => {
                q_rows.push(rows[q]);
                q_times.push(durations[rows[q]]);
                q_before.push(true);
            }
            Branch::Censored => {}
        }
    }
    let gv = g.survival_batch(features, &q_rows, &q_times, &q_before, exec);
    let mut gv = gv.into_iter();
    let mut y = Vec::with_capacity(rows.len());
    let mut w = Vec::with_capacity(rows.len());
    for (q, b) in branches.iter().enumerate() {
        match b {
            Branch::Survivor => {
                y.push(0);
                w.push(weight(gv.next().unwrap_or(1.0), eps));
            }
            Branch::Event => {
                y.push(events[rows[q]]);
                w.push(weight(gv.next().unwrap_or(1.0), eps));
            }
            Branch::Censored => {
                y.push(0);
                w.push(0.0);
            }
        }
    }
    Ok((y, w))
}
