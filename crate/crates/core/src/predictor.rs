//! Common prediction surface shared by the boosted model and the marginal
//! baselines.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureInfo, FeatureMatrix, TimeGrid};
use crate::error::{Error, Result};
use crate::nonparametric::{aalen_johansen, kaplan_meier, StepFunction};

/// Predicted `(S, F_1, .., F_K)` for every row and horizon.
///
/// Entry `[i, j, 0]` is `S(grid[j] | x_i)`; `[i, j, k]` for `k >= 1` is
/// `F_k(grid[j] | x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CifMatrix {
    n_rows: usize,
    grid: TimeGrid,
    n_classes: usize,
    data: Vec<f64>,
}

impl CifMatrix {
    pub fn new(n_rows: usize, grid: TimeGrid, n_classes: usize, data: Vec<f64>) -> Result<Self> {
        let expected = n_rows * grid.len() * n_classes;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            n_rows,
            grid,
            n_classes,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `K + 1`.
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn k_events(&self) -> usize {
        self.n_classes - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.grid.len() + j) * self.n_classes + k]
    }

    /// `(S, F_1, .., F_K)` of row `i` at horizon `j`.
    pub fn slice(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.grid.len() + j) * self.n_classes;
        &self.data[start..start + self.n_classes]
    }

    /// `F_k(grid[j] | x_i)` over all rows.
    pub fn cif_column(&self, j: usize, k: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j, k)).collect()
    }

    /// Row-major `n x (K + 1)` probabilities at horizon `j`.
    pub fn horizon_slice(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows)
            .flat_map(|i| self.slice(i, j).iter().copied())
            .collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Enforces nondecreasing CIFs along the grid: running maximum of each
    /// `F_k`, with the increments scaled down when they would exceed the
    /// previous survival, and `S = 1 - sum F_k`. Rows are assumed to sum to
    /// one on input.
    pub fn monotone(&self) -> Self {
        let (h, c) = (self.grid.len(), self.n_classes);
        let mut data = self.data.clone();
        for i in 0..self.n_rows {
            for j in 1..h {
                let (prev, cur) = data[(i * h + j - 1) * c..(i * h + j + 1) * c].split_at_mut(c);
                let mut rise = 0.0;
                for k in 1..c {
                    cur[k] = cur[k].max(prev[k]);
                    rise += cur[k] - prev[k];
                }
                if rise > prev[0] {
                    let scale = prev[0] / rise;
                    for k in 1..c {
                        cur[k] = prev[k] + (cur[k] - prev[k]) * scale;
                    }
                }
                let f: f64 = cur[1..].iter().sum();
                cur[0] = (1.0 - f).clamp(0.0, prev[0]);
            }
        }
        Self {
            data,
            ..self.clone()
        }
    }
}

/// Anything that predicts `(S, F_1, .., F_K)` on a grid.
pub trait Predictor: Sync {
    fn k_events(&self) -> u32;

    fn predict_cif(&self, features: &FeatureMatrix, grid: &TimeGrid) -> Result<CifMatrix>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalKind {
    AalenJohansen,
    KaplanMeier,
}

impl MarginalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MarginalKind::AalenJohansen => "aalen_johansen",
            MarginalKind::KaplanMeier => "kaplan_meier",
        }
    }
}

/// Covariate-free baseline: every row gets the same curves.
///
/// The Kaplan-Meier variant uses the all-cause survival and splits
/// `1 - S` across events by their observed shares, so rows sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalModel {
    pub kind: MarginalKind,
    pub k_events: u32,
    pub t_max: f64,
    pub survival: StepFunction,
    pub cifs: Vec<StepFunction>,
    pub feature_info: Vec<FeatureInfo>,
}

impl MarginalModel {
    pub fn aalen_johansen(data: &Dataset) -> Result<Self> {
        let aj = aalen_johansen(data)?;
        Ok(Self {
            kind: MarginalKind::AalenJohansen,
            k_events: data.k_events,
            t_max: data.t_max,
            survival: aj.survival,
            cifs: aj.cifs,
            feature_info: data.feature_info.clone(),
        })
    }

    pub fn kaplan_meier(data: &Dataset) -> Result<Self> {
        let any: Vec<bool> = data.events.iter().map(|&e| e != 0).collect();
        let survival = kaplan_meier(&data.durations, &any)?;
        let k = data.k_events as usize;
        let mut counts = vec![0usize; k];
        for &e in &data.events {
            if e != 0 {
                counts[e as usize - 1] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        let cifs = counts
            .iter()
            .map(|&c| {
                let share = if total > 0 { c as f64 / total as f64 } else { 0.0 };
                survival.map(|s| (1.0 - s) * share)
            })
            .collect();
        Ok(Self {
            kind: MarginalKind::KaplanMeier,
            k_events: data.k_events,
            t_max: data.t_max,
            survival,
            cifs,
            feature_info: data.feature_info.clone(),
        })
    }

    pub fn fit(kind: MarginalKind, data: &Dataset) -> Result<Self> {
        match kind {
            MarginalKind::AalenJohansen => Self::aalen_johansen(data),
            MarginalKind::KaplanMeier => Self::kaplan_meier(data),
        }
    }
}

impl Predictor for MarginalModel {
    fn k_events(&self) -> u32 {
        self.k_events
    }

    fn predict_cif(&self, features: &FeatureMatrix, grid: &TimeGrid) -> Result<CifMatrix> {
        if features.n_cols() != self.feature_info.len() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_info.len(),
                got: features.n_cols(),
            });
        }
        let c = self.k_events as usize + 1;
        let row: Vec<f64> = grid
            .horizons()
            .iter()
            .flat_map(|&t| {
                std::iter::once(self.survival.eval(t)).chain(self.cifs.iter().map(move |f| f.eval(t)))
            })
            .collect();
        debug_assert_eq!(row.len(), grid.len() * c);
        let n = features.n_rows();
        CifMatrix::new(n, grid.clone(), c, row.repeat(n))
    }
}
