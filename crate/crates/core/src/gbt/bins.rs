use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Bin index reserved for missing values.
pub const MISSING_BIN: u8 = u8::MAX;

/// Per-feature bin edges. Value `x` falls in bin `b` where `b` is the first
/// edge with `x <= edges[b]`, or `edges.len()` past the last edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub edges: Vec<Vec<f64>>,
}

impl BinMapper {
    pub fn fit(features: &FeatureMatrix, max_bins: usize) -> Result<Self> {
        check_max_bins(max_bins)?;
        let edges = (0..features.n_cols())
            .map(|j| {
                let col: Vec<f64> = (0..features.n_rows()).map(|i| features.get(i, j)).collect();
                column_edges(&col, max_bins)
            })
            .collect();
        Ok(Self { edges })
    }

    pub fn n_features(&self) -> usize {
        self.edges.len()
    }

    /// Non-missing bins for feature `j`.
    pub fn n_bins(&self, j: usize) -> usize {
        self.edges[j].len() + 1
    }

    #[inline]
    pub fn bin(&self, j: usize, x: f64) -> u8 {
        if x.is_nan() {
            MISSING_BIN
        } else {
            self.edges[j].partition_point(|&e| e < x) as u8
        }
    }

    /// Upper edge of bin `b` for feature `j`; `f64::MAX` for the last bin.
    pub fn threshold(&self, j: usize, b: u8) -> f64 {
        self.edges[j].get(b as usize).copied().unwrap_or(f64::MAX)
    }

    pub fn transform(&self, features: &FeatureMatrix, exec: Exec) -> Result<BinnedMatrix> {
        if features.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: features.n_cols(),
            });
        }
        let n = features.n_rows();
        let mut bins = vec![0u8; n * self.n_features()];
        exec.for_each_chunk_mut(&mut bins, n, |j, col| {
            for (i, b) in col.iter_mut().enumerate() {
                *b = self.bin(j, features.get(i, j));
            }
        });
        Ok(BinnedMatrix {
            n_rows: n,
            n_cols: self.n_features(),
            bins,
        })
    }
}

fn check_max_bins(max_bins: usize) -> Result<()> {
    if !(2..=255).contains(&max_bins) {
        return Err(Error::InvalidArgument(format!(
            "max_bins must lie in [2, 255], got {max_bins}"
        )));
    }
    Ok(())
}

/// Quantile edges of the non-missing values. Columns with at most
/// `max_bins` distinct values get midpoints between consecutive values.
pub(crate) fn column_edges(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return Vec::new();
    }
    v.sort_by(f64::total_cmp);
    let mut distinct = v.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect();
    }
    let mut edges: Vec<f64> = (1..max_bins)
        .map(|q| percentile(&v, q as f64 / max_bins as f64))
        .collect();
    edges.dedup();
    edges
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
pub(crate) fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Column-major matrix of bin indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMatrix {
    n_rows: usize,
    n_cols: usize,
    bins: Vec<u8>,
}

impl BinnedMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[u8] {
        &self.bins[j * self.n_rows..(j + 1) * self.n_rows]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.bins[j * self.n_rows + i]
    }

    /// Builds a matrix from columns of equal length.
    pub fn from_columns(columns: Vec<Vec<u8>>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().find(|c| c.len() != n_rows) {
            return Err(Error::DimensionMismatch {
                expected: n_rows,
                got: c.len(),
            });
        }
        Ok(Self {
            n_rows,
            n_cols: columns.len(),
            bins: columns.concat(),
        })
    }
}

/// Fits quantile bins on `features` and returns the binned matrix with its mapper.
pub fn bin_features(features: &FeatureMatrix, max_bins: usize) -> Result<(BinnedMatrix, BinMapper)> {
    let mapper = BinMapper::fit(features, max_bins)?;
    let binned = mapper.transform(features, Exec::default())?;
    Ok((binned, mapper))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn median_split() {
        let (b, _) = bin_features(&col(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(b.column(0), &[0, 0, 1, 1]);
    }

    #[test]
    fn constant_feature_single_bin() {
        let (b, m) = bin_features(&col(&[7.0; 5]), 255).unwrap();
        assert_eq!(b.column(0), &[0; 5]);
        assert_eq!(m.n_bins(0), 1);
    }

    #[test]
    fn missing_gets_reserved_bin() {
        let (b, _) = bin_features(&col(&[1.0, f64::NAN, 3.0]), 255).unwrap();
        assert_eq!(b.column(0), &[0, MISSING_BIN, 1]);
    }

    #[test]
    fn few_distinct_values_use_midpoints() {
        let (b, m) = bin_features(&col(&[3.0, 1.0, 2.0, 1.0]), 255).unwrap();
        assert_eq!(m.edges[0], vec![1.5, 2.5]);
        assert_eq!(b.column(0), &[2, 0, 1, 0]);
    }

    #[test]
    fn bins_never_exceed_limit() {
        let v: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 10_007) as f64).collect();
        let (b, m) = bin_features(&col(&v), 255).unwrap();
        assert!(m.n_bins(0) <= 255);
        assert!(b.column(0).iter().all(|&x| (x as usize) < m.n_bins(0)));
    }

    #[test]
    fn threshold_consistent_with_bin() {
        let v: Vec<f64> = (0..500).map(|i| (i as f64).sin() * 10.0).collect();
        let (b, m) = bin_features(&col(&v), 16).unwrap();
        for (i, &x) in v.iter().enumerate() {
            for t in 0..m.n_bins(0) as u8 {
                assert_eq!(b.get(i, 0) <= t, x <= m.threshold(0, t));
            }
        }
    }
}
