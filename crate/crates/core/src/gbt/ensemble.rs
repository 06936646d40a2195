use serde::{Deserialize, Serialize};

use super::bins::{BinMapper, BinnedMatrix};
use super::loss::{softmax, softmax_grad_hess, weighted_log_loss, PROB_CLAMP};
use super::tree::{grow_tree, Tree};
use super::GbtConfig;
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Staged additive multiclass model.
///
/// Raw score of class `c` is `base_scores[c] + sum_m lr * stages[m][c](x)`,
/// accumulated in stage order; probabilities are its softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub n_classes: usize,
    pub learning_rate: f64,
    pub base_scores: Vec<f64>,
    pub stages: Vec<Vec<Tree>>,
    pub bin_mapper: BinMapper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub loss_before: f64,
    pub loss_after: f64,
}

impl Ensemble {
    pub fn new(n_classes: usize, learning_rate: f64, base_scores: Vec<f64>, bin_mapper: BinMapper) -> Self {
        debug_assert_eq!(base_scores.len(), n_classes);
        Self {
            n_classes,
            learning_rate,
            base_scores,
            stages: Vec::new(),
            bin_mapper,
        }
    }

    /// Base scores are log weighted class frequencies, so the untrained
    /// model predicts the weighted empirical class distribution.
    pub fn with_prior(n_classes: usize, learning_rate: f64, y: &[u32], w: &[f64], bin_mapper: BinMapper) -> Self {
        let mut freq = vec![0.0; n_classes];
        for (&yi, &wi) in y.iter().zip(w) {
            freq[yi as usize] += wi;
        }
        let total: f64 = freq.iter().sum();
        let base = freq
            .iter()
            .map(|&f| {
                let p = if total > 0.0 { f / total } else { 1.0 / n_classes as f64 };
                p.max(PROB_CLAMP).ln()
            })
            .collect();
        Self::new(n_classes, learning_rate, base, bin_mapper)
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn n_features(&self) -> usize {
        self.bin_mapper.n_features()
    }

    /// Raw scores of one row, written into `out` (length `n_classes`).
    #[inline]
    pub fn raw_row(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.base_scores);
        for stage in &self.stages {
            for (o, tree) in out.iter_mut().zip(stage) {
                *o += self.learning_rate * tree.predict_row(x);
            }
        }
    }

    #[inline]
    fn raw_binned_row(&self, binned: &BinnedMatrix, i: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.base_scores);
        for stage in &self.stages {
            for (o, tree) in out.iter_mut().zip(stage) {
                *o += self.learning_rate * tree.predict_binned(binned, i);
            }
        }
    }

    /// Row-major `n x n_classes` raw scores for binned rows. Bit-identical
    /// to [`Ensemble::raw_row`] on the unbinned values.
    pub fn raw_binned(&self, binned: &BinnedMatrix, exec: Exec) -> Vec<f64> {
        let c = self.n_classes;
        let mut raw = vec![0.0; binned.n_rows() * c];
        exec.for_each_chunk_mut(&mut raw, c * ROW_BLOCK, |blk, chunk| {
            for (k, out) in chunk.chunks_mut(c).enumerate() {
                self.raw_binned_row(binned, blk * ROW_BLOCK + k, out);
            }
        });
        raw
    }

    pub fn predict_proba_row(&self, x: &[f64], out: &mut [f64]) {
        let mut raw = vec![0.0; self.n_classes];
        self.raw_row(x, &mut raw);
        softmax(&raw, out);
    }

    /// Row-major `n x n_classes` class probabilities.
    pub fn predict_proba(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        self.predict_proba_with(features, Exec::default())
    }

    pub fn predict_proba_with(&self, features: &FeatureMatrix, exec: Exec) -> Result<Vec<f64>> {
        if features.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: features.n_cols(),
            });
        }
        let c = self.n_classes;
        let mut out = vec![0.0; features.n_rows() * c];
        exec.for_each_chunk_mut(&mut out, c * ROW_BLOCK, |blk, chunk| {
            let mut raw = vec![0.0; c];
            for (k, o) in chunk.chunks_mut(c).enumerate() {
                self.raw_row(features.row(blk * ROW_BLOCK + k), &mut raw);
                softmax(&raw, o);
            }
        });
        Ok(out)
    }

    /// One boosting round starting from this ensemble's own raw scores.
    pub fn boost_round(
        &mut self,
        binned: &BinnedMatrix,
        y: &[u32],
        w: &[f64],
        config: &GbtConfig,
        exec: Exec,
    ) -> RoundStats {
        let mut raw = self.raw_binned(binned, exec);
        self.boost_round_from(binned, y, w, &mut raw, config, exec)
    }

    /// One boosting round from caller-supplied raw scores (which may carry an
    /// offset not stored in the ensemble). `raw` is updated in place.
    pub fn boost_round_from(
        &mut self,
        binned: &BinnedMatrix,
        y: &[u32],
        w: &[f64],
        raw: &mut [f64],
        config: &GbtConfig,
        exec: Exec,
    ) -> RoundStats {
        let c = self.n_classes;
        let n = binned.n_rows();
        debug_assert_eq!(raw.len(), n * c);
        let loss_before = weighted_log_loss(raw, y, w, c);
        let (grad, hess) = softmax_grad_hess(raw, y, w, c);
        let rows: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
        let stage: Vec<Tree> = exec.map_range(c, |k| {
            let g: Vec<f64> = (0..n).map(|i| grad[i * c + k]).collect();
            let h: Vec<f64> = (0..n).map(|i| hess[i * c + k]).collect();
            grow_tree(binned, &g, &h, &rows, &self.bin_mapper, config, exec)
        });
        let lr = self.learning_rate;
        exec.for_each_chunk_mut(raw, c * ROW_BLOCK, |blk, chunk| {
            for (k, out) in chunk.chunks_mut(c).enumerate() {
                let i = blk * ROW_BLOCK + k;
                for (o, tree) in out.iter_mut().zip(&stage) {
                    *o += lr * tree.predict_binned(binned, i);
                }
            }
        });
        self.stages.push(stage);
        RoundStats {
            loss_before,
            loss_after: weighted_log_loss(raw, y, w, c),
        }
    }
}

const ROW_BLOCK: usize = 256;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::bins::bin_features;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize, seed: u64) -> (FeatureMatrix, Vec<u32>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            data.extend([a, b]);
            y.push((a + 0.5 * b > 0.0) as u32);
        }
        let w = (0..n).map(|i| if i % 7 == 0 { 0.0 } else { 1.0 + (i % 3) as f64 }).collect();
        (FeatureMatrix::new(n, 2, data).unwrap(), y, w)
    }

    #[test]
    fn prior_matches_weighted_frequencies() {
        let (x, y, w) = toy(200, 1);
        let (_, m) = bin_features(&x, 255).unwrap();
        let e = Ensemble::with_prior(2, 0.1, &y, &w, m);
        let mut p = [0.0; 2];
        softmax(&e.base_scores, &mut p);
        let tot: f64 = w.iter().sum();
        let f1: f64 = y.iter().zip(&w).filter(|(y, _)| **y == 1).map(|(_, w)| w).sum::<f64>() / tot;
        assert!((p[1] - f1).abs() <= 1e-12);
    }

    #[test]
    fn one_round_reduces_loss() {
        let (x, y, w) = toy(300, 2);
        let (b, m) = bin_features(&x, 255).unwrap();
        let mut e = Ensemble::with_prior(2, 0.3, &y, &w, m);
        let s = e.boost_round(&b, &y, &w, &GbtConfig::default(), Exec::Sequential);
        assert!(s.loss_after < s.loss_before);
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let (x, y, w) = toy(100, 3);
        let (b, m) = bin_features(&x, 255).unwrap();
        let mut e = Ensemble::with_prior(2, 0.0, &y, &w, m);
        let before = e.predict_proba(&x).unwrap();
        e.boost_round(&b, &y, &w, &GbtConfig::default(), Exec::Sequential);
        assert_eq!(before, e.predict_proba(&x).unwrap());
    }

    #[test]
    fn deterministic_across_strategies() {
        let (x, y, w) = toy(500, 4);
        let (b, m) = bin_features(&x, 255).unwrap();
        let mut e1 = Ensemble::with_prior(2, 0.2, &y, &w, m.clone());
        let mut e2 = Ensemble::with_prior(2, 0.2, &y, &w, m);
        for _ in 0..5 {
            e1.boost_round(&b, &y, &w, &GbtConfig::default(), Exec::Sequential);
            e2.boost_round(&b, &y, &w, &GbtConfig::default(), Exec::Parallel);
        }
        assert_eq!(e1, e2);
    }

    #[test]
    fn binned_and_raw_prediction_agree() {
        let (x, y, w) = toy(400, 5);
        let (b, m) = bin_features(&x, 32).unwrap();
        let mut e = Ensemble::with_prior(2, 0.2, &y, &w, m);
        for _ in 0..4 {
            e.boost_round(&b, &y, &w, &GbtConfig::default(), Exec::Parallel);
        }
        let rb = e.raw_binned(&b, Exec::Parallel);
        let mut r = [0.0; 2];
        for i in 0..x.n_rows() {
            e.raw_row(x.row(i), &mut r);
            assert_eq!(&rb[2 * i..2 * i + 2], &r);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let (x, y, w) = toy(10, 6);
        let (_, m) = bin_features(&x, 255).unwrap();
        let e = Ensemble::with_prior(2, 0.1, &y, &w, m);
        assert!(e.predict_proba(&FeatureMatrix::zeros(3, 5)).is_err());
    }
}
