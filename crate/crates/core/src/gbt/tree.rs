use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::bins::{BinMapper, BinnedMatrix, MISSING_BIN};
use super::GbtConfig;
use crate::exec::Exec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x <= threshold` (equivalently `bin <= bin`) go left;
    /// missing values follow `missing_left`.
    Split {
        feature: u32,
        bin: u8,
        threshold: f64,
        missing_left: bool,
        left: u32,
        right: u32,
    },
}

/// Binary regression tree stored as a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    missing_left,
                    left,
                    right,
                    ..
                } => {
                    let v = x[*feature as usize];
                    let go_left = if v.is_nan() {
                        *missing_left
                    } else {
                        v <= *threshold
                    };
                    i = if go_left { *left } else { *right } as usize;
                }
            }
        }
    }

    /// Same as [`Tree::predict_row`] on pre-binned data.
    #[inline]
    pub fn predict_binned(&self, binned: &BinnedMatrix, row: usize) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    bin,
                    missing_left,
                    left,
                    right,
                    ..
                } => {
                    let b = binned.get(row, *feature as usize);
                    let go_left = if b == MISSING_BIN {
                        *missing_left
                    } else {
                        b <= *bin
                    };
                    i = if go_left { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + rec(nodes, *left as usize).max(rec(nodes, *right as usize))
                }
            }
        }
        rec(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    feature: usize,
    bin: u8,
    missing_left: bool,
    gain: f64,
}

/// Per-bin `(sum grad, sum hess, row count)`.
type Histogram = Vec<(f64, f64, usize)>;

fn leaf_value(g: f64, h: f64, config: &GbtConfig) -> f64 {
    let denom = h + config.l2_regularization;
    if !(denom > 0.0) {
        return 0.0;
    }
    let v = -g / denom;
    let cap = config.max_delta_step;
    if cap > 0.0 {
        v.clamp(-cap, cap)
    } else {
        v
    }
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

fn build_histograms(
    binned: &BinnedMatrix,
    grad: &[f64],
    hess: &[f64],
    rows: &[usize],
    exec: Exec,
) -> Vec<Histogram> {
    exec.map_range(binned.n_cols(), |j| {
        let col = binned.column(j);
        let mut hist = vec![(0.0, 0.0, 0); 256];
        for &r in rows {
            let e = &mut hist[col[r] as usize];
            e.0 += grad[r];
            e.1 += hess[r];
            e.2 += 1;
        }
        hist
    })
}

fn best_split_for_feature(
    j: usize,
    hist: &Histogram,
    n_bins: usize,
    g_total: f64,
    h_total: f64,
    n_total: usize,
    config: &GbtConfig,
) -> Option<SplitCandidate> {
    let lambda = config.l2_regularization;
    let parent = score(g_total, h_total, lambda);
    let (g_miss, h_miss, n_miss) = hist[MISSING_BIN as usize];
    let has_missing = n_miss > 0;
    let mut best: Option<SplitCandidate> = None;
    let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0);
    for b in 0..n_bins {
        gl += hist[b].0;
        hl += hist[b].1;
        nl += hist[b].2;
        let last = b + 1 == n_bins;
        // missing right, then missing left
        for missing_left in [false, true] {
            if missing_left && !has_missing {
                continue;
            }
            if last && (missing_left || !has_missing) {
                continue;
            }
            let (gll, hll, nll) = if missing_left {
                (gl + g_miss, hl + h_miss, nl + n_miss)
            } else {
                (gl, hl, nl)
            };
            let (gr, hr) = (g_total - gll, h_total - hll);
            if nll < config.min_samples_leaf || n_total - nll < config.min_samples_leaf {
                continue;
            }
            if hll < config.min_child_weight || hr < config.min_child_weight {
                continue;
            }
            if hll <= 0.0 || hr <= 0.0 {
                continue;
            }
            let children = score(gll, hll, lambda) + score(gr, hr, lambda);
            let gain = children - parent;
            // rounding noise on a split that does nothing is not a gain
            if gain <= 1e-12 * children {
                continue;
            }
            if best.is_none_or(|c| gain > c.gain) {
                let ml = if has_missing {
                    missing_left
                } else {
                    hll >= hr
                };
                best = Some(SplitCandidate {
                    feature: j,
                    bin: b as u8,
                    missing_left: ml,
                    gain,
                });
            }
        }
    }
    best
}

struct Pending {
    node: usize,
    rows: Vec<usize>,
    depth: usize,
    g: f64,
    h: f64,
}

/// Greedy depth-wise growth on one class's gradients and hessians.
///
/// Only `rows` take part; gain is `G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)`
/// and leaves take the Newton value `-G/(H+l)`. Equal gains resolve to the
/// lowest feature, then the lowest bin.
pub fn grow_tree(
    binned: &BinnedMatrix,
    grad: &[f64],
    hess: &[f64],
    rows: &[usize],
    mapper: &BinMapper,
    config: &GbtConfig,
    exec: Exec,
) -> Tree {
    let (g0, h0) = rows
        .iter()
        .fold((0.0, 0.0), |(g, h), &r| (g + grad[r], h + hess[r]));
    let mut nodes = vec![Node::Leaf {
        value: leaf_value(g0, h0, config),
    }];
    let mut queue = VecDeque::from([Pending {
        node: 0,
        rows: rows.to_vec(),
        depth: 0,
        g: g0,
        h: h0,
    }]);
    while let Some(p) = queue.pop_front() {
        if p.depth >= config.max_depth || p.rows.len() < 2 * config.min_samples_leaf.max(1) {
            continue;
        }
        let hists = build_histograms(binned, grad, hess, &p.rows, exec);
        let candidates = exec.map_range(hists.len(), |j| {
            best_split_for_feature(j, &hists[j], mapper.n_bins(j), p.g, p.h, p.rows.len(), config)
        });
        let mut best: Option<SplitCandidate> = None;
        for c in candidates.into_iter().flatten() {
            if best.is_none_or(|b| c.gain > b.gain) {
                best = Some(c);
            }
        }
        let Some(split) = best else { continue };

        let col = binned.column(split.feature);
        let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
        for &r in &p.rows {
            let b = col[r];
            let go_left = if b == MISSING_BIN {
                split.missing_left
            } else {
                b <= split.bin
            };
            if go_left {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }
        let sum = |rs: &[usize]| {
            rs.iter()
                .fold((0.0, 0.0), |(g, h), &r| (g + grad[r], h + hess[r]))
        };
        let (gl, hl) = sum(&left_rows);
        let (gr, hr) = sum(&right_rows);
        let left = nodes.len();
        nodes.push(Node::Leaf {
            value: leaf_value(gl, hl, config),
        });
        nodes.push(Node::Leaf {
            value: leaf_value(gr, hr, config),
        });
        nodes[p.node] = Node::Split {
            feature: split.feature as u32,
            bin: split.bin,
            threshold: mapper.threshold(split.feature, split.bin),
            missing_left: split.missing_left,
            left: left as u32,
            right: left as u32 + 1,
        };
        queue.push_back(Pending {
            node: left,
            rows: left_rows,
            depth: p.depth + 1,
            g: gl,
            h: hl,
        });
        queue.push_back(Pending {
            node: left + 1,
            rows: right_rows,
            depth: p.depth + 1,
            g: gr,
            h: hr,
        });
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GbtConfig {
        GbtConfig {
            min_samples_leaf: 1,
            max_delta_step: 0.0,
            ..GbtConfig::default()
        }
    }

    use crate::data::FeatureMatrix;
    use crate::gbt::bins::bin_features;

    fn setup(x: &[f64]) -> (BinnedMatrix, BinMapper) {
        bin_features(&FeatureMatrix::new(x.len(), 1, x.to_vec()).unwrap(), 255).unwrap()
    }

    #[test]
    fn equal_gradients_give_root_leaf() {
        let (b, m) = setup(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let g = vec![0.3; 5];
        let h = vec![0.2; 5];
        let t = grow_tree(&b, &g, &h, &[0, 1, 2, 3, 4], &m, &small(), Exec::Sequential);
        assert_eq!(t.nodes.len(), 1);
        let Node::Leaf { value } = t.nodes[0] else { panic!() };
        assert!((value - (-1.5 / 1.0)).abs() < 1e-12);
    }

    /// Exhaustive enumeration of single splits over bins.
    fn oracle_best_bin(bins: &[u8], g: &[f64], h: &[f64]) -> u8 {
        let max_bin = *bins.iter().max().unwrap();
        let gt: f64 = g.iter().sum();
        let ht: f64 = h.iter().sum();
        let mut best = (f64::NEG_INFINITY, 0u8);
        for t in 0..max_bin {
            let (mut gl, mut hl) = (0.0, 0.0);
            for i in 0..bins.len() {
                if bins[i] <= t {
                    gl += g[i];
                    hl += h[i];
                }
            }
            let gain = gl * gl / hl + (gt - gl).powi(2) / (ht - hl) - gt * gt / ht;
            if gain > best.0 {
                best = (gain, t);
            }
        }
        best.1
    }

    #[test]
    fn separable_feature_gives_depth_one_split() {
        let x: Vec<f64> = (0..16).map(f64::from).collect();
        let (b, m) = setup(&x);
        let g: Vec<f64> = (0..16).map(|i| if i < 6 { -1.0 } else { 1.0 }).collect();
        let h = vec![1.0; 16];
        let cfg = GbtConfig {
            max_depth: 1,
            ..small()
        };
        let rows: Vec<usize> = (0..16).collect();
        let t = grow_tree(&b, &g, &h, &rows, &m, &cfg, Exec::Sequential);
        assert_eq!(t.depth(), 1);
        let Node::Split { bin, threshold, .. } = t.nodes[0] else { panic!() };
        assert_eq!(bin, oracle_best_bin(b.column(0), &g, &h));
        assert_eq!(threshold, 5.5);
        assert_eq!(t.predict_row(&[3.0]), 1.0);
        assert_eq!(t.predict_row(&[9.0]), -1.0);
    }

    #[test]
    fn min_child_weight_binds() {
        let (b, m) = setup(&[1.0, 2.0, 3.0, 4.0]);
        let g = vec![-1.0, -1.0, 1.0, 1.0];
        let h = vec![1.0; 4];
        let cfg = GbtConfig {
            min_child_weight: 10.0,
            ..small()
        };
        let t = grow_tree(&b, &g, &h, &[0, 1, 2, 3], &m, &cfg, Exec::Sequential);
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn missing_routed_by_gain() {
        let x = [1.0, 2.0, f64::NAN, f64::NAN, 3.0, 4.0];
        let (b, m) = setup(&x);
        let g = vec![-1.0, -1.0, 1.0, 1.0, 1.0, 1.0];
        let h = vec![1.0; 6];
        let cfg = GbtConfig {
            max_depth: 1,
            ..small()
        };
        let t = grow_tree(&b, &g, &h, &[0, 1, 2, 3, 4, 5], &m, &cfg, Exec::Sequential);
        for (i, &v) in x.iter().enumerate() {
            assert_eq!(t.predict_row(&[v]), t.predict_binned(&b, i));
        }
        assert_eq!(t.predict_row(&[f64::NAN]), t.predict_row(&[4.0]));
    }

    #[test]
    fn tie_breaks_to_lowest_feature() {
        let x = FeatureMatrix::new(4, 2, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
        let (b, m) = bin_features(&x, 255).unwrap();
        let g = vec![-1.0, -1.0, 1.0, 1.0];
        let h = vec![1.0; 4];
        let t = grow_tree(&b, &g, &h, &[0, 1, 2, 3], &m, &small(), Exec::Parallel);
        let Node::Split { feature, bin, .. } = t.nodes[0] else { panic!() };
        assert_eq!((feature, bin), (0, 1));
    }

    #[test]
    fn min_samples_leaf_blocks_small_children() {
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let fm = FeatureMatrix::new(40, 1, x).unwrap();
        let (b, m) = bin_features(&fm, 255).unwrap();
        // only row 0 differs, so the best unconstrained split isolates it
        let g: Vec<f64> = (0..40).map(|i| if i == 0 { -5.0 } else { 0.1 }).collect();
        let h = vec![1.0; 40];
        let rows: Vec<usize> = (0..40).collect();
        let cfg = GbtConfig {
            max_depth: 1,
            min_samples_leaf: 15,
            ..GbtConfig::default()
        };
        let t = grow_tree(&b, &g, &h, &rows, &m, &cfg, Exec::Sequential);
        let Node::Split { bin, .. } = t.nodes[0] else { panic!() };
        let n_left = b.column(0).iter().filter(|&&v| v <= bin).count();
        assert!((15..=25).contains(&n_left));
    }
}
