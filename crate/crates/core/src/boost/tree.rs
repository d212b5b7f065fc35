//! Regression-tree construction for the booster: exact greedy split search
//! over sorted distinct values, or an optional quantile-binned search for
//! very large inputs. Both are deterministic regardless of thread schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{leaf_weight, split_gain};
use super::GBConfig;
use crate::error::Result;
use crate::matrix::Matrix;

/// One node of a regression tree. Internal nodes route `x[feature] <
/// threshold` to `left`, else `right`; indices point into the owning tree's
/// node array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
    },
}

/// A regression tree as a flat node array, root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Raw leaf output for one row (learning rate not applied here).
    pub fn output(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    /// Total preference order: higher gain, then lower feature index, then
    /// lower threshold. Ties on all three are identical candidates, so a
    /// parallel reduce with this is schedule-independent.
    fn better_than(&self, other: &Candidate) -> bool {
        if self.gain != other.gain {
            return self.gain > other.gain;
        }
        if self.feature != other.feature {
            return self.feature < other.feature;
        }
        self.threshold < other.threshold
    }
}

/// Pre-binned feature matrix for the quantile split mode. `cuts[f]` holds
/// ascending real thresholds; a value lands in the first bin whose cut
/// exceeds it, so stored trees route with real-valued thresholds exactly as
/// in exact mode.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    cuts: Vec<Vec<f64>>,
    bins: Vec<u16>,
    n_cols: usize,
}

impl BinnedMatrix {
    pub fn build(x: &Matrix, max_bins: usize) -> BinnedMatrix {
        let max_bins = max_bins.clamp(2, u16::MAX as usize);
        let n = x.n_rows();
        let d = x.n_cols();
        let cuts: Vec<Vec<f64>> = (0..d)
            .into_par_iter()
            .map(|f| {
                let mut vals: Vec<f64> = (0..n).map(|i| x.get(i, f)).collect();
                vals.sort_unstable_by(f64::total_cmp);
                vals.dedup();
                if vals.len() <= max_bins {
                    // few distinct values: cuts at every midpoint, exact behavior
                    vals.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
                } else {
                    let mut c: Vec<f64> = (1..max_bins)
                        .map(|b| {
                            let idx = b * vals.len() / max_bins;
                            0.5 * (vals[idx - 1] + vals[idx])
                        })
                        .collect();
                    c.dedup();
                    c
                }
            })
            .collect();
        let mut bins = vec![0u16; n * d];
        bins.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
            for f in 0..d {
                let v = x.get(i, f);
                // first cut strictly greater than v
                let b = cuts[f].partition_point(|&c| c <= v);
                row[f] = b as u16;
            }
        });
        BinnedMatrix {
            cuts,
            bins,
            n_cols: d,
        }
    }

    #[inline]
    fn bin(&self, row: usize, feature: usize) -> usize {
        self.bins[row * self.n_cols + feature] as usize
    }
}

pub struct TreeBuilder<'a> {
    x: &'a Matrix,
    g: &'a [f64],
    h: &'a [f64],
    cfg: &'a GBConfig,
    binned: Option<&'a BinnedMatrix>,
}

impl<'a> TreeBuilder<'a> {
    pub fn new(
        x: &'a Matrix,
        g: &'a [f64],
        h: &'a [f64],
        cfg: &'a GBConfig,
        binned: Option<&'a BinnedMatrix>,
    ) -> TreeBuilder<'a> {
        debug_assert_eq!(g.len(), x.n_rows());
        debug_assert_eq!(h.len(), x.n_rows());
        TreeBuilder {
            x,
            g,
            h,
            cfg,
            binned,
        }
    }

    /// Grow one tree over all rows; realized split gains are accumulated
    /// into `cum_gain` (one slot per feature).
    pub fn build(&self, cum_gain: &mut [f64]) -> Result<Tree> {
        let rows: Vec<u32> = (0..self.x.n_rows() as u32).collect();
        let mut nodes = Vec::new();
        self.grow(rows, 0, &mut nodes, cum_gain)?;
        Ok(Tree { nodes })
    }

    fn grow(
        &self,
        rows: Vec<u32>,
        depth: usize,
        nodes: &mut Vec<TreeNode>,
        cum_gain: &mut [f64],
    ) -> Result<usize> {
        debug_assert!(!rows.is_empty(), "empty node sample set is unreachable");
        let g_sum: f64 = rows.iter().map(|&i| self.g[i as usize]).sum();
        let h_sum: f64 = rows.iter().map(|&i| self.h[i as usize]).sum();

        let best = if depth >= self.cfg.max_depth {
            None
        } else {
            self.best_split(&rows, g_sum, h_sum)
        };

        match best {
            Some(c) if c.gain > 0.0 => {
                let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
                    .iter()
                    .partition(|&&i| self.x.get(i as usize, c.feature) < c.threshold);
                cum_gain[c.feature] += c.gain;
                let id = nodes.len();
                nodes.push(TreeNode::Leaf { weight: 0.0 }); // placeholder
                let left = self.grow(left_rows, depth + 1, nodes, cum_gain)?;
                let right = self.grow(right_rows, depth + 1, nodes, cum_gain)?;
                nodes[id] = TreeNode::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
                Ok(id)
            }
            _ => {
                let id = nodes.len();
                nodes.push(TreeNode::Leaf {
                    weight: leaf_weight(g_sum, h_sum, self.cfg.lambda)?,
                });
                Ok(id)
            }
        }
    }

    fn best_split(&self, rows: &[u32], g_sum: f64, h_sum: f64) -> Option<Candidate> {
        let d = self.x.n_cols();
        (0..d)
            .into_par_iter()
            .filter_map(|f| match self.binned {
                Some(b) => self.scan_feature_binned(f, rows, g_sum, h_sum, b),
                None => self.scan_feature_exact(f, rows, g_sum, h_sum),
            })
            .reduce_with(|a, b| if b.better_than(&a) { b } else { a })
    }

    /// Exact greedy: sort the node's values for one feature and test every
    /// midpoint between consecutive distinct values.
    fn scan_feature_exact(
        &self,
        feature: usize,
        rows: &[u32],
        g_sum: f64,
        h_sum: f64,
    ) -> Option<Candidate> {
        let mut vals: Vec<(f64, f64, f64)> = rows
            .iter()
            .map(|&i| {
                let i = i as usize;
                (self.x.get(i, feature), self.g[i], self.h[i])
            })
            .collect();
        vals.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut best: Option<Candidate> = None;
        let mut gl = 0.0;
        let mut hl = 0.0;
        for w in 0..vals.len() - 1 {
            gl += vals[w].1;
            hl += vals[w].2;
            if vals[w].0 == vals[w + 1].0 {
                continue;
            }
            let hr = h_sum - hl;
            if hl < self.cfg.min_child_weight || hr < self.cfg.min_child_weight {
                continue;
            }
            let gr = g_sum - gl;
            let gain = split_gain(gl, hl, gr, hr, self.cfg.lambda, self.cfg.gamma);
            let cand = Candidate {
                gain,
                feature,
                threshold: 0.5 * (vals[w].0 + vals[w + 1].0),
            };
            if best.map_or(true, |b| cand.better_than(&b)) {
                best = Some(cand);
            }
        }
        best
    }

    /// Quantile mode: accumulate per-bin gradient sums and test every cut.
    fn scan_feature_binned(
        &self,
        feature: usize,
        rows: &[u32],
        g_sum: f64,
        h_sum: f64,
        binned: &BinnedMatrix,
    ) -> Option<Candidate> {
        let cuts = &binned.cuts[feature];
        if cuts.is_empty() {
            return None;
        }
        let n_bins = cuts.len() + 1;
        let mut hist = vec![(0.0f64, 0.0f64); n_bins];
        for &i in rows {
            let i = i as usize;
            let b = binned.bin(i, feature);
            hist[b].0 += self.g[i];
            hist[b].1 += self.h[i];
        }
        let mut best: Option<Candidate> = None;
        let mut gl = 0.0;
        let mut hl = 0.0;
        for (b, &cut) in cuts.iter().enumerate() {
            gl += hist[b].0;
            hl += hist[b].1;
            let hr = h_sum - hl;
            if hl < self.cfg.min_child_weight || hr < self.cfg.min_child_weight {
                continue;
            }
            let gr = g_sum - gl;
            let gain = split_gain(gl, hl, gr, hr, self.cfg.lambda, self.cfg.gamma);
            let cand = Candidate {
                gain,
                feature,
                threshold: cut,
            };
            if best.map_or(true, |b| cand.better_than(&b)) {
                best = Some(cand);
            }
        }
        best
    }
}
