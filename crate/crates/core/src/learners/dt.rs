//! CART-style decision tree: greedy splits minimizing weighted Gini
//! impurity, majority-class leaves with class-count fractions as scores.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DTConfig {
    /// None = grow until pure or below `min_samples_split`.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for DTConfig {
    fn default() -> Self {
        DTConfig {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl DTConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::Config(
                "min_samples_split must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Training class counts at the leaf; prediction is the argmax with
        /// ties to the lowest class id.
        counts: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<DtNode>,
    pub n_classes: usize,
    pub n_features: usize,
}

#[derive(Debug, Clone, Copy)]
struct GiniSplit {
    weighted: f64,
    feature: usize,
    threshold: f64,
}

impl GiniSplit {
    fn better_than(&self, other: &GiniSplit) -> bool {
        if self.weighted != other.weighted {
            return self.weighted < other.weighted;
        }
        if self.feature != other.feature {
            return self.feature < other.feature;
        }
        self.threshold < other.threshold
    }
}

fn gini_from_counts(counts: &[u32], total: u32) -> f64 {
    let n = f64::from(total);
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = f64::from(c) / n;
            p * p
        })
        .sum::<f64>()
}

/// Tree builder shared by the plain decision tree (all features candidate at
/// every node) and the random forest (a seeded random subset per node).
pub(crate) struct GiniTreeBuilder<'a> {
    pub x: &'a Matrix,
    pub y: &'a [u32],
    pub n_classes: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// RF mode: number of candidate features drawn per node.
    pub features_per_split: Option<usize>,
}

impl<'a> GiniTreeBuilder<'a> {
    pub fn fit(&self, rows: Vec<u32>, rng: &mut Option<&mut ChaCha20Rng>) -> Vec<DtNode> {
        let mut nodes = Vec::new();
        self.grow(rows, 0, &mut nodes, rng);
        nodes
    }

    fn class_counts(&self, rows: &[u32]) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_classes];
        for &i in rows {
            counts[self.y[i as usize] as usize] += 1;
        }
        counts
    }

    fn grow(
        &self,
        rows: Vec<u32>,
        depth: usize,
        nodes: &mut Vec<DtNode>,
        rng: &mut Option<&mut ChaCha20Rng>,
    ) -> usize {
        let counts = self.class_counts(&rows);
        let total = rows.len() as u32;
        let node_gini = gini_from_counts(&counts, total);
        let depth_ok = self.max_depth.map_or(true, |m| depth < m);
        let splittable =
            depth_ok && rows.len() >= self.min_samples_split && node_gini > 0.0;

        let best = if splittable {
            let candidates: Vec<usize> = match self.features_per_split {
                None => (0..self.x.n_cols()).collect(),
                Some(m) => sample_features(self.x.n_cols(), m, rng.as_deref_mut()),
            };
            self.best_split(&rows, &counts, total, &candidates)
        } else {
            None
        };

        match best {
            Some(s) if s.weighted < node_gini => {
                let (l, r): (Vec<u32>, Vec<u32>) = rows
                    .iter()
                    .partition(|&&i| self.x.get(i as usize, s.feature) < s.threshold);
                let id = nodes.len();
                nodes.push(DtNode::Leaf { counts: vec![] }); // placeholder
                let left = self.grow(l, depth + 1, nodes, rng);
                let right = self.grow(r, depth + 1, nodes, rng);
                nodes[id] = DtNode::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                };
                id
            }
            _ => {
                let id = nodes.len();
                nodes.push(DtNode::Leaf { counts });
                id
            }
        }
    }

    fn best_split(
        &self,
        rows: &[u32],
        counts: &[u32],
        total: u32,
        candidates: &[usize],
    ) -> Option<GiniSplit> {
        let mut best: Option<GiniSplit> = None;
        let mut vals: Vec<(f64, u32)> = Vec::with_capacity(rows.len());
        for &feature in candidates {
            vals.clear();
            vals.extend(
                rows.iter()
                    .map(|&i| (self.x.get(i as usize, feature), self.y[i as usize])),
            );
            vals.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut left = vec![0u32; self.n_classes];
            let n = f64::from(total);
            for w in 0..vals.len() - 1 {
                left[vals[w].1 as usize] += 1;
                if vals[w].0 == vals[w + 1].0 {
                    continue;
                }
                let nl = (w + 1) as u32;
                let nr = total - nl;
                let right: Vec<u32> = counts.iter().zip(&left).map(|(&c, &l)| c - l).collect();
                let weighted = (f64::from(nl) * gini_from_counts(&left, nl)
                    + f64::from(nr) * gini_from_counts(&right, nr))
                    / n;
                let cand = GiniSplit {
                    weighted,
                    feature,
                    threshold: 0.5 * (vals[w].0 + vals[w + 1].0),
                };
                if best.map_or(true, |b| cand.better_than(&b)) {
                    best = Some(cand);
                }
            }
        }
        best
    }
}

/// Draw `m` distinct feature indices (ascending) via partial Fisher-Yates.
fn sample_features(d: usize, m: usize, rng: Option<&mut ChaCha20Rng>) -> Vec<usize> {
    let m = m.min(d);
    match rng {
        None => (0..d).collect(),
        Some(rng) => {
            let mut pool: Vec<usize> = (0..d).collect();
            for i in 0..m {
                let j = rng.gen_range(i..d);
                pool.swap(i, j);
            }
            let mut picked = pool[..m].to_vec();
            picked.sort_unstable();
            picked
        }
    }
}

pub fn train_dt(data: &Dataset, cfg: &DTConfig) -> Result<DecisionTree> {
    cfg.validate()?;
    let builder = GiniTreeBuilder {
        x: &data.x,
        y: &data.y,
        n_classes: data.n_classes(),
        max_depth: cfg.max_depth,
        min_samples_split: cfg.min_samples_split,
        features_per_split: None,
    };
    let nodes = builder.fit((0..data.n_rows() as u32).collect(), &mut None);
    Ok(DecisionTree {
        nodes,
        n_classes: data.n_classes(),
        n_features: data.n_features(),
    })
}

impl DecisionTree {
    fn leaf_counts(&self, row: &[f64]) -> Result<&[u32]> {
        if row.len() != self.n_features {
            return Err(Error::Shape {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                DtNode::Leaf { counts } => return Ok(counts),
                DtNode::Split {
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

    pub fn predict(&self, row: &[f64]) -> Result<u32> {
        let counts = self.leaf_counts(row)?;
        Ok(argmax_counts(counts))
    }

    /// Leaf class fractions.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        let counts = self.leaf_counts(row)?;
        let total: u32 = counts.iter().sum();
        Ok(counts
            .iter()
            .map(|&c| f64::from(c) / f64::from(total))
            .collect())
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[DtNode], i: usize) -> usize {
            match &nodes[i] {
                DtNode::Leaf { .. } => 0,
                DtNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

pub(crate) fn argmax_counts(counts: &[u32]) -> u32 {
    let mut best = 0usize;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best as u32
}
