//! Random forest: bagged Gini trees with per-node random feature candidates,
//! majority-vote prediction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dt::{argmax_counts, DecisionTree, GiniTreeBuilder};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RFConfig {
    pub n_trees: usize,
    /// Candidate features per node; None = ceil(sqrt(d)).
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for RFConfig {
    fn default() -> Self {
        RFConfig {
            n_trees: 100,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl RFConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if let Some(m) = self.features_per_split {
            if m == 0 || m > d {
                return Err(Error::Config(format!(
                    "features_per_split must be in 1..={d}, got {m}"
                )));
            }
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
    pub n_features: usize,
    pub config: RFConfig,
}

/// Fit `n_trees` trees, each on a bootstrap resample (draws sorted so the
/// training subset is canonical) with its own seed stream `seed + tree_id`.
pub fn train_rf(data: &Dataset, cfg: &RFConfig) -> Result<RandomForest> {
    cfg.validate(data.n_features())?;
    let d = data.n_features();
    let m = cfg
        .features_per_split
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);
    let n = data.n_rows();

    let trees: Vec<DecisionTree> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(t as u64));
            let rows: Vec<u32> = if cfg.bootstrap {
                let mut draws: Vec<u32> =
                    (0..n).map(|_| rng.gen_range(0..n) as u32).collect();
                draws.sort_unstable();
                draws
            } else {
                (0..n as u32).collect()
            };
            let builder = GiniTreeBuilder {
                x: &data.x,
                y: &data.y,
                n_classes: data.n_classes(),
                max_depth: cfg.max_depth,
                min_samples_split: cfg.min_samples_split,
                features_per_split: Some(m),
            };
            let nodes = builder.fit(rows, &mut Some(&mut rng));
            DecisionTree {
                nodes,
                n_classes: data.n_classes(),
                n_features: d,
            }
        })
        .collect();

    Ok(RandomForest {
        trees,
        n_classes: data.n_classes(),
        n_features: d,
        config: cfg.clone(),
    })
}

impl RandomForest {
    /// Majority vote over tree predictions, ties to the lowest class id.
    pub fn predict(&self, row: &[f64]) -> Result<u32> {
        let mut votes = vec![0u32; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(row)? as usize] += 1;
        }
        Ok(argmax_counts(&votes))
    }

    /// Mean of per-tree leaf class fractions (score source for ROC curves).
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.predict_proba(row)?) {
                *a += p;
            }
        }
        let t = self.trees.len() as f64;
        for a in &mut acc {
            *a /= t;
        }
        Ok(acc)
    }
}
