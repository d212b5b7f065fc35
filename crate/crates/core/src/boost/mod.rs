//! Second-order gradient-boosted regression trees. Serves as both a
//! classifier and the source of gain-based feature importance that drives
//! feature selection.

mod objective;
mod tree;

pub use objective::{grad_hess, leaf_weight, log_loss, sigmoid, softmax, split_gain, Objective};
pub use tree::{BinnedMatrix, Tree, TreeBuilder, TreeNode};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Booster hyperparameters. Defaults are the canonical ones and are recorded
/// in run manifests so results stay auditable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBConfig {
    pub n_rounds: usize,
    pub max_depth: usize,
    /// Learning rate in (0, 1]; applied when margins are accumulated, leaf
    /// weights are stored raw.
    pub eta: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Per-leaf complexity penalty subtracted from every split gain.
    pub gamma: f64,
    /// Minimum hessian sum allowed in a child.
    pub min_child_weight: f64,
    pub objective: Objective,
    /// When set, split search runs on quantile-binned features (at most this
    /// many bins per feature) instead of exact sorted values.
    pub quantile_bins: Option<usize>,
}

impl Default for GBConfig {
    fn default() -> Self {
        GBConfig {
            n_rounds: 50,
            max_depth: 6,
            eta: 0.3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            objective: Objective::BinaryLogistic,
            quantile_bins: None,
        }
    }
}

impl GBConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            log::warn!("n_rounds = 0: forest will predict the base score only");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!("eta must be in (0,1], got {}", self.eta)));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("min_child_weight", self.min_child_weight),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if let Objective::Softmax { n_classes } = self.objective {
            if n_classes < 2 {
                return Err(Error::Config("softmax needs at least 2 classes".into()));
            }
        }
        if let Some(b) = self.quantile_bins {
            if b < 2 {
                return Err(Error::Config("quantile_bins must be at least 2".into()));
            }
        }
        Ok(())
    }
}

/// An ordered feature ranking by accumulated split gain, ties broken by
/// ascending feature index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    /// Feature indices, best first; a permutation of 0..d.
    pub order: Vec<usize>,
    /// Gain of `order[i]`, non-increasing.
    pub gains: Vec<f64>,
    /// Identifier of the forest the ranking came from.
    pub source: String,
}

impl FeatureRanking {
    pub fn new(order: Vec<usize>, gains: Vec<f64>, source: String) -> Result<FeatureRanking> {
        if order.len() != gains.len() {
            return Err(Error::Shape {
                expected: order.len(),
                got: gains.len(),
            });
        }
        let mut seen = vec![false; order.len()];
        for &f in &order {
            if f >= order.len() || seen[f] {
                return Err(Error::Data("ranking is not a permutation of 0..d".into()));
            }
            seen[f] = true;
        }
        if gains.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Data("ranking gains must be non-increasing".into()));
        }
        Ok(FeatureRanking {
            order,
            gains,
            source,
        })
    }

    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }
}

/// Trained additive model: `margin = base_score + eta * sum(tree outputs)`.
/// For softmax, trees are stored round-major (`round * n_classes + class`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedForest {
    pub trees: Vec<Tree>,
    pub base_score: f64,
    pub config: GBConfig,
    /// Total realized split gain per feature; zero iff the feature never
    /// splits.
    pub cum_gain: Vec<f64>,
    pub n_features: usize,
    /// Mean training log loss before any tree and after each round.
    pub train_loss: Vec<f64>,
}

/// Fit a boosted forest: each round fits one tree per margin group to the
/// current gradient/hessian statistics, then advances the margins by
/// `eta * output`.
pub fn train_boosted(data: &Dataset, config: &GBConfig) -> Result<BoostedForest> {
    config.validate()?;
    let groups = config.objective.n_groups();
    match config.objective {
        Objective::BinaryLogistic => {
            if data.y.iter().any(|&l| l > 1) {
                return Err(Error::Config(
                    "binary objective requires labels in {0,1}".into(),
                ));
            }
        }
        Objective::Softmax { n_classes } => {
            if data.y.iter().any(|&l| l as usize >= n_classes) {
                return Err(Error::Config(format!(
                    "softmax({n_classes}) saw a label outside [0,{n_classes})"
                )));
            }
        }
    }

    let n = data.n_rows();
    let base_score = match config.objective {
        Objective::BinaryLogistic => {
            let pos = data.y.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
            let p = pos.clamp(1e-6, 1.0 - 1e-6);
            (p / (1.0 - p)).ln()
        }
        Objective::Softmax { .. } => 0.0,
    };

    let binned = config
        .quantile_bins
        .map(|b| BinnedMatrix::build(&data.x, b));

    let mut margins = vec![base_score; n * groups];
    let mut cum_gain = vec![0.0; data.n_features()];
    let mut trees = Vec::with_capacity(config.n_rounds * groups);
    let mean_loss = |margins: &[f64]| -> f64 {
        (0..n)
            .map(|i| {
                log_loss(
                    config.objective,
                    &margins[i * groups..(i + 1) * groups],
                    data.y[i],
                )
            })
            .sum::<f64>()
            / n as f64
    };
    let mut train_loss = vec![mean_loss(&margins)];

    for _ in 0..config.n_rounds {
        let (g, h) = grad_hess(config.objective, &margins, &data.y);
        for k in 0..groups {
            let (gk, hk): (Vec<f64>, Vec<f64>) = if groups == 1 {
                (g.clone(), h.clone())
            } else {
                (
                    (0..n).map(|i| g[i * groups + k]).collect(),
                    (0..n).map(|i| h[i * groups + k]).collect(),
                )
            };
            let tree =
                TreeBuilder::new(&data.x, &gk, &hk, config, binned.as_ref()).build(&mut cum_gain)?;
            let outputs: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| tree.output(data.x.row(i)))
                .collect();
            for (i, o) in outputs.into_iter().enumerate() {
                margins[i * groups + k] += config.eta * o;
            }
            trees.push(tree);
        }
        train_loss.push(mean_loss(&margins));
    }

    Ok(BoostedForest {
        trees,
        base_score,
        config: config.clone(),
        cum_gain,
        n_features: data.n_features(),
        train_loss,
    })
}

impl BoostedForest {
    fn check_width(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::Shape {
                expected: self.n_features,
                got: row.len(),
            });
        }
        Ok(())
    }

    /// Margin score per group for one row.
    pub fn predict_margin(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_width(row)?;
        let groups = self.config.objective.n_groups();
        let mut m = vec![self.base_score; groups];
        for (t, tree) in self.trees.iter().enumerate() {
            m[t % groups] += self.config.eta * tree.output(row);
        }
        Ok(m)
    }

    /// Class probabilities for one row (always length n_classes; binary
    /// returns [P(0), P(1)]).
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        let m = self.predict_margin(row)?;
        Ok(match self.config.objective {
            Objective::BinaryLogistic => {
                let p = sigmoid(m[0]);
                vec![1.0 - p, p]
            }
            Objective::Softmax { .. } => softmax(&m),
        })
    }

    /// Predicted class, ties to the lowest class id.
    pub fn predict_class(&self, row: &[f64]) -> Result<u32> {
        let m = self.predict_margin(row)?;
        Ok(match self.config.objective {
            Objective::BinaryLogistic => u32::from(sigmoid(m[0]) >= 0.5),
            Objective::Softmax { .. } => {
                let mut best = 0usize;
                for (k, &v) in m.iter().enumerate() {
                    if v > m[best] {
                        best = k;
                    }
                }
                best as u32
            }
        })
    }

    /// Features ordered by descending accumulated gain, ties by ascending
    /// index.
    pub fn feature_importance(&self) -> FeatureRanking {
        let mut order: Vec<usize> = (0..self.n_features).collect();
        order.sort_by(|&a, &b| {
            self.cum_gain[b]
                .total_cmp(&self.cum_gain[a])
                .then(a.cmp(&b))
        });
        let gains = order.iter().map(|&f| self.cum_gain[f]).collect();
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(self).expect("forest serializes"));
        let source = format!("{:x}", hasher.finalize());
        FeatureRanking::new(order, gains, source[..16].to_string())
            .expect("importance order is a valid ranking")
    }
}
