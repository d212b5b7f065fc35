//! The classifiers compared by the pipeline: decision tree, random forest,
//! k-nearest neighbors, multilayer perceptron (doubling as the "ANN"
//! configuration), and the booster itself. All share one train/predict
//! contract with uniform lowest-id tie-breaking.

mod dt;
mod knn;
mod mlp;
mod rf;

pub use dt::{train_dt, DTConfig, DecisionTree, DtNode};
pub use knn::{train_knn, KNNConfig, KnnModel};
pub use mlp::{loss_and_gradients, train_mlp, MLPConfig, MlpModel};
pub use rf::{train_rf, RFConfig, RandomForest};

use serde::{Deserialize, Serialize};

use crate::boost::{train_boosted, BoostedForest, GBConfig, Objective};
use crate::dataset::Dataset;
use crate::error::Result;

/// Untrained learner description; carries the hyperparameters a run records
/// in its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum LearnerSpec {
    Dt(DTConfig),
    Rf(RFConfig),
    Knn(KNNConfig),
    Mlp(MLPConfig),
    Gb(GBConfig),
}

impl LearnerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LearnerSpec::Dt(_) => "dt",
            LearnerSpec::Rf(_) => "rf",
            LearnerSpec::Knn(_) => "knn",
            LearnerSpec::Mlp(_) => "mlp",
            LearnerSpec::Gb(_) => "gb",
        }
    }

    /// Reseed the learner's own random stream from a run-level seed.
    pub fn with_seed(mut self, seed: u64) -> LearnerSpec {
        match &mut self {
            LearnerSpec::Rf(c) => c.seed = seed,
            LearnerSpec::Knn(c) => c.seed = seed,
            LearnerSpec::Mlp(c) => c.seed = seed,
            LearnerSpec::Dt(_) | LearnerSpec::Gb(_) => {}
        }
        self
    }
}

/// A trained model of any learner kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum LearnerModel {
    Dt(DecisionTree),
    Rf(RandomForest),
    Knn(KnnModel),
    Mlp(MlpModel),
    Gb(BoostedForest),
}

/// Train any learner on a dataset. The booster's objective is aligned with
/// the dataset's class count automatically.
pub fn train(data: &Dataset, spec: &LearnerSpec) -> Result<LearnerModel> {
    Ok(match spec {
        LearnerSpec::Dt(cfg) => LearnerModel::Dt(train_dt(data, cfg)?),
        LearnerSpec::Rf(cfg) => LearnerModel::Rf(train_rf(data, cfg)?),
        LearnerSpec::Knn(cfg) => LearnerModel::Knn(train_knn(data, cfg)?),
        LearnerSpec::Mlp(cfg) => LearnerModel::Mlp(train_mlp(data, cfg)?),
        LearnerSpec::Gb(cfg) => {
            let mut cfg = cfg.clone();
            cfg.objective = if data.n_classes() <= 2 {
                Objective::BinaryLogistic
            } else {
                Objective::Softmax {
                    n_classes: data.n_classes(),
                }
            };
            LearnerModel::Gb(train_boosted(data, &cfg)?)
        }
    })
}

impl LearnerModel {
    pub fn predict(&self, row: &[f64]) -> Result<u32> {
        match self {
            LearnerModel::Dt(m) => m.predict(row),
            LearnerModel::Rf(m) => m.predict(row),
            LearnerModel::Knn(m) => m.predict(row),
            LearnerModel::Mlp(m) => m.predict(row),
            LearnerModel::Gb(m) => m.predict_class(row),
        }
    }

    /// Per-class scores in [0,1] summing to 1; the ROC/AUC score source.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        match self {
            LearnerModel::Dt(m) => m.predict_proba(row),
            LearnerModel::Rf(m) => m.predict_proba(row),
            LearnerModel::Knn(m) => m.predict_proba(row),
            LearnerModel::Mlp(m) => m.predict_proba(row),
            LearnerModel::Gb(m) => m.predict_proba(row),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            LearnerModel::Dt(m) => m.n_classes,
            LearnerModel::Rf(m) => m.n_classes,
            LearnerModel::Knn(m) => m.n_classes,
            LearnerModel::Mlp(m) => m.n_classes,
            LearnerModel::Gb(m) => m.config.objective.n_groups().max(2),
        }
    }
}
