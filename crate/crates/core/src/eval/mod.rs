//! Cross-validated evaluation: fold orchestration, per-fold and pooled
//! metrics, ROC series, and the epoch-scalability check.

mod folds;
mod metrics;

pub use folds::{
    kfold_split, split, stratified_kfold_split, stratified_sample, CvScope, Fold, FoldSpec,
};
pub use metrics::{
    auc, binary_auc, classification_metrics, confusion, macro_ovr_auc, regression_errors,
    roc_points, Averaging, ClassificationMetrics, ConfusionMatrix, RocPoint,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ingest::{apply_stats, standardize};
use crate::learners::{train, train_mlp, LearnerSpec, MLPConfig};
use crate::smote::{smote, SmoteConfig};

/// One learner's metrics, all on the [0,1] scale (reports multiply by 100).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub auc: Option<f64>,
}

/// ROC points for one positive class (one-vs-rest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSeries {
    pub positive_class: usize,
    pub points: Vec<RocPoint>,
}

/// Everything run_cv produces for one learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub per_fold: Vec<MetricsRow>,
    /// Arithmetic mean over folds.
    pub mean: MetricsRow,
    /// Confusion matrix pooled over all fold predictions (each row is tested
    /// exactly once).
    pub confusion: ConfusionMatrix,
    pub roc: Vec<RocSeries>,
    /// AUC of the pooled predictions (macro one-vs-rest for multiclass).
    pub auc: Option<f64>,
    /// Pooled per-row predictions, indexed by original row order.
    pub y_pred: Vec<u32>,
    pub never_predicted: Vec<usize>,
}

fn metrics_row(y_true: &[u32], y_pred: &[u32], proba: &[Vec<f64>], n_classes: usize) -> Result<MetricsRow> {
    let cm = confusion(y_true, y_pred, n_classes)?;
    let cls = classification_metrics(&cm, Averaging::Macro);
    let (mae, mse, rmse) = regression_errors(y_true, y_pred)?;
    let auc_value = pooled_auc(proba, y_true, n_classes);
    Ok(MetricsRow {
        accuracy: cls.accuracy,
        precision: cls.precision,
        recall: cls.recall,
        f1: cls.f1,
        mae,
        mse,
        rmse,
        auc: auc_value,
    })
}

fn pooled_auc(proba: &[Vec<f64>], y: &[u32], n_classes: usize) -> Option<f64> {
    let result = if n_classes == 2 {
        let scores: Vec<f64> = proba.iter().map(|p| p[1]).collect();
        binary_auc(&scores, y)
    } else {
        macro_ovr_auc(proba, y, n_classes)
    };
    match result {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("AUC unavailable: {e}");
            None
        }
    }
}

fn mean_rows(rows: &[MetricsRow]) -> MetricsRow {
    let n = rows.len() as f64;
    let mean = |f: fn(&MetricsRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let aucs: Vec<f64> = rows.iter().filter_map(|r| r.auc).collect();
    MetricsRow {
        accuracy: mean(|r| r.accuracy),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
        mae: mean(|r| r.mae),
        mse: mean(|r| r.mse),
        rmse: mean(|r| r.rmse),
        auc: (aucs.len() == rows.len())
            .then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
    }
}

/// Evaluate one learner over explicit folds. In train-only scope, scaling
/// stats and SMOTE are recomputed inside each training fold and the fold's
/// stats are applied to its test rows; in global scope the dataset is used
/// as supplied (already balanced and scaled upstream).
pub fn evaluate_folds(
    data: &Dataset,
    spec: &LearnerSpec,
    folds: &[Fold],
    scope: CvScope,
    smote_cfg: Option<&SmoteConfig>,
) -> Result<CvOutcome> {
    let n_classes = data.n_classes();
    let fold_results: Vec<(Vec<usize>, Vec<u32>, Vec<Vec<f64>>, MetricsRow)> = folds
        .par_iter()
        .enumerate()
        .map(|(f, (train_idx, test_idx))| {
            let run = || -> Result<_> {
                let (model, test_x) = match scope {
                    CvScope::GlobalSmote => {
                        let train_ds = data.take_rows(train_idx)?;
                        (train(&train_ds, spec)?, data.x.take_rows(test_idx))
                    }
                    CvScope::TrainOnlySmote => {
                        let train_ds = data.take_rows(train_idx)?;
                        let (scaled, stats) = standardize(&train_ds.x);
                        let mut train_ds = Dataset::new(
                            scaled,
                            train_ds.y,
                            train_ds.feature_names,
                            train_ds.class_names,
                            Some(stats.clone()),
                        )?;
                        if let Some(cfg) = smote_cfg {
                            train_ds = smote(&train_ds, cfg)?;
                        }
                        let test_x = apply_stats(&data.x.take_rows(test_idx), &stats)?;
                        (train(&train_ds, spec)?, test_x)
                    }
                };
                let preds: Vec<(u32, Vec<f64>)> = (0..test_x.n_rows())
                    .into_par_iter()
                    .map(|i| {
                        let row = test_x.row(i);
                        Ok((model.predict(row)?, model.predict_proba(row)?))
                    })
                    .collect::<Result<_>>()?;
                let y_pred: Vec<u32> = preds.iter().map(|(c, _)| *c).collect();
                let proba: Vec<Vec<f64>> = preds.into_iter().map(|(_, p)| p).collect();
                let y_true: Vec<u32> = test_idx.iter().map(|&i| data.y[i]).collect();
                let row = metrics_row(&y_true, &y_pred, &proba, n_classes)?;
                Ok((test_idx.clone(), y_pred, proba, row))
            };
            run().map_err(|e| e.in_stage(&format!("fold {f}")))
        })
        .collect::<Result<_>>()?;

    // pooled predictions in original row order
    let n = data.n_rows();
    let mut y_pred = vec![0u32; n];
    let mut proba: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut per_fold = Vec::with_capacity(fold_results.len());
    for (test_idx, preds, probs, row) in fold_results {
        for ((&i, p), pr) in test_idx.iter().zip(preds).zip(probs) {
            y_pred[i] = p;
            proba[i] = pr;
        }
        per_fold.push(row);
    }

    let cm = confusion(&data.y, &y_pred, n_classes)?;
    let cls = classification_metrics(&cm, Averaging::Macro);
    let pooled = pooled_auc(&proba, &data.y, n_classes);
    let roc = roc_series(&proba, &data.y, n_classes);
    Ok(CvOutcome {
        mean: mean_rows(&per_fold),
        per_fold,
        confusion: cm,
        roc,
        auc: pooled,
        y_pred,
        never_predicted: cls.never_predicted,
    })
}

fn roc_series(proba: &[Vec<f64>], y: &[u32], n_classes: usize) -> Vec<RocSeries> {
    let classes: Vec<usize> = if n_classes == 2 {
        vec![1]
    } else {
        (0..n_classes).collect()
    };
    classes
        .into_iter()
        .filter_map(|class| {
            let labels: Vec<u32> = y.iter().map(|&l| u32::from(l as usize == class)).collect();
            let scores: Vec<f64> = proba.iter().map(|p| p[class]).collect();
            roc_points(&scores, &labels).ok().map(|points| RocSeries {
                positive_class: class,
                points,
            })
        })
        .collect()
}

/// K-fold cross-validation of one learner restricted to a feature subset.
pub fn run_cv(
    data: &Dataset,
    spec: &LearnerSpec,
    features: &[usize],
    fold_spec: &FoldSpec,
    smote_cfg: Option<&SmoteConfig>,
) -> Result<CvOutcome> {
    let view = if features.len() == data.n_features()
        && features.iter().enumerate().all(|(i, &f)| i == f)
    {
        data.clone()
    } else {
        data.select_features(features)?
    };
    let folds = split(view.n_rows(), &view.y, fold_spec)?;
    evaluate_folds(&view, spec, &folds, fold_spec.scope, smote_cfg)
}

/// One learner's cross-validated evaluation inside a multi-learner report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerEval {
    pub name: String,
    pub spec: LearnerSpec,
    pub outcome: CvOutcome,
}

/// The full Stage-5 result: every learner evaluated on the same folds and
/// feature subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub learners: Vec<LearnerEval>,
    pub fold_spec: FoldSpec,
    pub features: Vec<usize>,
    pub feature_set_label: String,
    pub class_names: Vec<String>,
}

pub fn evaluate_learners(
    data: &Dataset,
    specs: &[(String, LearnerSpec)],
    features: &[usize],
    fold_spec: &FoldSpec,
    smote_cfg: Option<&SmoteConfig>,
    feature_set_label: &str,
) -> Result<EvalReport> {
    let mut learners = Vec::with_capacity(specs.len());
    for (name, spec) in specs {
        log::info!("evaluating learner '{name}' on {} features", features.len());
        let outcome = run_cv(data, spec, features, fold_spec, smote_cfg)
            .map_err(|e| e.in_stage(&format!("learner {name}")))?;
        learners.push(LearnerEval {
            name: name.clone(),
            spec: spec.clone(),
            outcome,
        });
    }
    Ok(EvalReport {
        learners,
        fold_spec: fold_spec.clone(),
        features: features.to_vec(),
        feature_set_label: feature_set_label.to_string(),
        class_names: data.class_names.clone(),
    })
}

/// Epoch-scalability report: the same MLP trained at each epoch count on a
/// fixed stratified 80/20 holdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityReport {
    pub accuracies: Vec<(usize, f64)>,
    pub max_delta: f64,
    pub tolerance: f64,
    pub scalable: bool,
}

pub fn scalability_check(
    data: &Dataset,
    cfg: &MLPConfig,
    epoch_list: &[usize],
    tolerance: f64,
    seed: u64,
) -> Result<ScalabilityReport> {
    cfg.validate()?;
    if epoch_list.is_empty() {
        return Err(Error::Argument("epoch list must be non-empty".into()));
    }
    let holdout_spec = FoldSpec {
        n_folds: 5,
        seed,
        stratified: true,
        scope: CvScope::GlobalSmote,
    };
    let folds = stratified_kfold_split(&data.y, &holdout_spec)?;
    let (train_idx, test_idx) = &folds[0];
    let train_ds = data.take_rows(train_idx)?;

    let mut accuracies = Vec::with_capacity(epoch_list.len());
    for &epochs in epoch_list {
        let model = train_mlp(
            &train_ds,
            &MLPConfig {
                epochs,
                ..cfg.clone()
            },
        )?;
        let correct = test_idx
            .par_iter()
            .map(|&i| {
                Ok(usize::from(
                    model.predict(data.x.row(i))? == data.y[i],
                ))
            })
            .collect::<Result<Vec<usize>>>()?
            .into_iter()
            .sum::<usize>();
        accuracies.push((epochs, correct as f64 / test_idx.len() as f64));
    }
    let max = accuracies.iter().map(|&(_, a)| a).fold(f64::MIN, f64::max);
    let min = accuracies.iter().map(|&(_, a)| a).fold(f64::MAX, f64::min);
    let max_delta = max - min;
    Ok(ScalabilityReport {
        accuracies,
        max_delta,
        tolerance,
        scalable: max_delta <= tolerance,
    })
}
