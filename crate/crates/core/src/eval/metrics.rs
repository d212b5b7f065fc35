//! Metric suite: confusion matrices, accuracy/precision/recall/F1 with macro
//! and weighted averaging, label-encoding regression errors, ROC curves and
//! trapezoidal AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row = actual class, column = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<u64>,
    pub n_classes: usize,
    pub total: u64,
}

pub fn confusion(y_true: &[u32], y_pred: &[u32], n_classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    let mut counts = vec![0u64; n_classes * n_classes];
    for (&a, &p) in y_true.iter().zip(y_pred) {
        if a as usize >= n_classes || p as usize >= n_classes {
            return Err(Error::Argument(format!(
                "label {} out of range for {n_classes} classes",
                a.max(p)
            )));
        }
        counts[a as usize * n_classes + p as usize] += 1;
    }
    Ok(ConfusionMatrix {
        counts,
        n_classes,
        total: y_true.len() as u64,
    })
}

impl ConfusionMatrix {
    #[inline]
    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.n_classes + predicted]
    }

    pub fn accuracy(&self) -> f64 {
        let trace: u64 = (0..self.n_classes).map(|k| self.get(k, k)).sum();
        trace as f64 / self.total as f64
    }

    /// Entries as percentages of the total; sums to 100 within rounding.
    pub fn to_percent(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64 * 100.0)
            .collect()
    }

    fn row_sum(&self, a: usize) -> u64 {
        (0..self.n_classes).map(|p| self.get(a, p)).sum()
    }

    fn col_sum(&self, p: usize) -> u64 {
        (0..self.n_classes).map(|a| self.get(a, p)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Macro,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Classes with no predicted samples (precision forced to 0 by the 0/0
    /// convention), flagged for the report.
    pub never_predicted: Vec<usize>,
}

/// Per-class precision/recall/F1 with the 0/0 -> 0 convention, averaged
/// macro (unweighted) or weighted by class support.
pub fn classification_metrics(cm: &ConfusionMatrix, averaging: Averaging) -> ClassificationMetrics {
    let k = cm.n_classes;
    let mut precision = vec![0.0; k];
    let mut recall = vec![0.0; k];
    let mut f1 = vec![0.0; k];
    let mut never_predicted = Vec::new();
    for c in 0..k {
        let tp = cm.get(c, c) as f64;
        let col = cm.col_sum(c) as f64;
        let row = cm.row_sum(c) as f64;
        if col == 0.0 {
            never_predicted.push(c);
        }
        precision[c] = if col == 0.0 { 0.0 } else { tp / col };
        recall[c] = if row == 0.0 { 0.0 } else { tp / row };
        f1[c] = if precision[c] + recall[c] == 0.0 {
            0.0
        } else {
            2.0 * precision[c] * recall[c] / (precision[c] + recall[c])
        };
    }
    let weight = |c: usize| -> f64 {
        match averaging {
            Averaging::Macro => 1.0 / k as f64,
            Averaging::Weighted => cm.row_sum(c) as f64 / cm.total as f64,
        }
    };
    let avg = |v: &[f64]| (0..k).map(|c| weight(c) * v[c]).sum::<f64>();
    ClassificationMetrics {
        accuracy: cm.accuracy(),
        precision: avg(&precision),
        recall: avg(&recall),
        f1: avg(&f1),
        never_predicted,
    }
}

/// MAE/MSE/RMSE over integer-encoded labels (percent scaling happens at the
/// report layer).
pub fn regression_errors(y_true: &[u32], y_pred: &[u32]) -> Result<(f64, f64, f64)> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    let n = y_true.len() as f64;
    let mut mae = 0.0;
    let mut mse = 0.0;
    for (&a, &p) in y_true.iter().zip(y_pred) {
        let d = (f64::from(a) - f64::from(p)).abs();
        mae += d;
        mse += d * d;
    }
    mae /= n;
    mse /= n;
    Ok((mae, mse, mse.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Infinite on the (0,0) endpoint; serialized as the string "inf"
    /// because JSON has no non-finite numbers.
    #[serde(with = "inf_f64")]
    pub threshold: f64,
}

mod inf_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(serde::Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// ROC points at every distinct score threshold (classify positive when
/// score >= threshold), from (0,0) to (1,1). `y` holds 0/1 labels with 1 the
/// positive class.
pub fn roc_points(scores: &[f64], y: &[u32]) -> Result<Vec<RocPoint>> {
    if scores.len() != y.len() {
        return Err(Error::Shape {
            expected: scores.len(),
            got: y.len(),
        });
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Data(
            "AUC undefined: both classes must be present".into(),
        ));
    }
    let mut pairs: Vec<(f64, u32)> = scores.iter().cloned().zip(y.iter().cloned()).collect();
    pairs.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < pairs.len() {
        let s = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == s {
            if pairs[i].1 == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: s,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC point list.
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) * 0.5)
        .sum()
}

/// Binary AUC straight from scores.
pub fn binary_auc(scores: &[f64], y: &[u32]) -> Result<f64> {
    Ok(auc(&roc_points(scores, y)?))
}

/// Macro-averaged one-vs-rest AUC from per-class probability rows. Classes
/// without both positives and negatives in `y` are skipped.
pub fn macro_ovr_auc(proba: &[Vec<f64>], y: &[u32], n_classes: usize) -> Result<f64> {
    let mut aucs = Vec::new();
    for class in 0..n_classes {
        let labels: Vec<u32> = y.iter().map(|&l| u32::from(l as usize == class)).collect();
        let pos = labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == labels.len() {
            continue;
        }
        let scores: Vec<f64> = proba.iter().map(|p| p[class]).collect();
        aucs.push(binary_auc(&scores, &labels)?);
    }
    if aucs.is_empty() {
        return Err(Error::Data(
            "AUC undefined: no class has both positives and negatives".into(),
        ));
    }
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_predictions_are_diagonal() {
        let y = vec![0u32, 1, 2, 1, 0];
        let cm = confusion(&y, &y, 3).unwrap();
        assert_eq!(cm.accuracy(), 1.0);
        let m = classification_metrics(&cm, Averaging::Macro);
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn swapped_binary_predictions_transpose_the_matrix() {
        let y_true = vec![0u32, 0, 1, 1, 1];
        let y_pred = vec![0u32, 1, 1, 0, 1];
        let a = confusion(&y_true, &y_pred, 2).unwrap();
        let b = confusion(&y_pred, &y_true, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(a.get(i, j), b.get(j, i));
            }
        }
    }

    #[test]
    fn percent_matrix_sums_to_100() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = rng.gen_range(1..300);
            let k = rng.gen_range(2..5);
            let y_true: Vec<u32> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let y_pred: Vec<u32> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let cm = confusion(&y_true, &y_pred, k as usize).unwrap();
            let sum: f64 = cm.to_percent().iter().sum();
            assert!((sum - 100.0).abs() < 1e-9, "{sum}");
        }
    }

    #[test]
    fn paper_style_binary_rates_reproduce_accuracy() {
        // TP 49.84%, TN 50.14%, FP 0%, FN 0.01% of 10000
        let mut y_true = Vec::new();
        let mut y_pred = Vec::new();
        // class 1 = attack-positive cell counts scaled to counts of 10000
        for _ in 0..4984 {
            y_true.push(1u32);
            y_pred.push(1u32);
        }
        for _ in 0..5014 {
            y_true.push(0);
            y_pred.push(0);
        }
        for _ in 0..1 {
            y_true.push(1);
            y_pred.push(0);
        }
        let cm = confusion(&y_true, &y_pred, 2).unwrap();
        let acc = cm.accuracy();
        assert!(acc > 0.9998 && acc < 0.9999999, "{acc}");
    }

    #[test]
    fn hand_computed_binary_metrics() {
        // [[50,0],[1,49]]: one true class-1 flipped to 0
        let y_true: Vec<u32> = std::iter::repeat(0u32)
            .take(50)
            .chain(std::iter::repeat(1u32).take(50))
            .collect();
        let mut y_pred = y_true.clone();
        y_pred[50] = 0;
        let cm = confusion(&y_true, &y_pred, 2).unwrap();
        let m = classification_metrics(&cm, Averaging::Macro);
        assert!((m.accuracy - 0.99).abs() < 1e-12);
        // precision: class0 50/51, class1 49/49 -> macro
        let want_p = (50.0 / 51.0 + 1.0) / 2.0;
        assert!((m.precision - want_p).abs() < 1e-12);
        // recall: class0 1.0, class1 49/50
        let want_r = (1.0 + 49.0 / 50.0) / 2.0;
        assert!((m.recall - want_r).abs() < 1e-12);
    }

    #[test]
    fn never_predicted_class_has_zero_precision_and_is_flagged() {
        let y_true = vec![0u32, 1, 2];
        let y_pred = vec![0u32, 1, 1];
        let cm = confusion(&y_true, &y_pred, 3).unwrap();
        let m = classification_metrics(&cm, Averaging::Macro);
        assert_eq!(m.never_predicted, vec![2]);
        assert!(m.precision < 1.0);
    }

    #[test]
    fn accuracy_equals_one_minus_binary_mae() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.gen_range(1..200);
            let y_true: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let y_pred: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let cm = confusion(&y_true, &y_pred, 2).unwrap();
            let (mae, mse, rmse) = regression_errors(&y_true, &y_pred).unwrap();
            // correct/n vs 1 - errors/n: equal up to one rounding of the division
            assert!((cm.accuracy() - (1.0 - mae)).abs() < 1e-12);
            assert_eq!(mae, mse); // 0/1 labels
            assert!((rmse * rmse - mse).abs() < 1e-12);
        }
    }

    #[test]
    fn regression_error_hand_cases() {
        let perfect = regression_errors(&[0, 1, 1], &[0, 1, 1]).unwrap();
        assert_eq!(perfect, (0.0, 0.0, 0.0));
        // one |delta|=2 error among 100
        let y_true: Vec<u32> = std::iter::repeat(2u32).take(100).collect();
        let mut y_pred = y_true.clone();
        y_pred[7] = 0;
        let (mae, mse, rmse) = regression_errors(&y_true, &y_pred).unwrap();
        assert!((mae - 0.02).abs() < 1e-12);
        assert!((mse - 0.04).abs() < 1e-12);
        assert!((rmse - 0.2).abs() < 1e-12);
        // binary error rate 0.0005 -> mae 0.05%, rmse 2.24% (x100 reporting)
        let n = 10_000usize;
        let y_true: Vec<u32> = vec![0; n];
        let mut y_pred = y_true.clone();
        for i in 0..5 {
            y_pred[i] = 1;
        }
        let (mae, mse, rmse) = regression_errors(&y_true, &y_pred).unwrap();
        assert!((mae * 100.0 - 0.05).abs() < 1e-9);
        assert!((mse * 100.0 - 0.05).abs() < 1e-9);
        assert!((rmse * 100.0 - 2.2360679).abs() < 1e-3);
    }

    #[test]
    fn auc_perfect_chance_and_reversal() {
        let y = vec![0u32, 0, 1, 1, 0, 1];
        let scores: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
        assert_eq!(binary_auc(&scores, &y).unwrap(), 1.0);

        let constant = vec![0.7; y.len()];
        assert_eq!(binary_auc(&constant, &y).unwrap(), 0.5);

        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        assert_eq!(binary_auc(&neg, &y).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.gen_range(4..100);
            let y: Vec<u32> = (0..n)
                .map(|i| if i < 2 { i as u32 } else { rng.gen_range(0..2) })
                .collect();
            let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let sneg: Vec<f64> = s.iter().map(|v| -v).collect();
            let total = binary_auc(&s, &y).unwrap() + binary_auc(&sneg, &y).unwrap();
            assert!((total - 1.0).abs() < 1e-12, "{total}");
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let n = rng.gen_range(4..100);
            let y: Vec<u32> = (0..n)
                .map(|i| if i < 2 { i as u32 } else { rng.gen_range(0..2) })
                .collect();
            let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let t: Vec<f64> = s.iter().map(|v| (v * 0.5).exp() + 7.0).collect();
            let a = binary_auc(&s, &y).unwrap();
            let b = binary_auc(&t, &y).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn roc_endpoints_and_single_class_error() {
        let y = vec![0u32, 1, 1, 0];
        let s = vec![0.1, 0.9, 0.4, 0.35];
        let pts = roc_points(&s, &y).unwrap();
        let first = pts.first().unwrap();
        let last = pts.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert!(roc_points(&[0.5, 0.6], &[1, 1]).is_err());
    }

    #[test]
    fn macro_ovr_auc_on_three_classes() {
        // perfectly ordered per-class probabilities
        let y = vec![0u32, 1, 2, 0, 1, 2];
        let proba: Vec<Vec<f64>> = y
            .iter()
            .map(|&l| {
                let mut p = vec![0.1, 0.1, 0.1];
                p[l as usize] = 0.8;
                p
            })
            .collect();
        let a = macro_ovr_auc(&proba, &y, 3).unwrap();
        assert_eq!(a, 1.0);
    }
}
