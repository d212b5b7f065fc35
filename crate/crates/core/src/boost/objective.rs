//! First- and second-order gradient statistics for the boosting losses, plus
//! the closed-form leaf weight and split gain of the second-order objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss the booster optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Sigmoid link, log loss, labels in {0,1}. One tree per round.
    BinaryLogistic,
    /// Softmax link over `n_classes`, labels in [0, n_classes). One tree per
    /// class per round; diagonal hessian approximation.
    Softmax { n_classes: usize },
}

impl Objective {
    /// Number of margin scores (and trees per round) this objective needs.
    pub fn n_groups(&self) -> usize {
        match self {
            Objective::BinaryLogistic => 1,
            Objective::Softmax { n_classes } => *n_classes,
        }
    }
}

#[inline]
pub fn sigmoid(m: f64) -> f64 {
    1.0 / (1.0 + (-m).exp())
}

/// Softmax over a slice, shifted by the max for stability.
pub fn softmax(margins: &[f64]) -> Vec<f64> {
    let max = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = margins.iter().map(|m| (m - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Log loss of one sample given its margin scores. Used by training-progress
/// reporting and by the finite-difference tests as the function whose
/// derivatives `grad_hess` must match.
pub fn log_loss(objective: Objective, margins: &[f64], y: u32) -> f64 {
    match objective {
        Objective::BinaryLogistic => {
            let m = margins[0];
            // ln(1 + e^m) - y*m, computed stably for large |m|
            let softplus = if m > 0.0 {
                m + (-m).exp().ln_1p()
            } else {
                m.exp().ln_1p()
            };
            softplus - f64::from(y) * m
        }
        Objective::Softmax { .. } => {
            let max = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max
                + margins
                    .iter()
                    .map(|m| (m - max).exp())
                    .sum::<f64>()
                    .ln();
            lse - margins[y as usize]
        }
    }
}

/// First and second derivatives of the log loss with respect to each margin.
///
/// `margins` is row-major `n_rows x n_groups`; the returned `g` and `h` have
/// the same layout. Binary logistic: g = p - y, h = p(1-p). Softmax per class
/// k: g_k = p_k - 1{y=k}, h_k = p_k(1-p_k).
pub fn grad_hess(objective: Objective, margins: &[f64], y: &[u32]) -> (Vec<f64>, Vec<f64>) {
    let groups = objective.n_groups();
    debug_assert_eq!(margins.len(), y.len() * groups);
    let mut g = vec![0.0; margins.len()];
    let mut h = vec![0.0; margins.len()];
    match objective {
        Objective::BinaryLogistic => {
            for (i, (&m, &yi)) in margins.iter().zip(y).enumerate() {
                let p = sigmoid(m);
                g[i] = p - f64::from(yi);
                h[i] = p * (1.0 - p);
            }
        }
        Objective::Softmax { n_classes } => {
            for (i, &yi) in y.iter().enumerate() {
                let row = &margins[i * n_classes..(i + 1) * n_classes];
                let p = softmax(row);
                for k in 0..n_classes {
                    let target = if yi as usize == k { 1.0 } else { 0.0 };
                    g[i * n_classes + k] = p[k] - target;
                    h[i * n_classes + k] = p[k] * (1.0 - p[k]);
                }
            }
        }
    }
    (g, h)
}

/// Closed-form optimal leaf weight -G/(H+lambda) of the second-order leaf
/// objective G*w + (H+lambda)*w^2/2.
pub fn leaf_weight(g_sum: f64, h_sum: f64, lambda: f64) -> Result<f64> {
    if h_sum + lambda <= 0.0 {
        return Err(Error::Data(format!(
            "degenerate leaf: hessian sum {h_sum} + lambda {lambda} is not positive"
        )));
    }
    Ok(-g_sum / (h_sum + lambda))
}

/// Gain of splitting a node with totals (GL+GR, HL+HR) into (GL,HL) | (GR,HR):
/// half the reduction of the second-order objective, minus the per-leaf
/// penalty gamma. Symmetric in the left/right swap.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}
