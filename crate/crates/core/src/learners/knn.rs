//! K-nearest-neighbor classifier over the stored (standardized) training
//! set. Brute-force Euclidean search; queries parallelize across rows.

use serde::{Deserialize, Serialize};

use super::dt::argmax_counts;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::stratified_sample;
use crate::matrix::{sq_dist, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KNNConfig {
    pub k: usize,
    /// Optional cap on the stored reference set: a seeded stratified sample
    /// is kept when the training set is larger. A desk-scale concession for
    /// very large post-balancing datasets.
    pub sample_cap: Option<usize>,
    pub seed: u64,
}

impl Default for KNNConfig {
    fn default() -> Self {
        KNNConfig {
            k: 5,
            sample_cap: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub x: Matrix,
    pub y: Vec<u32>,
    pub k: usize,
    pub n_classes: usize,
}

/// Store the training set (or a stratified sample of it when capped).
pub fn train_knn(data: &Dataset, cfg: &KNNConfig) -> Result<KnnModel> {
    if cfg.k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let (x, y) = match cfg.sample_cap {
        Some(cap) if data.n_rows() > cap => {
            let idx = stratified_sample(&data.y, data.n_classes(), cap, cfg.seed);
            log::info!(
                "knn: capping reference set {} -> {} rows (stratified)",
                data.n_rows(),
                idx.len()
            );
            (
                data.x.take_rows(&idx),
                idx.iter().map(|&i| data.y[i]).collect(),
            )
        }
        _ => (data.x.clone(), data.y.clone()),
    };
    if cfg.k > x.n_rows() {
        return Err(Error::Argument(format!(
            "k = {} exceeds the stored training rows ({})",
            cfg.k,
            x.n_rows()
        )));
    }
    Ok(KnnModel {
        x,
        y,
        k: cfg.k,
        n_classes: data.n_classes(),
    })
}

impl KnnModel {
    fn neighbor_votes(&self, row: &[f64]) -> Result<Vec<u32>> {
        if row.len() != self.x.n_cols() {
            return Err(Error::Shape {
                expected: self.x.n_cols(),
                got: row.len(),
            });
        }
        // k smallest (distance, index) pairs; ties prefer the lower index
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for j in 0..self.x.n_rows() {
            let d = sq_dist(row, self.x.row(j));
            if best.len() == self.k && (d, j) >= (best[self.k - 1].0, best[self.k - 1].1) {
                continue;
            }
            let pos = best.partition_point(|&(bd, bj)| (bd, bj) < (d, j));
            best.insert(pos, (d, j));
            best.truncate(self.k);
        }
        let mut votes = vec![0u32; self.n_classes];
        for (_, j) in best {
            votes[self.y[j] as usize] += 1;
        }
        Ok(votes)
    }

    /// Majority label of the k nearest training rows; vote ties resolve to
    /// the lowest class id.
    pub fn predict(&self, row: &[f64]) -> Result<u32> {
        Ok(argmax_counts(&self.neighbor_votes(row)?))
    }

    /// Neighbor vote fractions.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        let votes = self.neighbor_votes(row)?;
        let total: u32 = votes.iter().sum();
        Ok(votes
            .iter()
            .map(|&v| f64::from(v) / f64::from(total))
            .collect())
    }
}
