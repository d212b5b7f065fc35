//! SMOTE synthetic minority oversampling: every minority class is raised to
//! the majority count by interpolating between a class sample and one of its
//! k nearest in-class neighbors.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};

/// SMOTE settings. The target policy is fixed: oversample every minority
/// class to the pre-call majority count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    /// Neighbors considered per sample; clamped to class_size - 1 (with a
    /// warning) for very small classes.
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            seed: 0,
        }
    }
}

/// Exact brute-force k-nearest-neighbor lists by Euclidean distance.
/// Each point's list holds the indices of its k nearest *other* points,
/// nearest first; distance ties resolve to the lower index.
pub fn knn_index(points: &Matrix, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = points.n_rows();
    if k >= n {
        return Err(Error::Argument(format!(
            "k_neighbors = {k} must be below the number of points ({n})"
        )));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            // small k: keep the k best (dist, idx) pairs in a sorted buffer
            let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = sq_dist(points.row(i), points.row(j));
                if best.len() == k && (d, j) >= (best[k - 1].0, best[k - 1].1) {
                    continue;
                }
                let pos = best.partition_point(|&(bd, bj)| (bd, bj) < (d, j));
                best.insert(pos, (d, j));
                best.truncate(k);
            }
            best.into_iter().map(|(_, j)| j).collect()
        })
        .collect())
}

/// Equalize all class counts to the pre-call majority count. Original rows
/// are preserved verbatim and first; each synthetic row is `a + u*(b - a)`
/// for a minority sample `a`, one of its k nearest minority neighbors `b`,
/// and `u` uniform in [0,1). Deterministic under a fixed seed: each class
/// draws from an independent stream keyed by `seed + class_id`.
pub fn smote(data: &Dataset, cfg: &SmoteConfig) -> Result<Dataset> {
    if cfg.k_neighbors == 0 {
        return Err(Error::Config("k_neighbors must be at least 1".into()));
    }
    let counts = data.class_counts();
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Data(
            "SMOTE requires at least 2 classes with samples".into(),
        ));
    }
    let majority = *counts.iter().max().expect("non-empty counts");
    if counts.iter().all(|&c| c == majority) {
        return Ok(data.clone());
    }

    let mut x = data.x.clone();
    let mut y = data.y.clone();
    for (class, &count) in counts.iter().enumerate() {
        if count == majority {
            continue;
        }
        let name = &data.class_names[class];
        if count < 2 {
            return Err(Error::Balance {
                class: name.clone(),
                reason: format!("{count} sample(s); oversampling needs at least 2"),
            });
        }
        let k = if cfg.k_neighbors >= count {
            log::warn!(
                "class '{name}' has {count} samples; clamping k_neighbors {} -> {}",
                cfg.k_neighbors,
                count - 1
            );
            count - 1
        } else {
            cfg.k_neighbors
        };

        let idx: Vec<usize> = (0..data.n_rows())
            .filter(|&i| data.y[i] as usize == class)
            .collect();
        let minority = data.x.take_rows(&idx);
        let neighbors = knn_index(&minority, k)?;
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(class as u64));
        for _ in 0..majority - count {
            let a = rng.gen_range(0..count);
            let b = neighbors[a][rng.gen_range(0..k)];
            let u: f64 = rng.gen(); // [0,1)
            let row: Vec<f64> = minority
                .row(a)
                .iter()
                .zip(minority.row(b))
                .map(|(&av, &bv)| av + u * (bv - av))
                .collect();
            x.push_row(&row);
            y.push(class as u32);
        }
    }

    Dataset::new(
        x,
        y,
        data.feature_names.clone(),
        data.class_names.clone(),
        data.stats.clone(),
    )
}
