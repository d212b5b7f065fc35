//! K-fold index splitting, plain or stratified, deterministic under a seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where SMOTE and scaling run relative to the fold split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvScope {
    /// Balance and scale once, before splitting (the reproduction default;
    /// synthetic neighbors leak across folds).
    GlobalSmote,
    /// Per fold: scaling stats and SMOTE come from the training fold only.
    TrainOnlySmote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub n_folds: usize,
    pub seed: u64,
    pub stratified: bool,
    pub scope: CvScope,
}

impl Default for FoldSpec {
    fn default() -> Self {
        FoldSpec {
            n_folds: 10,
            seed: 0,
            stratified: true,
            scope: CvScope::GlobalSmote,
        }
    }
}

/// (train indices, test indices), both ascending.
pub type Fold = (Vec<usize>, Vec<usize>);

fn check(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Argument("n_folds must be at least 2".into()));
    }
    if n < k {
        return Err(Error::Argument(format!(
            "cannot split {n} rows into {k} folds"
        )));
    }
    Ok(())
}

fn folds_from_tests(n: usize, mut tests: Vec<Vec<usize>>) -> Vec<Fold> {
    let mut fold_of = vec![0usize; n];
    for (f, t) in tests.iter().enumerate() {
        for &i in t {
            fold_of[i] = f;
        }
    }
    tests
        .iter_mut()
        .for_each(|t| t.sort_unstable());
    tests
        .into_iter()
        .enumerate()
        .map(|(f, test)| {
            let train = (0..n).filter(|&i| fold_of[i] != f).collect();
            (train, test)
        })
        .collect()
}

/// Plain split: shuffle, then deal consecutive chunks; the first `n % k`
/// folds take one extra row.
pub fn kfold_split(n: usize, spec: &FoldSpec) -> Result<Vec<Fold>> {
    let k = spec.n_folds;
    check(n, k)?;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    for i in (1..n).rev() {
        idx.swap(i, rng.gen_range(0..=i));
    }
    let base = n / k;
    let extra = n % k;
    let mut tests = Vec::with_capacity(k);
    let mut pos = 0;
    for f in 0..k {
        let take = base + usize::from(f < extra);
        tests.push(idx[pos..pos + take].to_vec());
        pos += take;
    }
    Ok(folds_from_tests(n, tests))
}

/// Stratified split: each class is dealt evenly across folds (per-class
/// counts within +/-1) and each class's leftover rows go to the currently
/// least-loaded folds, which keeps overall fold sizes within +/-1 too.
pub fn stratified_kfold_split(y: &[u32], spec: &FoldSpec) -> Result<Vec<Fold>> {
    let n = y.len();
    let k = spec.n_folds;
    check(n, k)?;
    let n_classes = y.iter().map(|&l| l as usize + 1).max().unwrap_or(1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in y.iter().enumerate() {
        by_class[l as usize].push(i);
    }

    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut loads = vec![0usize; k];
    for idx in by_class.iter_mut() {
        let m = idx.len();
        if m == 0 {
            continue;
        }
        for i in (1..m).rev() {
            idx.swap(i, rng.gen_range(0..=i));
        }
        let base = m / k;
        let extra = m % k;
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&f| (loads[f], f));
        let mut take = vec![base; k];
        for &f in order.iter().take(extra) {
            take[f] += 1;
        }
        let mut pos = 0;
        for f in 0..k {
            tests[f].extend_from_slice(&idx[pos..pos + take[f]]);
            loads[f] += take[f];
            pos += take[f];
        }
    }
    Ok(folds_from_tests(n, tests))
}

/// Split per the spec: stratified when requested and labels are available.
pub fn split(n: usize, y: &[u32], spec: &FoldSpec) -> Result<Vec<Fold>> {
    if spec.stratified {
        stratified_kfold_split(y, spec)
    } else {
        kfold_split(n, spec)
    }
}

/// Per-class proportional sample of about `cap` indices (each class keeps at
/// least one row), deterministic under the seed, ascending index order.
pub fn stratified_sample(y: &[u32], n_classes: usize, cap: usize, seed: u64) -> Vec<usize> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in y.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    let n = y.len();
    let mut picked = Vec::with_capacity(cap);
    for (c, idx) in by_class.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let want = ((idx.len() * cap + n - 1) / n).clamp(1, idx.len());
        let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(c as u64));
        let mut pool = idx.clone();
        for i in 0..want {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        picked.extend_from_slice(&pool[..want]);
    }
    picked.sort_unstable();
    picked
}
