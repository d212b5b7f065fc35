//! Threshold-driven feature-subset search: walk top-k prefixes of the gain
//! ranking (k decreasing by a fixed step) and pick the smallest prefix on
//! which every learner clears the accuracy threshold.

use serde::{Deserialize, Serialize};

use crate::boost::FeatureRanking;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::{run_cv, FoldSpec};
use crate::learners::LearnerSpec;
use crate::smote::SmoteConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    /// A prefix passes when every learner's mean CV accuracy is >= this.
    pub threshold: f64,
    /// Decrement applied to k between candidates.
    pub step: usize,
    /// Evaluate from the smallest k upward and stop at the first pass; the
    /// chosen set is identical, only the per-k table is shorter.
    pub early_exit: bool,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            threshold: 0.9995,
            step: 2,
            early_exit: false,
        }
    }
}

/// One evaluated prefix size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixCandidate {
    pub k: usize,
    /// (learner name, mean CV accuracy), in the caller's learner order.
    pub accuracies: Vec<(String, f64)>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Evaluated candidates ordered by k descending.
    pub candidates: Vec<PrefixCandidate>,
    /// Chosen feature indices: the smallest passing top-k prefix, or the
    /// full ranking when nothing passed.
    pub chosen: Vec<usize>,
    pub chosen_k: usize,
    pub threshold: f64,
    pub step: usize,
    /// Set when no prefix cleared the threshold.
    pub no_pass: bool,
}

/// Mean cross-validated accuracy of every learner on the top-k ranked
/// features.
pub fn evaluate_prefix(
    data: &Dataset,
    ranking: &FeatureRanking,
    k: usize,
    learners: &[(String, LearnerSpec)],
    fold_spec: &FoldSpec,
    smote_cfg: Option<&SmoteConfig>,
) -> Result<Vec<(String, f64)>> {
    if k == 0 || k > ranking.order.len() {
        return Err(Error::Argument(format!(
            "prefix size {k} out of range 1..={}",
            ranking.order.len()
        )));
    }
    let features = ranking.top(k);
    learners
        .iter()
        .map(|(name, spec)| {
            let outcome = run_cv(data, spec, features, fold_spec, smote_cfg)?;
            Ok((name.clone(), outcome.mean.accuracy))
        })
        .collect()
}

/// The prefix sweep: k = N, N-step, ... while k > 0 (or the same sequence
/// ascending under `early_exit`).
pub fn search_subsets(
    data: &Dataset,
    ranking: &FeatureRanking,
    learners: &[(String, LearnerSpec)],
    cfg: &SelectConfig,
    fold_spec: &FoldSpec,
    smote_cfg: Option<&SmoteConfig>,
) -> Result<SelectionResult> {
    if !(cfg.threshold > 0.0 && cfg.threshold <= 1.0) {
        return Err(Error::Config(format!(
            "threshold must be in (0,1], got {}",
            cfg.threshold
        )));
    }
    if cfg.step == 0 {
        return Err(Error::Config("step must be at least 1".into()));
    }
    if learners.is_empty() {
        return Err(Error::Argument("learner list must be non-empty".into()));
    }

    let n = ranking.order.len();
    let mut ks: Vec<usize> = (0..)
        .map(|i| n as i64 - (i as i64) * cfg.step as i64)
        .take_while(|&k| k > 0)
        .map(|k| k as usize)
        .collect();
    if cfg.early_exit {
        ks.reverse();
    }

    let mut candidates = Vec::new();
    for &k in &ks {
        log::info!("evaluating top-{k} prefix");
        let accuracies = evaluate_prefix(data, ranking, k, learners, fold_spec, smote_cfg)?;
        let passed = accuracies.iter().all(|&(_, a)| a >= cfg.threshold);
        candidates.push(PrefixCandidate {
            k,
            accuracies,
            passed,
        });
        if cfg.early_exit && passed {
            break;
        }
    }
    candidates.sort_by(|a, b| b.k.cmp(&a.k));

    let chosen_k = candidates
        .iter()
        .filter(|c| c.passed)
        .map(|c| c.k)
        .min();
    let (chosen_k, no_pass) = match chosen_k {
        Some(k) => (k, false),
        None => (n, true),
    };
    Ok(SelectionResult {
        candidates,
        chosen: ranking.top(chosen_k).to_vec(),
        chosen_k,
        threshold: cfg.threshold,
        step: cfg.step,
        no_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::CvScope;
    use crate::learners::DTConfig;
    use crate::matrix::Matrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Feature 0 copies the label; the rest are noise. The ranking is the
    /// identity permutation with synthetic decreasing gains.
    fn label_copy_fixture(n: usize, d: usize, seed: u64) -> (Dataset, FeatureRanking) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let c = (i % 2) as u32;
            let mut row = vec![f64::from(c)];
            row.extend((1..d).map(|_| rng.gen_range(-1.0..1.0)));
            rows.push(row);
            y.push(c);
        }
        let data = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            y,
            (0..d).map(|i| format!("f{i}")).collect(),
            vec!["c0".into(), "c1".into()],
            None,
        )
        .unwrap();
        let ranking = FeatureRanking::new(
            (0..d).collect(),
            (0..d).map(|i| (d - i) as f64).collect(),
            "test".into(),
        )
        .unwrap();
        (data, ranking)
    }

    fn dt() -> Vec<(String, LearnerSpec)> {
        vec![("dt".to_string(), LearnerSpec::Dt(DTConfig::default()))]
    }

    fn folds3() -> FoldSpec {
        FoldSpec {
            n_folds: 3,
            seed: 1,
            stratified: true,
            scope: CvScope::GlobalSmote,
        }
    }

    #[test]
    fn full_prefix_equals_all_features_baseline() {
        let (data, ranking) = label_copy_fixture(60, 4, 1);
        let acc = evaluate_prefix(&data, &ranking, 4, &dt(), &folds3(), None).unwrap();
        let baseline = run_cv(
            &data,
            &dt()[0].1,
            &[0, 1, 2, 3],
            &folds3(),
            None,
        )
        .unwrap();
        assert_eq!(acc[0].1, baseline.mean.accuracy);
    }

    #[test]
    fn label_copy_prefix_of_one_is_perfect() {
        let (data, ranking) = label_copy_fixture(80, 5, 2);
        let acc = evaluate_prefix(&data, &ranking, 1, &dt(), &folds3(), None).unwrap();
        assert_eq!(acc[0].1, 1.0);
    }

    #[test]
    fn pure_noise_prefix_scores_near_chance() {
        // drop the informative feature from the ranking: k=1 evaluates noise
        let (data, _) = label_copy_fixture(400, 3, 3);
        let noise_first = FeatureRanking::new(vec![1, 2, 0], vec![3.0, 2.0, 1.0], "t".into())
            .unwrap();
        let acc = evaluate_prefix(&data, &noise_first, 1, &dt(), &folds3(), None).unwrap();
        assert!((acc[0].1 - 0.5).abs() < 0.05, "accuracy {}", acc[0].1);
    }

    #[test]
    fn prefix_size_out_of_range_is_an_error() {
        let (data, ranking) = label_copy_fixture(30, 3, 4);
        assert!(evaluate_prefix(&data, &ranking, 0, &dt(), &folds3(), None).is_err());
        assert!(evaluate_prefix(&data, &ranking, 4, &dt(), &folds3(), None).is_err());
    }

    #[test]
    fn threshold_zero_epsilon_chooses_smallest_evaluated_k() {
        let (data, ranking) = label_copy_fixture(40, 5, 5);
        let cfg = SelectConfig {
            threshold: 1e-9,
            ..SelectConfig::default()
        };
        let res = search_subsets(&data, &ranking, &dt(), &cfg, &folds3(), None).unwrap();
        // N=5 odd: ks are 5,3,1
        assert_eq!(res.chosen_k, 1);
        assert!(!res.no_pass);
        assert_eq!(res.candidates.len(), 3);
        let ks: Vec<usize> = res.candidates.iter().map(|c| c.k).collect();
        assert_eq!(ks, vec![5, 3, 1]);
    }

    #[test]
    fn impossible_threshold_flags_no_pass_with_full_set() {
        // every feature is noise, so no prefix can reach 100% held-out accuracy
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<u32> = (0..80).map(|i| (i % 2) as u32).collect();
        let data = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            y,
            (0..4).map(|i| format!("f{i}")).collect(),
            vec!["c0".into(), "c1".into()],
            None,
        )
        .unwrap();
        let noise = FeatureRanking::new(vec![1, 2, 3, 0], vec![4.0, 3.0, 2.0, 1.0], "t".into())
            .unwrap();
        let learners = dt();
        let cfg = SelectConfig {
            threshold: 1.0,
            ..SelectConfig::default()
        };
        let res = search_subsets(&data, &noise, &learners, &cfg, &folds3(), None).unwrap();
        assert!(res.no_pass);
        assert_eq!(res.chosen_k, 4);
        assert_eq!(res.chosen, noise.order);
    }

    #[test]
    fn evaluated_ks_match_the_arithmetic_sequence() {
        let (data, ranking) = label_copy_fixture(40, 6, 7);
        let cfg = SelectConfig {
            threshold: 1e-9,
            ..SelectConfig::default()
        };
        let res = search_subsets(&data, &ranking, &dt(), &cfg, &folds3(), None).unwrap();
        let ks: Vec<usize> = res.candidates.iter().map(|c| c.k).collect();
        // N=6 even: 6,4,2 -> ceil(6/2) = 3 candidates
        assert_eq!(ks, vec![6, 4, 2]);
        assert_eq!(res.chosen_k, 2);
    }

    #[test]
    fn early_exit_chooses_the_same_prefix() {
        let (data, ranking) = label_copy_fixture(100, 7, 8);
        let full = SelectConfig {
            threshold: 0.99,
            ..SelectConfig::default()
        };
        let lazy = SelectConfig {
            early_exit: true,
            ..full.clone()
        };
        let a = search_subsets(&data, &ranking, &dt(), &full, &folds3(), None).unwrap();
        let b = search_subsets(&data, &ranking, &dt(), &lazy, &folds3(), None).unwrap();
        assert_eq!(a.chosen_k, b.chosen_k);
        assert_eq!(a.chosen, b.chosen);
        assert!(b.candidates.len() <= a.candidates.len());
    }

    #[test]
    fn passing_candidate_invariant_holds() {
        let (data, ranking) = label_copy_fixture(80, 5, 9);
        let cfg = SelectConfig {
            threshold: 0.95,
            ..SelectConfig::default()
        };
        let res = search_subsets(&data, &ranking, &dt(), &cfg, &folds3(), None).unwrap();
        if !res.no_pass {
            let chosen = res
                .candidates
                .iter()
                .find(|c| c.k == res.chosen_k)
                .unwrap();
            assert!(chosen.accuracies.iter().all(|&(_, a)| a >= cfg.threshold));
            for c in &res.candidates {
                if c.k < res.chosen_k {
                    assert!(!c.passed);
                }
            }
        }
    }

    #[test]
    fn bad_arguments_are_rejected() {
        let (data, ranking) = label_copy_fixture(30, 3, 10);
        let bad_threshold = SelectConfig {
            threshold: 0.0,
            ..SelectConfig::default()
        };
        assert!(search_subsets(&data, &ranking, &dt(), &bad_threshold, &folds3(), None).is_err());
        let bad_step = SelectConfig {
            step: 0,
            ..SelectConfig::default()
        };
        assert!(search_subsets(&data, &ranking, &dt(), &bad_step, &folds3(), None).is_err());
        assert!(search_subsets(&data, &ranking, &[], &SelectConfig::default(), &folds3(), None)
            .is_err());
    }
}
