//! Property tests for the pipeline's cross-cutting laws: SMOTE balancing,
//! standardization, cleaning, metric identities, and fold partitioning.

use proptest::prelude::*;

use nids_core::dataset::{Cell, Column, ColumnKind, Dataset, RawTable};
use nids_core::eval::{
    binary_auc, confusion, kfold_split, regression_errors, stratified_kfold_split, FoldSpec,
};
use nids_core::ingest::{clean, encode_labels, standardize};
use nids_core::matrix::Matrix;
use nids_core::smote::{knn_index, smote, SmoteConfig};
use nids_core::LabelMap;

fn dataset_strategy() -> impl Strategy<Value = (Dataset, u64)> {
    // 2-4 classes with imbalanced counts, 1-4 features
    (
        prop::collection::vec(2usize..25, 2..5),
        1usize..5,
        any::<u64>(),
    )
        .prop_flat_map(|(counts, d, seed)| {
            let n: usize = counts.iter().sum();
            (
                Just(counts),
                prop::collection::vec(-100.0f64..100.0, n * d),
                Just(d),
                Just(seed),
            )
        })
        .prop_map(|(counts, cells, d, seed)| {
            let n: usize = counts.iter().sum();
            let mut y = Vec::with_capacity(n);
            for (c, &count) in counts.iter().enumerate() {
                y.extend(std::iter::repeat(c as u32).take(count));
            }
            let data = Dataset::new(
                Matrix::from_vec(n, d, cells).unwrap(),
                y,
                (0..d).map(|j| format!("f{j}")).collect(),
                (0..counts.len()).map(|c| format!("c{c}")).collect(),
                None,
            )
            .unwrap();
            (data, seed)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn smote_laws((data, seed) in dataset_strategy()) {
        let cfg = SmoteConfig { k_neighbors: 5, seed };
        let out = smote(&data, &cfg).unwrap();

        // exact equalization at the pre-call majority count
        let majority = *data.class_counts().iter().max().unwrap();
        prop_assert!(out.class_counts().iter().all(|&c| c == majority));

        // originals verbatim and first
        for i in 0..data.n_rows() {
            prop_assert_eq!(out.x.row(i), data.x.row(i));
            prop_assert_eq!(out.y[i], data.y[i]);
        }

        // every synthetic coordinate inside its class bounding box (the
        // segment endpoints both belong to the class)
        let mut lo = vec![vec![f64::INFINITY; data.n_features()]; data.n_classes()];
        let mut hi = vec![vec![f64::NEG_INFINITY; data.n_features()]; data.n_classes()];
        for i in 0..data.n_rows() {
            let c = data.y[i] as usize;
            for (j, &v) in data.x.row(i).iter().enumerate() {
                lo[c][j] = lo[c][j].min(v);
                hi[c][j] = hi[c][j].max(v);
            }
        }
        for i in data.n_rows()..out.n_rows() {
            let c = out.y[i] as usize;
            for (j, &v) in out.x.row(i).iter().enumerate() {
                prop_assert!(v >= lo[c][j] - 1e-9 && v <= hi[c][j] + 1e-9);
            }
        }

        // seed determinism
        let again = smote(&data, &cfg).unwrap();
        prop_assert_eq!(out, again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_neighbors_exclude_self_and_have_k_entries(
        rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2), 3..30),
        k in 1usize..4,
    ) {
        prop_assume!(k < rows.len());
        let pts = Matrix::from_rows(&rows).unwrap();
        let nn = knn_index(&pts, k).unwrap();
        for (i, list) in nn.iter().enumerate() {
            prop_assert_eq!(list.len(), k);
            prop_assert!(!list.contains(&i));
        }
    }

    #[test]
    fn standardize_centers_non_constant_columns(
        rows in prop::collection::vec(prop::collection::vec(-1000.0f64..1000.0, 3), 2..40),
    ) {
        let x = Matrix::from_rows(&rows).unwrap();
        let (scaled, stats) = standardize(&x);
        let n = scaled.n_rows() as f64;
        for j in 0..scaled.n_cols() {
            if stats.std[j] == 0.0 {
                for i in 0..scaled.n_rows() {
                    prop_assert_eq!(scaled.get(i, j), 0.0);
                }
                continue;
            }
            let mean: f64 = (0..scaled.n_rows()).map(|i| scaled.get(i, j)).sum::<f64>() / n;
            let var: f64 = (0..scaled.n_rows())
                .map(|i| (scaled.get(i, j) - mean).powi(2))
                .sum::<f64>() / n;
            prop_assert!(mean.abs() <= 1e-9, "mean {mean}");
            prop_assert!((var.sqrt() - 1.0).abs() <= 1e-9, "std {}", var.sqrt());
        }
    }

    #[test]
    fn clean_is_idempotent(
        cells in prop::collection::vec(
            prop::collection::vec(prop_oneof![
                Just(f64::NAN),
                -5.0f64..5.0,
                Just(1.0f64),
            ], 2),
            1..40,
        ),
    ) {
        let columns = vec![
            Column { name: "a".into(), kind: ColumnKind::Numeric },
            Column { name: "b".into(), kind: ColumnKind::Numeric },
        ];
        let rows: Vec<Vec<Cell>> = cells
            .iter()
            .map(|r| r.iter().map(|&v| Cell::Num(v)).collect())
            .collect();
        let table = RawTable::new(columns, rows, "mem".into()).unwrap();
        match clean(table) {
            Err(_) => {} // everything removed
            Ok((once, _)) => {
                let (twice, stats) = clean(once.clone()).unwrap();
                prop_assert_eq!(&twice.rows, &once.rows);
                prop_assert_eq!(stats.dropped_non_finite + stats.dropped_duplicate, 0);
            }
        }
    }

    #[test]
    fn label_encode_decode_is_identity(names in prop::collection::vec("[a-z]{1,6}", 1..10)) {
        let map = LabelMap::lexicographic(&names);
        let codes = encode_labels(&names, &map).unwrap();
        for (name, code) in names.iter().zip(codes) {
            prop_assert_eq!(map.name(code).unwrap(), name.as_str());
        }
    }

    #[test]
    fn percent_confusion_sums_to_100(
        labels in prop::collection::vec((0u32..4, 0u32..4), 1..200),
    ) {
        let y_true: Vec<u32> = labels.iter().map(|&(a, _)| a).collect();
        let y_pred: Vec<u32> = labels.iter().map(|&(_, p)| p).collect();
        let cm = confusion(&y_true, &y_pred, 4).unwrap();
        let sum: f64 = cm.to_percent().iter().sum();
        prop_assert!((sum - 100.0).abs() < 1e-9);
    }

    #[test]
    fn rmse_squared_is_mse(
        labels in prop::collection::vec((0u32..5, 0u32..5), 1..200),
    ) {
        let y_true: Vec<u32> = labels.iter().map(|&(a, _)| a).collect();
        let y_pred: Vec<u32> = labels.iter().map(|&(_, p)| p).collect();
        let (_, mse, rmse) = regression_errors(&y_true, &y_pred).unwrap();
        prop_assert!((rmse * rmse - mse).abs() < 1e-12);
    }

    #[test]
    fn auc_reversal_symmetry(
        scored in prop::collection::vec((-100.0f64..100.0, 0u32..2), 4..150),
    ) {
        let scores: Vec<f64> = scored.iter().map(|&(s, _)| s).collect();
        let y: Vec<u32> = scored.iter().map(|&(_, l)| l).collect();
        prop_assume!(y.iter().any(|&l| l == 0) && y.iter().any(|&l| l == 1));
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let total = binary_auc(&scores, &y).unwrap() + binary_auc(&neg, &y).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn folds_partition_with_even_sizes(
        n in 10usize..400,
        k in prop::sample::select(vec![2usize, 5, 10]),
        seed in any::<u64>(),
        stratified in any::<bool>(),
    ) {
        let y: Vec<u32> = (0..n).map(|i| (i % 3) as u32).collect();
        let spec = FoldSpec { n_folds: k, seed, stratified, ..FoldSpec::default() };
        let folds = if stratified {
            stratified_kfold_split(&y, &spec).unwrap()
        } else {
            kfold_split(n, &spec).unwrap()
        };
        let mut seen = vec![false; n];
        for (train, test) in &folds {
            prop_assert_eq!(train.len() + test.len(), n);
            for &i in test {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
        let sizes: Vec<usize> = folds.iter().map(|(_, t)| t.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}
