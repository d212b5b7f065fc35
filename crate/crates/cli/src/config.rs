//! Sectioned pipeline configuration (TOML). Every CLI flag overrides its
//! config key; the effective config is snapshotted into the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nids_core::boost::{GBConfig, Objective};
use nids_core::eval::{CvScope, FoldSpec};
use nids_core::ingest::{DatasetKind, Task};
use nids_core::learners::{DTConfig, KNNConfig, LearnerSpec, MLPConfig, RFConfig};
use nids_core::select::SelectConfig;
use nids_core::smote::SmoteConfig;
use nids_core::{Error, Result};

// seed offsets so each randomized component draws from its own stream
const SEED_SMOTE: u64 = 1;
const SEED_RF: u64 = 2;
const SEED_MLP: u64 = 3;
const SEED_ANN: u64 = 4;
const SEED_KNN: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputSection,
    pub run: RunSection,
    pub smote: SmoteSection,
    pub boost: BoostSection,
    pub select: SelectSection,
    pub eval: EvalSection,
    pub learners: LearnersSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: InputSection::default(),
            run: RunSection::default(),
            smote: SmoteSection::default(),
            boost: BoostSection::default(),
            select: SelectSection::default(),
            eval: EvalSection::default(),
            learners: LearnersSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    pub kind: String,
    pub path: PathBuf,
    pub task: String,
}

impl Default for InputSection {
    fn default() -> Self {
        InputSection {
            kind: "generic".into(),
            path: PathBuf::new(),
            task: "binary".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub out_dir: PathBuf,
    pub seed: u64,
    /// 0 = rayon default.
    pub threads: usize,
    /// 0 = all rows; otherwise a stratified row cap applied at ingest.
    pub sample_rows: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            out_dir: PathBuf::from("out"),
            seed: 42,
            threads: 0,
            sample_rows: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSection {
    pub k_neighbors: usize,
}

impl Default for SmoteSection {
    fn default() -> Self {
        SmoteSection { k_neighbors: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostSection {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub eta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    /// 0 = exact greedy splits; otherwise quantile bins per feature.
    pub quantile_bins: usize,
}

impl Default for BoostSection {
    fn default() -> Self {
        let d = GBConfig::default();
        BoostSection {
            n_rounds: d.n_rounds,
            max_depth: d.max_depth,
            eta: d.eta,
            lambda: d.lambda,
            gamma: d.gamma,
            min_child_weight: d.min_child_weight,
            quantile_bins: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectSection {
    pub threshold: f64,
    pub step: usize,
    pub early_exit: bool,
    /// CV folds used inside the prefix sweep; 0 = same as eval.folds.
    pub folds: usize,
    /// >0 pins the chosen prefix size and skips the sweep.
    pub top_k: usize,
    pub learners: Vec<String>,
}

impl Default for SelectSection {
    fn default() -> Self {
        SelectSection {
            threshold: 0.9995,
            step: 2,
            early_exit: false,
            folds: 0,
            top_k: 0,
            learners: vec!["rf".into(), "dt".into(), "knn".into(), "mlp".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub folds: usize,
    pub stratified: bool,
    pub scope: String,
    pub learners: Vec<String>,
    /// Non-empty enables the MLP epoch-scalability check.
    pub scalability_epochs: Vec<usize>,
    /// Accuracy delta (fraction, not percent) considered "nearly unchanged".
    pub scalability_tolerance: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            folds: 10,
            stratified: true,
            scope: "global".into(),
            learners: vec![
                "rf".into(),
                "dt".into(),
                "knn".into(),
                "mlp".into(),
                "ann".into(),
            ],
            scalability_epochs: vec![],
            scalability_tolerance: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LearnersSection {
    pub rf: RfSection,
    pub dt: DtSection,
    pub knn: KnnSection,
    pub mlp: MlpSection,
    /// Same engine as mlp; defaults to a single hidden layer of 64.
    pub ann: AnnSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfSection {
    pub n_trees: usize,
    /// 0 = ceil(sqrt(d)).
    pub features_per_split: usize,
    pub bootstrap: bool,
    /// 0 = unbounded.
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for RfSection {
    fn default() -> Self {
        RfSection {
            n_trees: 100,
            features_per_split: 0,
            bootstrap: true,
            max_depth: 0,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtSection {
    /// 0 = unbounded.
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for DtSection {
    fn default() -> Self {
        DtSection {
            max_depth: 0,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnSection {
    pub k: usize,
    /// 0 = keep the whole training set as the reference store.
    pub sample_cap: usize,
}

impl Default for KnnSection {
    fn default() -> Self {
        KnnSection {
            k: 5,
            sample_cap: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSection {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for MlpSection {
    fn default() -> Self {
        let d = MLPConfig::default();
        MlpSection {
            hidden: d.hidden_layers,
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            momentum: d.momentum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnSection {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for AnnSection {
    fn default() -> Self {
        let d = MLPConfig::ann();
        AnnSection {
            hidden: d.hidden_layers,
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            momentum: d.momentum,
        }
    }
}

impl AnnSection {
    fn as_mlp(&self) -> MlpSection {
        MlpSection {
            hidden: self.hidden.clone(),
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Reject every invariant violation with a field-path message before any
    /// work starts.
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: &str| -> Result<()> {
            Err(Error::Config(format!("{field}: {msg}")))
        };
        self.kind()?;
        self.task()?;
        self.scope()?;
        if self.task()? == Task::Multilabel && self.kind()? != DatasetKind::Kdd {
            return fail("input.task", "multilabel is only valid for the kdd schema");
        }
        if !(self.select.threshold > 0.0 && self.select.threshold <= 1.0) {
            return fail("select.threshold", "must be in (0,1]");
        }
        if self.select.step == 0 {
            return fail("select.step", "must be at least 1");
        }
        if self.smote.k_neighbors == 0 {
            return fail("smote.k_neighbors", "must be at least 1");
        }
        if !(self.boost.eta > 0.0 && self.boost.eta <= 1.0) {
            return fail("boost.eta", "must be in (0,1]");
        }
        for (name, v) in [
            ("boost.lambda", self.boost.lambda),
            ("boost.gamma", self.boost.gamma),
            ("boost.min_child_weight", self.boost.min_child_weight),
        ] {
            if v < 0.0 || !v.is_finite() {
                return fail(name, "must be a finite value >= 0");
            }
        }
        if self.boost.quantile_bins == 1 {
            return fail("boost.quantile_bins", "must be 0 (exact) or at least 2");
        }
        if self.eval.folds < 2 {
            return fail("eval.folds", "must be at least 2");
        }
        if self.select.folds == 1 {
            return fail("select.folds", "must be 0 (use eval.folds) or at least 2");
        }
        if self.learners.rf.n_trees == 0 {
            return fail("learners.rf.n_trees", "must be at least 1");
        }
        for (name, v) in [
            ("learners.rf.min_samples_split", self.learners.rf.min_samples_split),
            ("learners.dt.min_samples_split", self.learners.dt.min_samples_split),
        ] {
            if v < 2 {
                return fail(name, "must be at least 2");
            }
        }
        if self.learners.knn.k == 0 {
            return fail("learners.knn.k", "must be at least 1");
        }
        let ann = self.learners.ann.as_mlp();
        for (prefix, mlp) in [("learners.mlp", &self.learners.mlp), ("learners.ann", &ann)] {
            if mlp.hidden.iter().any(|&w| w == 0) {
                return fail(&format!("{prefix}.hidden"), "widths must be >= 1");
            }
            if mlp.epochs == 0 {
                return fail(&format!("{prefix}.epochs"), "must be at least 1");
            }
            if mlp.batch_size == 0 {
                return fail(&format!("{prefix}.batch_size"), "must be at least 1");
            }
            if !(mlp.learning_rate > 0.0 && mlp.learning_rate.is_finite()) {
                return fail(&format!("{prefix}.learning_rate"), "must be positive");
            }
            if !(0.0..1.0).contains(&mlp.momentum) {
                return fail(&format!("{prefix}.momentum"), "must be in [0,1)");
            }
        }
        if !(self.eval.scalability_tolerance >= 0.0) {
            return fail("eval.scalability_tolerance", "must be >= 0");
        }
        for list in [&self.select.learners, &self.eval.learners] {
            for name in list {
                self.learner_spec(name)?;
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> Result<DatasetKind> {
        match self.input.kind.as_str() {
            "kdd" => Ok(DatasetKind::Kdd),
            "malmem" => Ok(DatasetKind::Malmem),
            "generic" => Ok(DatasetKind::Generic),
            other => Err(Error::Config(format!(
                "input.kind: unknown schema '{other}' (kdd|malmem|generic)"
            ))),
        }
    }

    pub fn task(&self) -> Result<Task> {
        match self.input.task.as_str() {
            "binary" => Ok(Task::Binary),
            "multilabel" => Ok(Task::Multilabel),
            other => Err(Error::Config(format!(
                "input.task: unknown task '{other}' (binary|multilabel)"
            ))),
        }
    }

    pub fn scope(&self) -> Result<CvScope> {
        match self.eval.scope.as_str() {
            "global" => Ok(CvScope::GlobalSmote),
            "train-only" => Ok(CvScope::TrainOnlySmote),
            other => Err(Error::Config(format!(
                "eval.scope: unknown scope '{other}' (global|train-only)"
            ))),
        }
    }

    pub fn fold_spec(&self) -> Result<FoldSpec> {
        Ok(FoldSpec {
            n_folds: self.eval.folds,
            seed: self.run.seed,
            stratified: self.eval.stratified,
            scope: self.scope()?,
        })
    }

    /// Fold spec used inside the feature-selection sweep (possibly reduced).
    pub fn select_fold_spec(&self) -> Result<FoldSpec> {
        let mut spec = self.fold_spec()?;
        if self.select.folds > 0 {
            spec.n_folds = self.select.folds;
        }
        Ok(spec)
    }

    pub fn smote_config(&self) -> SmoteConfig {
        SmoteConfig {
            k_neighbors: self.smote.k_neighbors,
            seed: self.run.seed.wrapping_add(SEED_SMOTE),
        }
    }

    pub fn gb_config(&self, n_classes: usize) -> GBConfig {
        GBConfig {
            n_rounds: self.boost.n_rounds,
            max_depth: self.boost.max_depth,
            eta: self.boost.eta,
            lambda: self.boost.lambda,
            gamma: self.boost.gamma,
            min_child_weight: self.boost.min_child_weight,
            objective: if n_classes <= 2 {
                Objective::BinaryLogistic
            } else {
                Objective::Softmax { n_classes }
            },
            quantile_bins: (self.boost.quantile_bins > 0).then_some(self.boost.quantile_bins),
        }
    }

    pub fn select_config(&self) -> SelectConfig {
        SelectConfig {
            threshold: self.select.threshold,
            step: self.select.step,
            early_exit: self.select.early_exit,
        }
    }

    pub fn learner_spec(&self, name: &str) -> Result<LearnerSpec> {
        let seed = self.run.seed;
        let mlp_config = |s: &MlpSection, offset: u64| MLPConfig {
            hidden_layers: s.hidden.clone(),
            epochs: s.epochs,
            batch_size: s.batch_size,
            learning_rate: s.learning_rate,
            momentum: s.momentum,
            seed: seed.wrapping_add(offset),
        };
        Ok(match name {
            "rf" => LearnerSpec::Rf(RFConfig {
                n_trees: self.learners.rf.n_trees,
                features_per_split: (self.learners.rf.features_per_split > 0)
                    .then_some(self.learners.rf.features_per_split),
                bootstrap: self.learners.rf.bootstrap,
                seed: seed.wrapping_add(SEED_RF),
                max_depth: (self.learners.rf.max_depth > 0).then_some(self.learners.rf.max_depth),
                min_samples_split: self.learners.rf.min_samples_split,
            }),
            "dt" => LearnerSpec::Dt(DTConfig {
                max_depth: (self.learners.dt.max_depth > 0).then_some(self.learners.dt.max_depth),
                min_samples_split: self.learners.dt.min_samples_split,
            }),
            "knn" => LearnerSpec::Knn(KNNConfig {
                k: self.learners.knn.k,
                sample_cap: (self.learners.knn.sample_cap > 0)
                    .then_some(self.learners.knn.sample_cap),
                seed: seed.wrapping_add(SEED_KNN),
            }),
            "mlp" => LearnerSpec::Mlp(mlp_config(&self.learners.mlp, SEED_MLP)),
            "ann" => LearnerSpec::Mlp(mlp_config(&self.learners.ann.as_mlp(), SEED_ANN)),
            "gb" => LearnerSpec::Gb(self.gb_config(2)),
            other => {
                return Err(Error::Config(format!(
                    "unknown learner '{other}' (rf|dt|knn|mlp|ann|gb)"
                )))
            }
        })
    }

    pub fn named_learners(&self, names: &[String]) -> Result<Vec<(String, LearnerSpec)>> {
        names
            .iter()
            .map(|n| Ok((n.clone(), self.learner_spec(n)?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.select.threshold, 0.9995);
        assert_eq!(cfg.eval.folds, 10);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let cfg: PipelineConfig = toml::from_str(
            r#"
            [input]
            kind = "kdd"
            path = "data.csv"
            task = "multilabel"

            [select]
            threshold = 0.99
            "#,
        )
        .unwrap();
        assert_eq!(cfg.kind().unwrap(), DatasetKind::Kdd);
        assert_eq!(cfg.select.threshold, 0.99);
        assert_eq!(cfg.select.step, 2);
        assert_eq!(cfg.eval.folds, 10);
    }

    #[test]
    fn validation_reports_field_paths() {
        let mut cfg = PipelineConfig::default();
        cfg.select.threshold = 1.5;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("select.threshold"), "{err}");

        let mut cfg = PipelineConfig::default();
        cfg.input.task = "multilabel".into();
        cfg.input.kind = "malmem".into();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("input.task"), "{err}");

        let mut cfg = PipelineConfig::default();
        cfg.learners.mlp.momentum = 1.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("learners.mlp.momentum"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<PipelineConfig>("[run]\nseeed = 1\n");
        assert!(err.is_err());
    }

    #[test]
    fn learner_specs_are_seeded_from_run_seed() {
        let mut cfg = PipelineConfig::default();
        cfg.run.seed = 100;
        match cfg.learner_spec("rf").unwrap() {
            LearnerSpec::Rf(rf) => assert_eq!(rf.seed, 102),
            other => panic!("{other:?}"),
        }
        match cfg.learner_spec("ann").unwrap() {
            LearnerSpec::Mlp(m) => {
                assert_eq!(m.hidden_layers, vec![64]);
                assert_eq!(m.seed, 104);
            }
            other => panic!("{other:?}"),
        }
    }
}
