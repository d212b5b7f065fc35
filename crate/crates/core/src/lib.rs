//! Building blocks for a hybrid network-intrusion-detection pipeline:
//! dataset ingestion and preparation, SMOTE class balancing, second-order
//! gradient-boosted feature ranking, threshold-driven feature-subset
//! selection, classical and neural classifiers, and a cross-validated
//! evaluation harness with plot-ready report artifacts.

pub mod boost;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod learners;
pub mod matrix;
pub mod select;
pub mod smote;
pub mod store;
pub mod synth;

pub use boost::{BoostedForest, FeatureRanking, GBConfig, Objective};
pub use dataset::{Cell, Column, ColumnKind, ColumnStats, Dataset, LabelMap, RawTable};
pub use error::{Error, Result};
pub use eval::{CvScope, EvalReport, FoldSpec, MetricsRow};
pub use ingest::{DatasetKind, Task};
pub use learners::{LearnerModel, LearnerSpec};
pub use matrix::Matrix;
pub use select::{SelectConfig, SelectionResult};
pub use smote::SmoteConfig;
pub use synth::SynthSpec;
