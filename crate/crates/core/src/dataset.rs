//! Core data model: raw tables straight off a CSV, column statistics, label
//! maps, and the immutable numeric [`Dataset`] every later stage consumes.

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How a raw column is interpreted during ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
}

/// One cell of a raw table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            Cell::Num(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// A parsed CSV before cleaning and encoding. Every row has exactly
/// `columns.len()` cells and column names are unique.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub source: PathBuf,
}

impl RawTable {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<Cell>>, source: PathBuf) -> Result<RawTable> {
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Data(format!("duplicate column name '{}'", c.name)));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(Error::Parse {
                    path: source.display().to_string(),
                    row: i + 1,
                    msg: format!("expected {} cells, found {}", columns.len(), r.len()),
                });
            }
        }
        Ok(RawTable {
            columns,
            rows,
            source,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

/// Per-column mean/std/min/max captured when standardizing, reused to scale
/// held-out rows with the training fold's statistics. `std` is the population
/// standard deviation (divide by n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ColumnStats {
    pub fn n_cols(&self) -> usize {
        self.mean.len()
    }
}

/// Ordered category-name -> integer-code mapping. Codes are dense in
/// `0..n_classes` and the mapping is injective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    pairs: Vec<(String, u32)>,
}

impl LabelMap {
    /// Build a map assigning codes 0.. in ascending lexicographic order of
    /// the distinct category names.
    pub fn lexicographic<I, S>(categories: I) -> LabelMap
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut names: Vec<String> = categories
            .into_iter()
            .map(|s| s.as_ref().to_string())
            .collect();
        names.sort();
        names.dedup();
        LabelMap {
            pairs: names
                .into_iter()
                .enumerate()
                .map(|(i, n)| (n, i as u32))
                .collect(),
        }
    }

    /// Build from explicit ordered pairs; codes must be 0..len with no gaps.
    pub fn from_pairs(pairs: Vec<(String, u32)>) -> Result<LabelMap> {
        let mut codes: Vec<u32> = pairs.iter().map(|(_, c)| *c).collect();
        codes.sort_unstable();
        if codes.iter().enumerate().any(|(i, &c)| c != i as u32) {
            return Err(Error::Data(
                "label codes must be 0..n_classes with no gaps".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for (name, _) in &pairs {
            if !seen.insert(name.as_str()) {
                return Err(Error::Data(format!("duplicate label category '{name}'")));
            }
        }
        Ok(LabelMap { pairs })
    }

    pub fn code(&self, category: &str) -> Option<u32> {
        self.pairs
            .iter()
            .find(|(n, _)| n == category)
            .map(|(_, c)| *c)
    }

    pub fn name(&self, code: u32) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(_, c)| *c == code)
            .map(|(n, _)| n.as_str())
    }

    pub fn n_classes(&self) -> usize {
        self.pairs.len()
    }

    /// Class names ordered by code.
    pub fn class_names(&self) -> Vec<String> {
        let mut v = self.pairs.clone();
        v.sort_by_key(|(_, c)| *c);
        v.into_iter().map(|(n, _)| n).collect()
    }

    pub fn pairs(&self) -> &[(String, u32)] {
        &self.pairs
    }
}

/// Immutable numeric feature matrix with integer class labels and column
/// metadata. Invariants checked at construction: no NaN/inf cells, every
/// label below `n_classes`, non-empty in both dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<u32>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Stats used to scale `x`, absent when unscaled.
    pub stats: Option<ColumnStats>,
}

impl Dataset {
    pub fn new(
        x: Matrix,
        y: Vec<u32>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        stats: Option<ColumnStats>,
    ) -> Result<Dataset> {
        if x.n_rows() == 0 || x.n_cols() == 0 {
            return Err(Error::Data("dataset must be non-empty".into()));
        }
        if y.len() != x.n_rows() {
            return Err(Error::Shape {
                expected: x.n_rows(),
                got: y.len(),
            });
        }
        if feature_names.len() != x.n_cols() {
            return Err(Error::Shape {
                expected: x.n_cols(),
                got: feature_names.len(),
            });
        }
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("dataset contains NaN or infinite cells".into()));
        }
        let n_classes = class_names.len() as u32;
        if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        if let Some(s) = &stats {
            if s.n_cols() != x.n_cols() {
                return Err(Error::Shape {
                    expected: x.n_cols(),
                    got: s.n_cols(),
                });
            }
        }
        Ok(Dataset {
            x,
            y,
            feature_names,
            class_names,
            stats,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Per-class sample counts, indexed by class code.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes()];
        for &l in &self.y {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Row indices grouped by class code.
    pub fn class_indices(&self) -> HashMap<u32, Vec<usize>> {
        let mut m: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, &l) in self.y.iter().enumerate() {
            m.entry(l).or_default().push(i);
        }
        m
    }

    /// New dataset keeping only the listed feature columns (in that order).
    pub fn select_features(&self, features: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = features.iter().find(|&&f| f >= self.n_features()) {
            return Err(Error::Argument(format!(
                "feature index {bad} out of range (d={})",
                self.n_features()
            )));
        }
        Dataset::new(
            self.x.take_cols(features),
            self.y.clone(),
            features
                .iter()
                .map(|&f| self.feature_names[f].clone())
                .collect(),
            self.class_names.clone(),
            self.stats.as_ref().map(|s| ColumnStats {
                mean: features.iter().map(|&f| s.mean[f]).collect(),
                std: features.iter().map(|&f| s.std[f]).collect(),
                min: features.iter().map(|&f| s.min[f]).collect(),
                max: features.iter().map(|&f| s.max[f]).collect(),
            }),
        )
    }

    /// New dataset keeping only the listed rows (in that order).
    pub fn take_rows(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.x.take_rows(idx),
            idx.iter().map(|&i| self.y[i]).collect(),
            self.feature_names.clone(),
            self.class_names.clone(),
            self.stats.clone(),
        )
    }
}
