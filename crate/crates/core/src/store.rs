//! On-disk artifacts: the prepared-dataset binary with its JSON sidecar,
//! versioned JSON envelopes for models/rankings/selections, report CSV
//! writers, and content hashing for manifests.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{ColumnStats, Dataset, LabelMap};
use crate::error::{Error, Result};
use crate::eval::{EvalReport, RocPoint};
use crate::ingest::PrepareInfo;
use crate::matrix::Matrix;
use crate::select::SelectionResult;

const DATASET_MAGIC: &[u8; 8] = b"NIDSDS01";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(format!("{:x}", h.finalize()))
}

/// JSON sidecar describing a prepared-dataset binary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub version: u32,
    pub row_count: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub label_map: Option<LabelMap>,
    pub code_maps: Vec<(String, LabelMap)>,
    pub stats: Option<ColumnStats>,
    pub content_hash: String,
    pub prepare: Option<PrepareInfoSummary>,
}

/// The parts of [`PrepareInfo`] worth persisting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepareInfoSummary {
    pub kind: crate::ingest::DatasetKind,
    pub task: crate::ingest::Task,
    pub rows_in: usize,
    pub dropped_non_finite: usize,
    pub dropped_duplicate: usize,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    PathBuf::from(s)
}

/// Write the binary matrix+labels file and its JSON sidecar.
pub fn save_dataset(data: &Dataset, info: Option<&PrepareInfo>, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(
        DATASET_MAGIC.len() + 24 + data.n_rows() * 4 + data.n_rows() * data.n_features() * 8,
    );
    bytes.extend_from_slice(DATASET_MAGIC);
    bytes.extend_from_slice(&(data.n_rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(data.n_features() as u64).to_le_bytes());
    bytes.extend_from_slice(&(data.n_classes() as u64).to_le_bytes());
    for &l in &data.y {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    for &v in data.x.data() {
        bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fs::write(path, &bytes)?;

    let sidecar = DatasetSidecar {
        version: 1,
        row_count: data.n_rows(),
        n_features: data.n_features(),
        n_classes: data.n_classes(),
        feature_names: data.feature_names.clone(),
        class_names: data.class_names.clone(),
        label_map: info.map(|i| i.label_map.clone()),
        code_maps: info.map(|i| i.code_maps.clone()).unwrap_or_default(),
        stats: data.stats.clone(),
        content_hash: sha256_hex(&bytes),
        prepare: info.map(|i| PrepareInfoSummary {
            kind: i.kind,
            task: i.task,
            rows_in: i.clean.rows_in,
            dropped_non_finite: i.clean.dropped_non_finite,
            dropped_duplicate: i.clean.dropped_duplicate,
        }),
    };
    let json = serde_json::to_vec_pretty(&sidecar)?;
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Read a prepared dataset back, verifying the sidecar's content hash.
pub fn load_dataset(path: &Path) -> Result<(Dataset, DatasetSidecar)> {
    let bytes = fs::read(path).map_err(|e| {
        Error::Data(format!(
            "cannot read prepared dataset '{}': {e}; run the ingest stage first",
            path.display()
        ))
    })?;
    let sidecar: DatasetSidecar = serde_json::from_slice(&fs::read(sidecar_path(path)).map_err(
        |e| {
            Error::Data(format!(
                "cannot read dataset sidecar '{}': {e}; run the ingest stage first",
                sidecar_path(path).display()
            ))
        },
    )?)?;
    if sidecar.content_hash != sha256_hex(&bytes) {
        return Err(Error::Data(format!(
            "prepared dataset '{}' does not match its sidecar hash (stale or corrupted)",
            path.display()
        )));
    }

    if bytes.len() < DATASET_MAGIC.len() + 24 || &bytes[..8] != DATASET_MAGIC {
        return Err(Error::Data(format!(
            "'{}' is not a prepared dataset file",
            path.display()
        )));
    }
    let u64_at = |off: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[off..off + 8]);
        u64::from_le_bytes(b) as usize
    };
    let n_rows = u64_at(8);
    let n_features = u64_at(16);
    let expected = 32 + n_rows * 4 + n_rows * n_features * 8;
    if bytes.len() != expected {
        return Err(Error::Data(format!(
            "prepared dataset '{}' is truncated ({} of {expected} bytes)",
            path.display(),
            bytes.len()
        )));
    }
    let mut y = Vec::with_capacity(n_rows);
    let mut off = 32;
    for _ in 0..n_rows {
        let mut b = [0u8; 4];
        b.copy_from_slice(&bytes[off..off + 4]);
        y.push(u32::from_le_bytes(b));
        off += 4;
    }
    let mut x = Vec::with_capacity(n_rows * n_features);
    for _ in 0..n_rows * n_features {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[off..off + 8]);
        x.push(f64::from_bits(u64::from_le_bytes(b)));
        off += 8;
    }
    let data = Dataset::new(
        Matrix::from_vec(n_rows, n_features, x)?,
        y,
        sidecar.feature_names.clone(),
        sidecar.class_names.clone(),
        sidecar.stats.clone(),
    )?;
    Ok((data, sidecar))
}

/// Versioned JSON envelope wrapping every serialized artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub format: String,
    pub version: u32,
    pub payload: T,
}

pub fn save_json<T: Serialize>(payload: &T, format_tag: &str, path: &Path) -> Result<()> {
    let env = Envelope {
        format: format_tag.to_string(),
        version: 1,
        payload,
    };
    let mut out = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &env)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(format_tag: &str, path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| {
        Error::Data(format!(
            "cannot read '{}': {e}; run the producing stage first",
            path.display()
        ))
    })?;
    let env: Envelope<T> = serde_json::from_slice(&bytes)?;
    if env.format != format_tag {
        return Err(Error::Data(format!(
            "'{}' holds a '{}' artifact, expected '{format_tag}'",
            path.display(),
            env.format
        )));
    }
    Ok(env.payload)
}

fn fmt_pct(v: f64) -> String {
    format!("{:.6}", v * 100.0)
}

/// `metrics.csv`: one row per learner x fold plus a mean row per learner,
/// all metric columns as percentages.
pub fn write_metrics_csv(report: &EvalReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "learner",
        "feature_set",
        "fold",
        "accuracy",
        "precision",
        "recall",
        "f1",
        "mae",
        "mse",
        "rmse",
        "auc",
    ])?;
    for learner in &report.learners {
        let rows = learner
            .outcome
            .per_fold
            .iter()
            .enumerate()
            .map(|(f, r)| (f.to_string(), r))
            .chain(std::iter::once(("mean".to_string(), &learner.outcome.mean)));
        for (fold, r) in rows {
            w.write_record([
                learner.name.as_str(),
                report.feature_set_label.as_str(),
                fold.as_str(),
                &fmt_pct(r.accuracy),
                &fmt_pct(r.precision),
                &fmt_pct(r.recall),
                &fmt_pct(r.f1),
                &fmt_pct(r.mae),
                &fmt_pct(r.mse),
                &fmt_pct(r.rmse),
                &r.auc.map(fmt_pct).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `confusion_<learner>.csv`: count rows then percent rows.
pub fn write_confusion_csv(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for learner in &report.learners {
        let path = dir.join(format!("confusion_{}.csv", learner.name));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["kind".to_string(), "actual".to_string()];
        header.extend(report.class_names.iter().cloned());
        w.write_record(&header)?;
        let cm = &learner.outcome.confusion;
        for (kind, values) in [
            (
                "count",
                cm.counts.iter().map(|&c| c.to_string()).collect::<Vec<_>>(),
            ),
            (
                "percent",
                cm.to_percent().iter().map(|p| format!("{p:.6}")).collect(),
            ),
        ] {
            for a in 0..cm.n_classes {
                let mut rec = vec![kind.to_string(), report.class_names[a].clone()];
                rec.extend(values[a * cm.n_classes..(a + 1) * cm.n_classes].iter().cloned());
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// `roc_<learner>.csv`: (positive class, fpr, tpr, threshold) triples.
pub fn write_roc_csv(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for learner in &report.learners {
        let path = dir.join(format!("roc_{}.csv", learner.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["class", "fpr", "tpr", "threshold"])?;
        for series in &learner.outcome.roc {
            for RocPoint {
                fpr,
                tpr,
                threshold,
            } in &series.points
            {
                w.write_record([
                    report.class_names[series.positive_class].as_str(),
                    &format!("{fpr:.9}"),
                    &format!("{tpr:.9}"),
                    &format!("{threshold}"),
                ])?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// CSV mirror of a selection result for plotting accuracy-vs-k curves.
pub fn write_selection_csv(result: &SelectionResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "learner", "accuracy", "passed"])?;
    for c in &result.candidates {
        for (learner, acc) in &c.accuracies {
            w.write_record([
                &c.k.to_string(),
                learner,
                &fmt_pct(*acc),
                &c.passed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
