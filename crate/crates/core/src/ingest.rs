//! Dataset ingestion: CSV loading for the supported schemas, row cleaning,
//! categorical and label encoding, and feature standardization.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Column, ColumnKind, ColumnStats, Dataset, LabelMap, RawTable};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Supported input schemas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Headerless, 42 columns: 41 features plus an outcome column whose
    /// values carry a trailing period (e.g. "smurf.").
    Kdd,
    /// Header row, 57 columns including `Category` and `Class`.
    Malmem,
    /// Header row; last column is the label, feature columns are numeric
    /// unless a value fails to parse.
    Generic,
}

/// Classification task. Multilabel is only meaningful for the KDD schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Binary,
    Multilabel,
}

/// The 41 KDD feature columns, in file order.
pub const KDD_FEATURES: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

const KDD_CATEGORICAL: [usize; 3] = [1, 2, 3];

/// Outcome sub-category -> attack category, after the trailing period is
/// stripped.
const KDD_SUBCATEGORIES: [(&str, &str); 23] = [
    ("back", "dos"),
    ("land", "dos"),
    ("neptune", "dos"),
    ("pod", "dos"),
    ("smurf", "dos"),
    ("teardrop", "dos"),
    ("buffer_overflow", "u2r"),
    ("loadmodule", "u2r"),
    ("perl", "u2r"),
    ("rootkit", "u2r"),
    ("ftp_write", "r2l"),
    ("guess_passwd", "r2l"),
    ("imap", "r2l"),
    ("multihop", "r2l"),
    ("phf", "r2l"),
    ("spy", "r2l"),
    ("warezclient", "r2l"),
    ("warezmaster", "r2l"),
    ("ipsweep", "probe"),
    ("nmap", "probe"),
    ("portsweep", "probe"),
    ("satan", "probe"),
    ("normal", "normal"),
];

/// Map a KDD outcome sub-category to its attack category. Accepts the raw
/// file form with a trailing '.' and any capitalization.
pub fn map_subcategories(outcome: &str) -> Result<&'static str> {
    let stripped = outcome.strip_suffix('.').unwrap_or(outcome);
    let lower = stripped.to_ascii_lowercase();
    KDD_SUBCATEGORIES
        .iter()
        .find(|(sub, _)| *sub == lower)
        .map(|(_, cat)| *cat)
        .ok_or_else(|| Error::UnknownSubcategory(stripped.to_string()))
}

/// Fixed label encoding for the KDD binary task.
pub fn kdd_binary_label_map() -> LabelMap {
    LabelMap::from_pairs(vec![("Attack".into(), 0), ("Normal".into(), 1)])
        .expect("static map is valid")
}

/// Fixed label encoding for the KDD multilabel task.
pub fn kdd_multilabel_label_map() -> LabelMap {
    LabelMap::from_pairs(vec![
        ("DoS".into(), 0),
        ("Normal".into(), 1),
        ("Probe".into(), 2),
        ("R2L".into(), 3),
        ("U2R".into(), 4),
    ])
    .expect("static map is valid")
}

fn category_display(cat: &str) -> &'static str {
    match cat {
        "dos" => "DoS",
        "normal" => "Normal",
        "probe" => "Probe",
        "r2l" => "R2L",
        "u2r" => "U2R",
        _ => unreachable!("map_subcategories only returns the five categories"),
    }
}

fn parse_numeric(raw: &str, path: &Path, row: usize, col: &str) -> Result<f64> {
    let t = raw.trim();
    if t.is_empty() {
        return Ok(f64::NAN); // cleaned out later
    }
    t.parse::<f64>().map_err(|_| Error::Parse {
        path: path.display().to_string(),
        row,
        msg: format!("column '{col}': cannot parse '{t}' as a number"),
    })
}

/// Load a CSV into a [`RawTable`] with column kinds assigned per schema.
pub fn load_csv(path: &Path, kind: DatasetKind) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;

    let mut records = reader.records();
    let columns: Vec<Column> = match kind {
        DatasetKind::Kdd => KDD_FEATURES
            .iter()
            .enumerate()
            .map(|(i, name)| Column {
                name: (*name).to_string(),
                kind: if KDD_CATEGORICAL.contains(&i) {
                    ColumnKind::Categorical
                } else {
                    ColumnKind::Numeric
                },
            })
            .chain(std::iter::once(Column {
                name: "outcome".into(),
                kind: ColumnKind::Label,
            }))
            .collect(),
        DatasetKind::Malmem | DatasetKind::Generic => {
            let header = records.next().ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                row: 0,
                msg: "empty file".into(),
            })??;
            let names: Vec<String> = header.iter().map(str::to_string).collect();
            match kind {
                DatasetKind::Malmem => {
                    if names.len() != 57 {
                        return Err(Error::Parse {
                            path: path.display().to_string(),
                            row: 1,
                            msg: format!("MalMem header must have 57 columns, found {}", names.len()),
                        });
                    }
                    for required in ["Category", "Class"] {
                        if !names.iter().any(|n| n == required) {
                            return Err(Error::Parse {
                                path: path.display().to_string(),
                                row: 1,
                                msg: format!("MalMem header is missing '{required}'"),
                            });
                        }
                    }
                    names
                        .into_iter()
                        .map(|name| {
                            let kind = if name == "Category" || name == "Class" {
                                ColumnKind::Label
                            } else {
                                ColumnKind::Numeric
                            };
                            Column { name, kind }
                        })
                        .collect()
                }
                _ => {
                    let last = names.len() - 1;
                    names
                        .into_iter()
                        .enumerate()
                        .map(|(i, name)| Column {
                            name,
                            kind: if i == last {
                                ColumnKind::Label
                            } else {
                                ColumnKind::Numeric // refined below
                            },
                        })
                        .collect()
                }
            }
        }
    };

    let header_rows = usize::from(kind != DatasetKind::Kdd);
    let mut text_rows: Vec<Vec<String>> = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record?;
        let row_no = i + 1 + header_rows;
        if record.len() != columns.len()
            && !(record.len() == 1 && record[0].trim().is_empty())
        {
            return Err(Error::Parse {
                path: path.display().to_string(),
                row: row_no,
                msg: format!("expected {} cells, found {}", columns.len(), record.len()),
            });
        }
        if record.len() == 1 && record[0].trim().is_empty() {
            continue; // blank line
        }
        text_rows.push(record.iter().map(str::to_string).collect());
    }
    if text_rows.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            row: header_rows,
            msg: "no data rows".into(),
        });
    }

    // generic schema: demote a feature column to categorical if any value is
    // non-numeric
    let mut columns = columns;
    if kind == DatasetKind::Generic {
        for (c, col) in columns.iter_mut().enumerate() {
            if col.kind != ColumnKind::Numeric {
                continue;
            }
            let numeric = text_rows.iter().all(|r| {
                let t = r[c].trim();
                t.is_empty() || t.parse::<f64>().is_ok()
            });
            if !numeric {
                col.kind = ColumnKind::Categorical;
            }
        }
    }

    let mut rows = Vec::with_capacity(text_rows.len());
    for (i, raw) in text_rows.into_iter().enumerate() {
        let row_no = i + 1 + header_rows;
        let mut cells = Vec::with_capacity(columns.len());
        for (c, v) in raw.into_iter().enumerate() {
            let cell = match columns[c].kind {
                ColumnKind::Numeric => Cell::Num(parse_numeric(&v, path, row_no, &columns[c].name)?),
                ColumnKind::Categorical | ColumnKind::Label => Cell::Text(v.trim().to_string()),
            };
            cells.push(cell);
        }
        rows.push(cells);
    }

    RawTable::new(columns, rows, path.to_path_buf())
}

fn row_key_hash(row: &[Cell]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for c in row {
        match c {
            Cell::Num(v) => {
                0u8.hash(&mut h);
                v.to_bits().hash(&mut h);
            }
            Cell::Text(s) => {
                1u8.hash(&mut h);
                s.hash(&mut h);
            }
        }
    }
    h.finish()
}

fn rows_equal(a: &[Cell], b: &[Cell]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (x, y) {
            (Cell::Num(u), Cell::Num(v)) => u.to_bits() == v.to_bits(),
            (Cell::Text(u), Cell::Text(v)) => u == v,
            _ => false,
        })
}

/// Row-count bookkeeping from [`clean`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanStats {
    pub rows_in: usize,
    pub dropped_non_finite: usize,
    pub dropped_duplicate: usize,
}

/// Drop rows containing NaN/inf in any numeric cell, then drop exact
/// duplicate rows (features and label compared bit-exact after parsing),
/// keeping the first occurrence. Idempotent.
pub fn clean(table: RawTable) -> Result<(RawTable, CleanStats)> {
    let RawTable {
        columns,
        rows,
        source,
    } = table;
    let rows_in = rows.len();
    let mut dropped_non_finite = 0usize;
    let mut dropped_duplicate = 0usize;

    let mut seen: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut survivors: Vec<Vec<Cell>> = Vec::with_capacity(rows.len());
    for row in rows {
        let finite = row.iter().all(|c| match c {
            Cell::Num(v) => v.is_finite(),
            Cell::Text(_) => true,
        });
        if !finite {
            dropped_non_finite += 1;
            continue;
        }
        let key = row_key_hash(&row);
        let bucket = seen.entry(key).or_default();
        if bucket.iter().any(|&i| rows_equal(&survivors[i], &row)) {
            dropped_duplicate += 1;
            continue;
        }
        bucket.push(survivors.len());
        survivors.push(row);
    }

    if survivors.is_empty() {
        return Err(Error::Data(
            "cleaning removed every row (empty dataset)".into(),
        ));
    }
    let table = RawTable::new(columns, survivors, source)?;
    Ok((
        table,
        CleanStats {
            rows_in,
            dropped_non_finite,
            dropped_duplicate,
        },
    ))
}

/// Encode a text category column to integer labels via the supplied map.
pub fn encode_labels(categories: &[String], map: &LabelMap) -> Result<Vec<u32>> {
    categories
        .iter()
        .map(|c| {
            map.code(c)
                .ok_or_else(|| Error::UnmappedCategory(c.clone()))
        })
        .collect()
}

/// Replace every categorical feature column by integer codes assigned in
/// ascending lexicographic order of the column's distinct values. Returns
/// the per-column code maps for round-tripping.
pub fn encode_categoricals(table: RawTable) -> Result<(RawTable, Vec<(String, LabelMap)>)> {
    let RawTable {
        columns,
        mut rows,
        source,
    } = table;
    let mut code_maps = Vec::new();
    for (c, col) in columns.iter().enumerate() {
        if col.kind != ColumnKind::Categorical {
            continue;
        }
        let map = LabelMap::lexicographic(rows.iter().map(|r| {
            r[c].as_text()
                .expect("categorical columns hold text cells")
        }));
        for row in &mut rows {
            let text = row[c].as_text().expect("categorical cell");
            let code = map.code(text).expect("every value is in its own map");
            row[c] = Cell::Num(f64::from(code));
        }
        code_maps.push((col.name.clone(), map));
    }
    let columns = columns
        .into_iter()
        .map(|col| Column {
            kind: if col.kind == ColumnKind::Categorical {
                ColumnKind::Numeric
            } else {
                col.kind
            },
            ..col
        })
        .collect();
    Ok((RawTable::new(columns, rows, source)?, code_maps))
}

/// Compute per-column stats and scale: `(x - mean) / std` with population
/// std; constant columns (std = 0) map to all zeros.
pub fn standardize(x: &Matrix) -> (Matrix, ColumnStats) {
    let stats = column_stats(x);
    (apply_stats_unchecked(x, &stats), stats)
}

pub fn column_stats(x: &Matrix) -> ColumnStats {
    let n = x.n_rows() as f64;
    let d = x.n_cols();
    let mut mean = vec![0.0; d];
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for row in x.iter_rows() {
        for (j, &v) in row.iter().enumerate() {
            mean[j] += v;
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for row in x.iter_rows() {
        for (j, &v) in row.iter().enumerate() {
            let e = v - mean[j];
            var[j] += e * e;
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    ColumnStats {
        mean,
        std,
        min,
        max,
    }
}

/// Scale a matrix with previously computed stats (training-fold stats applied
/// to a test fold).
pub fn apply_stats(x: &Matrix, stats: &ColumnStats) -> Result<Matrix> {
    if stats.n_cols() != x.n_cols() {
        return Err(Error::Shape {
            expected: x.n_cols(),
            got: stats.n_cols(),
        });
    }
    Ok(apply_stats_unchecked(x, stats))
}

fn apply_stats_unchecked(x: &Matrix, stats: &ColumnStats) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.n_rows() {
        let row = out.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = if stats.std[j] == 0.0 {
                0.0
            } else {
                (*v - stats.mean[j]) / stats.std[j]
            };
        }
    }
    out
}

/// Everything `prepare` learned about the input besides the dataset itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepareInfo {
    pub kind: DatasetKind,
    pub task: Task,
    pub clean: CleanStats,
    pub label_map: LabelMap,
    pub code_maps: Vec<(String, LabelMap)>,
}

/// Full ingestion: load, clean, derive the task label, encode categoricals
/// and labels, and (optionally) standardize.
pub fn prepare(
    path: &Path,
    kind: DatasetKind,
    task: Task,
    scale: bool,
) -> Result<(Dataset, PrepareInfo)> {
    if task == Task::Multilabel && kind != DatasetKind::Kdd {
        return Err(Error::Config(
            "multilabel task is only defined for the KDD schema".into(),
        ));
    }
    let table = load_csv(path, kind)?;
    let (table, clean_stats) = clean(table)?;

    // derive label categories per schema/task
    let label_col = match kind {
        DatasetKind::Kdd => table.column_index("outcome").expect("kdd schema"),
        DatasetKind::Malmem => table.column_index("Class").expect("malmem schema"),
        DatasetKind::Generic => table.columns.len() - 1,
    };
    let categories: Vec<String> = match (kind, task) {
        (DatasetKind::Kdd, Task::Binary) => table
            .rows
            .iter()
            .map(|r| {
                let outcome = r[label_col].as_text().expect("label cell");
                map_subcategories(outcome).map(|cat| {
                    if cat == "normal" { "Normal" } else { "Attack" }.to_string()
                })
            })
            .collect::<Result<_>>()?,
        (DatasetKind::Kdd, Task::Multilabel) => table
            .rows
            .iter()
            .map(|r| {
                let outcome = r[label_col].as_text().expect("label cell");
                map_subcategories(outcome).map(|cat| category_display(cat).to_string())
            })
            .collect::<Result<_>>()?,
        _ => table
            .rows
            .iter()
            .map(|r| r[label_col].as_text().expect("label cell").to_string())
            .collect(),
    };
    let label_map = match (kind, task) {
        (DatasetKind::Kdd, Task::Binary) => kdd_binary_label_map(),
        (DatasetKind::Kdd, Task::Multilabel) => kdd_multilabel_label_map(),
        _ => LabelMap::lexicographic(&categories),
    };
    let y = encode_labels(&categories, &label_map)?;

    let (table, code_maps) = encode_categoricals(table)?;

    // assemble the feature matrix from non-label columns
    let feature_cols: Vec<usize> = table
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == ColumnKind::Numeric)
        .map(|(i, _)| i)
        .collect();
    let feature_names: Vec<String> = feature_cols
        .iter()
        .map(|&i| table.columns[i].name.clone())
        .collect();
    let mut data = Vec::with_capacity(table.n_rows() * feature_cols.len());
    for row in &table.rows {
        for &c in &feature_cols {
            data.push(row[c].as_num().expect("numeric cell after encoding"));
        }
    }
    let x = Matrix::from_vec(table.n_rows(), feature_cols.len(), data)?;

    let (x, stats) = if scale {
        let (scaled, stats) = standardize(&x);
        (scaled, Some(stats))
    } else {
        (x, None)
    };

    let class_names = label_map.class_names();
    let dataset = Dataset::new(x, y, feature_names, class_names, stats)?;
    Ok((
        dataset,
        PrepareInfo {
            kind,
            task,
            clean: clean_stats,
            label_map,
            code_maps,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn table(columns: Vec<(&str, ColumnKind)>, rows: Vec<Vec<Cell>>) -> RawTable {
        RawTable::new(
            columns
                .into_iter()
                .map(|(name, kind)| Column {
                    name: name.into(),
                    kind,
                })
                .collect(),
            rows,
            "mem".into(),
        )
        .unwrap()
    }

    #[test]
    fn subcategory_mapping_per_attack_table() {
        assert_eq!(map_subcategories("smurf").unwrap(), "dos");
        assert_eq!(map_subcategories("smurf.").unwrap(), "dos");
        assert_eq!(map_subcategories("rootkit").unwrap(), "u2r");
        assert_eq!(map_subcategories("normal.").unwrap(), "normal");
        assert_eq!(map_subcategories("warezmaster").unwrap(), "r2l");
        assert_eq!(map_subcategories("Nmap").unwrap(), "probe");
        let err = map_subcategories("flood.").unwrap_err();
        assert!(err.to_string().contains("flood"));
    }

    #[test]
    fn subcategory_mapping_is_total_and_partitions() {
        let mut per_cat: HashMap<&str, usize> = HashMap::new();
        for (sub, _) in KDD_SUBCATEGORIES {
            *per_cat.entry(map_subcategories(sub).unwrap()).or_default() += 1;
        }
        assert_eq!(per_cat["dos"], 6);
        assert_eq!(per_cat["u2r"], 4);
        assert_eq!(per_cat["r2l"], 8);
        assert_eq!(per_cat["probe"], 4);
        assert_eq!(per_cat["normal"], 1);
        assert_eq!(per_cat.values().sum::<usize>(), 23);
    }

    #[test]
    fn label_encodings_match_fixed_tables() {
        let b = kdd_binary_label_map();
        assert_eq!(b.code("Attack"), Some(0));
        assert_eq!(b.code("Normal"), Some(1));
        let m = kdd_multilabel_label_map();
        for (name, code) in [("DoS", 0), ("Normal", 1), ("Probe", 2), ("R2L", 3), ("U2R", 4)] {
            assert_eq!(m.code(name), Some(code), "{name}");
        }
    }

    #[test]
    fn encode_labels_maps_and_rejects_unknown() {
        let map = kdd_multilabel_label_map();
        let cats = vec!["DoS".to_string(), "U2R".into(), "Normal".into()];
        assert_eq!(encode_labels(&cats, &map).unwrap(), vec![0, 4, 1]);
        assert!(encode_labels(&["hax".to_string()], &map).is_err());
        let empty: Vec<String> = vec![];
        assert_eq!(encode_labels(&empty, &map).unwrap(), Vec::<u32>::new());
    }

    #[test]
    fn clean_drops_non_finite_and_duplicates_in_order() {
        let t = table(
            vec![("a", ColumnKind::Numeric), ("l", ColumnKind::Label)],
            vec![
                vec![Cell::Num(1.0), Cell::Text("x".into())],
                vec![Cell::Num(f64::NAN), Cell::Text("x".into())],
                vec![Cell::Num(2.0), Cell::Text("y".into())],
                vec![Cell::Num(1.0), Cell::Text("x".into())],
                vec![Cell::Num(f64::INFINITY), Cell::Text("z".into())],
            ],
        );
        let (out, stats) = clean(t).unwrap();
        assert_eq!(out.n_rows(), 2);
        assert_eq!(out.rows[0][0], Cell::Num(1.0));
        assert_eq!(out.rows[1][0], Cell::Num(2.0));
        assert_eq!(stats.dropped_non_finite, 2);
        assert_eq!(stats.dropped_duplicate, 1);

        // idempotence
        let (again, stats2) = clean(out.clone()).unwrap();
        assert_eq!(again.rows, out.rows);
        assert_eq!(stats2.dropped_non_finite + stats2.dropped_duplicate, 0);
    }

    #[test]
    fn clean_rejects_fully_removed_table() {
        let t = table(
            vec![("a", ColumnKind::Numeric)],
            vec![vec![Cell::Num(f64::NAN)]],
        );
        assert!(clean(t).is_err());
    }

    #[test]
    fn categorical_codes_are_lexicographic() {
        let t = table(
            vec![("proto", ColumnKind::Categorical), ("v", ColumnKind::Numeric)],
            vec![
                vec![Cell::Text("udp".into()), Cell::Num(1.0)],
                vec![Cell::Text("icmp".into()), Cell::Num(2.0)],
                vec![Cell::Text("tcp".into()), Cell::Num(3.0)],
                vec![Cell::Text("icmp".into()), Cell::Num(4.0)],
            ],
        );
        let (out, maps) = encode_categoricals(t).unwrap();
        assert_eq!(out.rows[0][0], Cell::Num(2.0)); // udp
        assert_eq!(out.rows[1][0], Cell::Num(0.0)); // icmp
        assert_eq!(out.rows[2][0], Cell::Num(1.0)); // tcp
        assert_eq!(maps.len(), 1);
        assert_eq!(maps[0].0, "proto");
        assert_eq!(maps[0].1.code("tcp"), Some(1));
        assert!(out.columns.iter().all(|c| c.kind != ColumnKind::Categorical));
    }

    #[test]
    fn single_valued_categorical_is_all_zeros() {
        let t = table(
            vec![("c", ColumnKind::Categorical)],
            vec![
                vec![Cell::Text("only".into())],
                vec![Cell::Text("only".into())],
            ],
        );
        let (out, _) = encode_categoricals(t).unwrap();
        assert!(out.rows.iter().all(|r| r[0] == Cell::Num(0.0)));
    }

    #[test]
    fn already_numeric_table_is_unchanged() {
        let t = table(
            vec![("a", ColumnKind::Numeric)],
            vec![vec![Cell::Num(5.0)], vec![Cell::Num(6.0)]],
        );
        let rows_before = t.rows.clone();
        let (out, maps) = encode_categoricals(t).unwrap();
        assert_eq!(out.rows, rows_before);
        assert!(maps.is_empty());
    }

    #[test]
    fn standardize_hand_case_and_guard() {
        let x = Matrix::from_vec(2, 2, vec![0.0, 5.0, 2.0, 5.0]).unwrap();
        let (scaled, stats) = standardize(&x);
        // column [0,2]: mean 1, population std 1 -> [-1, 1]
        assert_eq!(stats.mean[0], 1.0);
        assert_eq!(stats.std[0], 1.0);
        assert_eq!(scaled.get(0, 0), -1.0);
        assert_eq!(scaled.get(1, 0), 1.0);
        // constant column [5,5] -> zeros
        assert_eq!(scaled.get(0, 1), 0.0);
        assert_eq!(scaled.get(1, 1), 0.0);
        assert_eq!(stats.min[0], 0.0);
        assert_eq!(stats.max[0], 2.0);
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_std() {
        let x = Matrix::from_vec(5, 1, vec![3.0, -1.0, 7.5, 0.25, 9.0]).unwrap();
        let (scaled, _) = standardize(&x);
        let n = scaled.n_rows() as f64;
        let mean: f64 = (0..5).map(|i| scaled.get(i, 0)).sum::<f64>() / n;
        let var: f64 = (0..5).map(|i| (scaled.get(i, 0) - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() <= 1e-9);
        assert!((var.sqrt() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn apply_stats_consistency_and_identity() {
        let x = Matrix::from_vec(3, 2, vec![1.0, 4.0, 2.0, 5.0, 3.0, 9.0]).unwrap();
        let (scaled, stats) = standardize(&x);
        assert_eq!(apply_stats(&x, &stats).unwrap(), scaled);
        // identity stats leave the matrix unchanged
        let id = ColumnStats {
            mean: vec![0.0, 0.0],
            std: vec![1.0, 1.0],
            min: vec![0.0, 0.0],
            max: vec![0.0, 0.0],
        };
        assert_eq!(apply_stats(&x, &id).unwrap(), x);
        // shape mismatch is an error
        let narrow = Matrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(apply_stats(&narrow, &stats).is_err());
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn kdd_line(outcome: &str, v: usize) -> String {
        // 41 features: col1..3 categorical, others numeric
        let mut cells = vec![v.to_string(), "tcp".into(), "http".into(), "SF".into()];
        cells.extend((4..41).map(|j| ((v + j) % 7).to_string()));
        cells.push(outcome.to_string());
        cells.join(",")
    }

    #[test]
    fn kdd_load_and_prepare_binary() {
        let content = format!(
            "{}\n{}\n{}\n{}\n",
            kdd_line("smurf.", 1),
            kdd_line("normal.", 2),
            kdd_line("neptune.", 3),
            kdd_line("normal.", 4),
        );
        let f = write_temp(&content);
        let raw = load_csv(f.path(), DatasetKind::Kdd).unwrap();
        assert_eq!(raw.n_rows(), 4);
        assert_eq!(raw.columns.len(), 42);
        assert_eq!(raw.columns[1].kind, ColumnKind::Categorical);

        let (ds, info) = prepare(f.path(), DatasetKind::Kdd, Task::Binary, true).unwrap();
        assert_eq!(ds.n_features(), 41);
        assert_eq!(ds.class_names, vec!["Attack", "Normal"]);
        assert_eq!(ds.y, vec![0, 1, 0, 1]);
        assert!(ds.stats.is_some());
        assert_eq!(info.code_maps.len(), 3);
    }

    #[test]
    fn kdd_multilabel_labels() {
        let content = format!(
            "{}\n{}\n{}\n{}\n{}\n",
            kdd_line("smurf.", 1),
            kdd_line("normal.", 2),
            kdd_line("satan.", 3),
            kdd_line("spy.", 4),
            kdd_line("rootkit.", 5),
        );
        let f = write_temp(&content);
        let (ds, _) = prepare(f.path(), DatasetKind::Kdd, Task::Multilabel, false).unwrap();
        assert_eq!(ds.y, vec![0, 1, 2, 3, 4]);
        assert!(ds.stats.is_none());
    }

    #[test]
    fn kdd_bad_width_is_parse_error_with_row() {
        let f = write_temp(&format!("{}\n1,2,3\n", kdd_line("normal.", 1)));
        let err = load_csv(f.path(), DatasetKind::Kdd).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "got: {msg}");
    }

    #[test]
    fn empty_file_is_parse_error() {
        let f = write_temp("");
        assert!(load_csv(f.path(), DatasetKind::Kdd).is_err());
        assert!(load_csv(f.path(), DatasetKind::Generic).is_err());
    }

    #[test]
    fn malmem_prepare_drops_category_and_encodes_class() {
        let mut names: Vec<String> = (0..55).map(|i| format!("m{i}")).collect();
        names.insert(0, "Category".into());
        names.push("Class".into());
        let header = names.join(",");
        let mut lines = vec![header];
        for i in 0..4 {
            let mut cells = vec![if i % 2 == 0 {
                format!("Ransomware-fam{i}")
            } else {
                "Benign".to_string()
            }];
            cells.extend((0..55).map(|j| format!("{}", (i * 3 + j) % 11)));
            cells.push(if i % 2 == 0 { "Malicious" } else { "Benign" }.to_string());
            lines.push(cells.join(","));
        }
        let f = write_temp(&(lines.join("\n") + "\n"));
        let (ds, info) = prepare(f.path(), DatasetKind::Malmem, Task::Binary, true).unwrap();
        assert_eq!(ds.n_features(), 55);
        assert!(!ds.feature_names.iter().any(|n| n == "Category" || n == "Class"));
        assert_eq!(ds.class_names, vec!["Benign", "Malicious"]);
        assert_eq!(ds.y, vec![1, 0, 1, 0]);
        assert_eq!(info.label_map.code("Benign"), Some(0));
    }

    #[test]
    fn multilabel_rejected_for_non_kdd() {
        let f = write_temp("a,b,label\n1,2,x\n");
        assert!(prepare(f.path(), DatasetKind::Generic, Task::Multilabel, false).is_err());
    }

    #[test]
    fn generic_schema_detects_categorical_features() {
        let f = write_temp("num,cat,label\n1.5,red,yes\n2.5,blue,no\n3.5,red,yes\n");
        let (ds, info) = prepare(f.path(), DatasetKind::Generic, Task::Binary, false).unwrap();
        assert_eq!(ds.n_features(), 2);
        // blue=0, red=1
        assert_eq!(ds.x.get(0, 1), 1.0);
        assert_eq!(ds.x.get(1, 1), 0.0);
        // labels lexicographic: no=0, yes=1
        assert_eq!(ds.y, vec![1, 0, 1]);
        assert_eq!(info.code_maps[0].0, "cat");
    }
}
