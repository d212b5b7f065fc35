//! Synthetic dataset generator for dataset-free testing: Gaussian class
//! clusters separated by six sigma on the informative features, pure-noise
//! distractor columns, written in the generic CSV schema.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub class_counts: Vec<usize>,
    pub informative: usize,
    pub noise: usize,
    pub seed: u64,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.class_counts.len() < 2 {
            return Err(Error::Config("need at least 2 classes".into()));
        }
        if self.class_counts.len() > 10 {
            // single-digit class names keep the lexicographic label codes
            // aligned with class order
            return Err(Error::Config("at most 10 classes supported".into()));
        }
        if self.class_counts.iter().any(|&c| c == 0) {
            return Err(Error::Config("every class needs at least one row".into()));
        }
        if self.informative == 0 {
            return Err(Error::Config("need at least 1 informative feature".into()));
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    // Box-Muller; u1 in (0,1] avoids ln(0)
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generate the dataset in memory. Class `c` is centered at `6*c` on every
/// informative dimension (unit variance), so consecutive classes sit six
/// sigma apart; noise dimensions are standard normal regardless of class.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.informative + spec.noise;
    let n: usize = spec.class_counts.iter().sum();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for (c, &count) in spec.class_counts.iter().enumerate() {
        let center = 6.0 * c as f64;
        for _ in 0..count {
            for _ in 0..spec.informative {
                x.push(center + gaussian(&mut rng));
            }
            for _ in 0..spec.noise {
                x.push(gaussian(&mut rng));
            }
            y.push(c as u32);
        }
    }
    Dataset::new(
        Matrix::from_vec(n, d, x)?,
        y,
        (0..d)
            .map(|j| {
                if j < spec.informative {
                    format!("inf{j}")
                } else {
                    format!("noise{}", j - spec.informative)
                }
            })
            .collect(),
        (0..spec.class_counts.len()).map(|c| format!("c{c}")).collect(),
        None,
    )
}

/// Write a dataset as a generic-schema CSV (header row, label last).
pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = data.feature_names.join(",");
    header.push_str(",label");
    writeln!(out, "{header}")?;
    for i in 0..data.n_rows() {
        let mut line = String::new();
        for v in data.x.row(i) {
            line.push_str(&format!("{v}"));
            line.push(',');
        }
        line.push_str(&data.class_names[data.y[i] as usize]);
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Generate and write in one step.
pub fn generate_csv(spec: &SynthSpec, path: &Path) -> Result<Dataset> {
    let data = generate(spec)?;
    write_csv(&data, path)?;
    Ok(data)
}
