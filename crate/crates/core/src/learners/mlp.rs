//! Multilayer perceptron: rectifier hidden layers, softmax output,
//! cross-entropy loss, mini-batch SGD with momentum. Also serves as the
//! single-hidden-layer "ANN" configuration.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::softmax;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLPConfig {
    pub hidden_layers: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for MLPConfig {
    fn default() -> Self {
        MLPConfig {
            hidden_layers: vec![128, 64],
            epochs: 125,
            batch_size: 128,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl MLPConfig {
    /// The "ANN" variant: same engine, one hidden layer of 64 units.
    pub fn ann() -> Self {
        MLPConfig {
            hidden_layers: vec![64],
            ..MLPConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.iter().any(|&w| w == 0) {
            return Err(Error::Config("hidden layer widths must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must be in [0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// Layer weights, each `out x in` row-major; serialized as base64 of the
    /// little-endian f64 bytes.
    #[serde(with = "b64_weights")]
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub n_classes: usize,
    pub n_features: usize,
    /// Mean training loss per epoch.
    pub train_loss: Vec<f64>,
}

mod b64_weights {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::matrix::Matrix;

    #[derive(Serialize, Deserialize)]
    struct Layer {
        rows: usize,
        cols: usize,
        data_b64: String,
    }

    pub fn serialize<S: Serializer>(ws: &[Matrix], s: S) -> Result<S::Ok, S::Error> {
        let layers: Vec<Layer> = ws
            .iter()
            .map(|w| {
                let mut bytes = Vec::with_capacity(w.data().len() * 8);
                for v in w.data() {
                    bytes.extend_from_slice(&v.to_bits().to_le_bytes());
                }
                Layer {
                    rows: w.n_rows(),
                    cols: w.n_cols(),
                    data_b64: STANDARD.encode(bytes),
                }
            })
            .collect();
        layers.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Matrix>, D::Error> {
        let layers = Vec::<Layer>::deserialize(d)?;
        layers
            .into_iter()
            .map(|l| {
                let bytes = STANDARD
                    .decode(&l.data_b64)
                    .map_err(serde::de::Error::custom)?;
                if bytes.len() != l.rows * l.cols * 8 {
                    return Err(serde::de::Error::custom("weight payload size mismatch"));
                }
                let data: Vec<f64> = bytes
                    .chunks_exact(8)
                    .map(|c| {
                        let mut b = [0u8; 8];
                        b.copy_from_slice(c);
                        f64::from_bits(u64::from_le_bytes(b))
                    })
                    .collect();
                Matrix::from_vec(l.rows, l.cols, data).map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

// dot product with four accumulators: fixed order, vectorizes well
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn forward(weights: &[Matrix], biases: &[Vec<f64>], row: &[f64]) -> Vec<Vec<f64>> {
    // activations[0] = input; last entry = output logits (pre-softmax)
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(weights.len() + 1);
    acts.push(row.to_vec());
    for (l, (w, b)) in weights.iter().zip(biases).enumerate() {
        let input = &acts[l];
        let mut z: Vec<f64> = (0..w.n_rows()).map(|o| dot(w.row(o), input) + b[o]).collect();
        if l + 1 < weights.len() {
            for v in &mut z {
                *v = v.max(0.0); // rectifier
            }
        }
        acts.push(z);
    }
    acts
}

struct Grads {
    dw: Vec<Matrix>,
    db: Vec<Vec<f64>>,
    loss: f64,
}

impl Grads {
    fn zeros(weights: &[Matrix]) -> Grads {
        Grads {
            dw: weights
                .iter()
                .map(|w| Matrix::zeros(w.n_rows(), w.n_cols()))
                .collect(),
            db: weights.iter().map(|w| vec![0.0; w.n_rows()]).collect(),
            loss: 0.0,
        }
    }

    fn add(&mut self, other: &Grads) {
        for (a, b) in self.dw.iter_mut().zip(&other.dw) {
            for i in 0..a.n_rows() {
                for (x, y) in a.row_mut(i).iter_mut().zip(b.row(i)) {
                    *x += y;
                }
            }
        }
        for (a, b) in self.db.iter_mut().zip(&other.db) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.loss += other.loss;
    }
}

/// Cross-entropy loss and accumulated gradients over a set of samples.
/// Exposed to the tests so backprop can be checked against central finite
/// differences of the loss.
fn loss_and_grads(
    weights: &[Matrix],
    biases: &[Vec<f64>],
    x: &Matrix,
    y: &[u32],
    rows: &[usize],
) -> Grads {
    let mut g = Grads::zeros(weights);
    let last = weights.len() - 1;
    for &i in rows {
        let acts = forward(weights, biases, x.row(i));
        let p = softmax(&acts[last + 1]);
        g.loss -= p[y[i] as usize].max(1e-300).ln();

        // delta at the output: p - onehot(y)
        let mut delta: Vec<f64> = p;
        delta[y[i] as usize] -= 1.0;

        for l in (0..=last).rev() {
            let input = &acts[l];
            for (o, &dv) in delta.iter().enumerate() {
                g.db[l][o] += dv;
                for (gw, &inp) in g.dw[l].row_mut(o).iter_mut().zip(input) {
                    *gw += dv * inp;
                }
            }
            if l > 0 {
                let w = &weights[l];
                let mut prev = vec![0.0; w.n_cols()];
                for (o, &dv) in delta.iter().enumerate() {
                    for (p, &wv) in prev.iter_mut().zip(w.row(o)) {
                        *p += dv * wv;
                    }
                }
                // rectifier derivative: zero where the activation was clamped
                for (p, &a) in prev.iter_mut().zip(&acts[l]) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }
    g
}

/// Gradients over a batch, split into fixed sequential chunks that are
/// reduced in chunk order, so the result is identical under any thread
/// schedule.
fn batch_grads(
    weights: &[Matrix],
    biases: &[Vec<f64>],
    x: &Matrix,
    y: &[u32],
    batch: &[usize],
) -> Grads {
    const CHUNK: usize = 64;
    let parts: Vec<Grads> = batch
        .par_chunks(CHUNK)
        .map(|rows| loss_and_grads(weights, biases, x, y, rows))
        .collect();
    let mut total = Grads::zeros(weights);
    for p in &parts {
        total.add(p);
    }
    total
}

/// Cross-entropy loss and parameter gradients of a model over the given
/// rows, for gradient-verification harnesses: the returned gradients are
/// exactly what one training step would use (before batch averaging).
pub fn loss_and_gradients(
    model: &MlpModel,
    x: &Matrix,
    y: &[u32],
    rows: &[usize],
) -> (f64, Vec<Matrix>, Vec<Vec<f64>>) {
    let g = loss_and_grads(&model.weights, &model.biases, x, y, rows);
    (g.loss, g.dw, g.db)
}

pub fn train_mlp(data: &Dataset, cfg: &MLPConfig) -> Result<MlpModel> {
    cfg.validate()?;
    let d = data.n_features();
    let k = data.n_classes();
    let mut dims = vec![d];
    dims.extend_from_slice(&cfg.hidden_layers);
    dims.push(k);

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut weights: Vec<Matrix> = Vec::new();
    let mut biases: Vec<Vec<f64>> = Vec::new();
    for l in 0..dims.len() - 1 {
        let (fan_in, fan_out) = (dims[l], dims[l + 1]);
        let limit = (6.0 / fan_in as f64).sqrt();
        let data: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        weights.push(Matrix::from_vec(fan_out, fan_in, data)?);
        biases.push(vec![0.0; fan_out]);
    }

    let mut vel_w: Vec<Matrix> = weights
        .iter()
        .map(|w| Matrix::zeros(w.n_rows(), w.n_cols()))
        .collect();
    let mut vel_b: Vec<Vec<f64>> = biases.iter().map(|b| vec![0.0; b.len()]).collect();

    let n = data.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut train_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let g = batch_grads(&weights, &biases, &data.x, &data.y, batch);
            epoch_loss += g.loss;
            let scale = 1.0 / batch.len() as f64;
            for l in 0..weights.len() {
                for o in 0..weights[l].n_rows() {
                    let (vrow, grow) = (vel_w[l].row_mut(o), g.dw[l].row(o));
                    for (v, &gv) in vrow.iter_mut().zip(grow) {
                        *v = cfg.momentum * *v - cfg.learning_rate * gv * scale;
                    }
                }
                for (v, &gv) in vel_b[l].iter_mut().zip(&g.db[l]) {
                    *v = cfg.momentum * *v - cfg.learning_rate * gv * scale;
                }
                for o in 0..weights[l].n_rows() {
                    let (wrow, vrow) = (weights[l].row_mut(o), vel_w[l].row(o));
                    for (w, &v) in wrow.iter_mut().zip(vrow) {
                        *w += v;
                    }
                }
                for (b, &v) in biases[l].iter_mut().zip(&vel_b[l]) {
                    *b += v;
                }
            }
        }
        let mean = epoch_loss / n as f64;
        // the loss clamp hides NaN probabilities, so check the weights too
        let finite = mean.is_finite()
            && weights
                .iter()
                .all(|w| w.data().iter().all(|v| v.is_finite()))
            && biases.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Divergence { epoch });
        }
        train_loss.push(mean);
    }

    Ok(MlpModel {
        weights,
        biases,
        n_classes: k,
        n_features: d,
        train_loss,
    })
}

impl MlpModel {
    /// Per-class probabilities (softmax of the output logits).
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features {
            return Err(Error::Shape {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let acts = forward(&self.weights, &self.biases, row);
        Ok(softmax(acts.last().expect("non-empty activations")))
    }

    pub fn predict(&self, row: &[f64]) -> Result<u32> {
        let p = self.predict_proba(row)?;
        let mut best = 0usize;
        for (k, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = k;
            }
        }
        Ok(best as u32)
    }
}
