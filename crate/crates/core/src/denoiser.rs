//! Conditional estimator: a two-hidden-layer ReLU network with per-site
//! sigmoid outputs, trained with summed binary cross-entropy and Adam.
//!
//! The network sees only the noisy configuration. There is no timestep input.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::spin::SpinConfiguration;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs and
/// Bernoulli draws.
pub const PROB_CLAMP: f64 = 1e-7;

/// Anything that maps a noisy configuration to per-site `P(clean spin = +1)`.
pub trait Denoiser: Sync {
    fn n_sites(&self) -> usize;
    fn predict(&self, s_t: &SpinConfiguration) -> Result<Vec<f64>>;
}

/// A denoiser that ignores its input and returns fixed probabilities.
#[derive(Clone, Debug)]
pub struct ConstantDenoiser(pub Vec<f64>);

impl ConstantDenoiser {
    /// Deterministically predicts `target` (up to the clamp).
    pub fn pinned(target: &SpinConfiguration) -> Self {
        Self(
            target
                .spins()
                .iter()
                .map(|&s| if s > 0 { 1.0 } else { 0.0 })
                .collect(),
        )
    }
}

impl Denoiser for ConstantDenoiser {
    fn n_sites(&self) -> usize {
        self.0.len()
    }

    fn predict(&self, s_t: &SpinConfiguration) -> Result<Vec<f64>> {
        check_len(self.0.len(), s_t.len())?;
        Ok(self.0.clone())
    }
}

/// Lookup-table denoiser over all `2^N` inputs (small systems only).
#[derive(Clone, Debug)]
pub struct TableDenoiser {
    n: usize,
    table: Vec<Vec<f64>>,
}

impl TableDenoiser {
    pub fn new(n: usize, table: Vec<Vec<f64>>) -> Result<Self> {
        if table.len() != 1 << n || table.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument(
                "table must have 2^N rows of N entries".into(),
            ));
        }
        Ok(Self { n, table })
    }
}

impl Denoiser for TableDenoiser {
    fn n_sites(&self) -> usize {
        self.n
    }

    fn predict(&self, s_t: &SpinConfiguration) -> Result<Vec<f64>> {
        check_len(self.n, s_t.len())?;
        Ok(self.table[s_t.to_index()].clone())
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::SizeMismatch { expected, got });
    }
    Ok(())
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Summed binary cross-entropy with targets `y_i = (s_0,i + 1) / 2`.
pub fn bce_loss(p: &[f64], s0: &SpinConfiguration) -> Result<f64> {
    check_len(s0.len(), p.len())?;
    Ok(p.iter()
        .zip(s0.spins())
        .map(|(&pi, &si)| {
            let pi = clamp_prob(pi);
            if si > 0 {
                -pi.ln()
            } else {
                -(1.0 - pi).ln()
            }
        })
        .sum())
}

/// Draws `ŝ_0` with site `i` equal to +1 with probability `p_i`.
pub fn sample_s0_hat(p: &[f64], rng: &mut RandomStream) -> SpinConfiguration {
    let spins = p
        .iter()
        .map(|&pi| {
            if rng.uniform_open01() < clamp_prob(pi) {
                1
            } else {
                -1
            }
        })
        .collect();
    SpinConfiguration::new(spins).expect("±1 by construction")
}

/// Weights of the network, stored `in × out` so a batch forward is `X W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenoiserParameters {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

struct Activations {
    z1: Array2<f64>,
    a1: Array2<f64>,
    z2: Array2<f64>,
    a2: Array2<f64>,
    p: Array2<f64>,
}

impl DenoiserParameters {
    pub fn zeros(n: usize, width: usize) -> Self {
        Self {
            w1: Array2::zeros((n, width)),
            b1: Array1::zeros(width),
            w2: Array2::zeros((width, width)),
            b2: Array1::zeros(width),
            w3: Array2::zeros((width, n)),
            b3: Array1::zeros(n),
        }
    }

    /// Uniform `±1/sqrt(fan_in)` initialization for weights and biases.
    pub fn init(n: usize, width: usize, rng: &mut RandomStream) -> Self {
        let mut fill = |rows: usize, cols: usize, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| bound * rng.uniform_pm1())
        };
        let w1 = fill(n, width, n);
        let b1 = fill(1, width, n).into_shape_with_order(width).unwrap();
        let w2 = fill(width, width, width);
        let b2 = fill(1, width, width).into_shape_with_order(width).unwrap();
        let w3 = fill(width, n, width);
        let b3 = fill(1, n, width).into_shape_with_order(n).unwrap();
        Self {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.w1.nrows()
    }

    pub fn width(&self) -> usize {
        self.w1.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|x| x.is_finite()))
    }

    fn tensors(&self) -> [&[f64]; 6] {
        [
            self.w1.as_slice().unwrap(),
            self.b1.as_slice().unwrap(),
            self.w2.as_slice().unwrap(),
            self.b2.as_slice().unwrap(),
            self.w3.as_slice().unwrap(),
            self.b3.as_slice().unwrap(),
        ]
    }

    fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w1.as_slice_mut().unwrap(),
            self.b1.as_slice_mut().unwrap(),
            self.w2.as_slice_mut().unwrap(),
            self.b2.as_slice_mut().unwrap(),
            self.w3.as_slice_mut().unwrap(),
            self.b3.as_slice_mut().unwrap(),
        ]
    }

    fn forward_batch(&self, x: ArrayView2<f64>) -> Activations {
        let z1 = x.dot(&self.w1) + &self.b1;
        let a1 = z1.mapv(|v| v.max(0.0));
        let z2 = a1.dot(&self.w2) + &self.b2;
        let a2 = z2.mapv(|v| v.max(0.0));
        let z3 = a2.dot(&self.w3) + &self.b3;
        let p = z3.mapv(sigmoid);
        Activations { z1, a1, z2, a2, p }
    }

    /// Per-site probabilities for a batch of ±1-encoded rows.
    pub fn forward_rows(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward_batch(x).p
    }

    /// Per-site probabilities for one configuration; every output is in (0, 1).
    pub fn forward(&self, s_t: &SpinConfiguration) -> Result<Vec<f64>> {
        check_len(self.n_sites(), s_t.len())?;
        let x = Array2::from_shape_vec((1, s_t.len()), s_t.to_f64()).unwrap();
        Ok(self.forward_batch(x.view()).p.into_raw_vec_and_offset().0)
    }

    /// Mean per-row summed BCE and its gradient for a batch.
    pub fn loss_and_grad(
        &self,
        x: ArrayView2<f64>,
        y: ArrayView2<f64>,
    ) -> (f64, DenoiserParameters) {
        let b = x.nrows() as f64;
        let act = self.forward_batch(x);
        let loss = batch_bce(&act.p, y) / b;

        // dL/dz3 = (p - y) / B
        let mut dz3 = &act.p - &y;
        dz3.mapv_inplace(|v| v / b);
        let w3 = act.a2.t().dot(&dz3);
        let b3 = dz3.sum_axis(Axis(0));
        let mut dz2 = dz3.dot(&self.w3.t());
        Zip::from(&mut dz2).and(&act.z2).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let w2 = act.a1.t().dot(&dz2);
        let b2 = dz2.sum_axis(Axis(0));
        let mut dz1 = dz2.dot(&self.w2.t());
        Zip::from(&mut dz1).and(&act.z1).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let w1 = x.t().dot(&dz1);
        let b1 = dz1.sum_axis(Axis(0));
        (
            loss,
            DenoiserParameters {
                w1,
                b1,
                w2,
                b2,
                w3,
                b3,
            },
        )
    }

    /// Mean per-row summed BCE without gradients.
    pub fn batch_loss(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> f64 {
        let p = self.forward_rows(x);
        batch_bce(&p, y) / x.nrows() as f64
    }

    const MAGIC: [u8; 8] = *b"CDNNCKPT";
    const VERSION: u32 = 1;

    /// Checkpoint: magic, version, N, width (u32 LE) then f64 LE blocks
    /// `w1 b1 w2 b2 w3 b3`, each row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&Self::MAGIC);
        out.extend_from_slice(&Self::VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_sites() as u32).to_le_bytes());
        out.extend_from_slice(&(self.width() as u32).to_le_bytes());
        for t in self.tensors() {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("checkpoint: {m}"));
        if bytes.len() < 20 || bytes[..8] != Self::MAGIC {
            return Err(bad("bad magic"));
        }
        let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        if word(8) != Self::VERSION {
            return Err(bad("unsupported version"));
        }
        let (n, width) = (word(12) as usize, word(16) as usize);
        let mut params = Self::zeros(n, width);
        let expected: usize = params.tensors().iter().map(|t| t.len()).sum::<usize>() * 8 + 20;
        if bytes.len() != expected {
            return Err(bad(&format!(
                "expected {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let mut off = 20;
        for t in params.tensors_mut() {
            for v in t.iter_mut() {
                *v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
                off += 8;
            }
        }
        if !params.is_finite() {
            return Err(bad("non-finite weights"));
        }
        Ok(params)
    }
}

fn batch_bce(p: &Array2<f64>, y: ArrayView2<f64>) -> f64 {
    let mut total = 0.0;
    Zip::from(p).and(&y).for_each(|&pi, &yi| {
        let pi = clamp_prob(pi);
        total -= yi * pi.ln() + (1.0 - yi) * (1.0 - pi).ln();
    });
    total
}

impl Denoiser for DenoiserParameters {
    fn n_sites(&self) -> usize {
        self.w1.nrows()
    }

    fn predict(&self, s_t: &SpinConfiguration) -> Result<Vec<f64>> {
        self.forward(s_t)
    }
}

/// A noisy configuration paired with the clean one it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub noisy: SpinConfiguration,
    pub clean: SpinConfiguration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub early_stop_patience: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Fraction of pairs used for training; the rest validate.
    pub split: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-6,
            batch_size: 512,
            max_epochs: 4500,
            early_stop_patience: 180,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            split: 0.8,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate >= 0.0
            && self.batch_size > 0
            && self.max_epochs > 0
            && self.early_stop_patience > 0
            && (0.0..1.0).contains(&self.adam_beta1)
            && (0.0..1.0).contains(&self.adam_beta2)
            && self.adam_eps > 0.0
            && self.split > 0.0
            && self.split < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training config: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_bce: f64,
    pub val_bce: f64,
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub params: DenoiserParameters,
    pub curve: Vec<EpochLoss>,
    pub best_epoch: usize,
}

impl TrainingOutcome {
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("epoch,train_bce,val_bce\n");
        for e in &self.curve {
            s.push_str(&format!("{},{:?},{:?}\n", e.epoch, e.train_bce, e.val_bce));
        }
        s
    }
}

struct Adam {
    m: DenoiserParameters,
    v: DenoiserParameters,
    step: i32,
}

impl Adam {
    fn new(n: usize, width: usize) -> Self {
        Self {
            m: DenoiserParameters::zeros(n, width),
            v: DenoiserParameters::zeros(n, width),
            step: 0,
        }
    }

    fn update(
        &mut self,
        params: &mut DenoiserParameters,
        grad: &DenoiserParameters,
        cfg: &TrainingConfig,
    ) {
        self.step += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let lr = cfg.learning_rate;
        let eps = cfg.adam_eps;
        let ps = params.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, m), v), g) in ps.into_iter().zip(ms).zip(vs).zip(grad.tensors()) {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let mhat = m[k] / c1;
                let vhat = v[k] / c2;
                p[k] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

fn gather(pairs: &[TrainingPair], idx: &[usize], n: usize) -> (Array2<f64>, Array2<f64>) {
    let mut x = Array2::zeros((idx.len(), n));
    let mut y = Array2::zeros((idx.len(), n));
    for (r, &k) in idx.iter().enumerate() {
        let pair = &pairs[k];
        for (c, (&a, &b)) in pair
            .noisy
            .spins()
            .iter()
            .zip(pair.clean.spins())
            .enumerate()
        {
            x[[r, c]] = a as f64;
            y[[r, c]] = if b > 0 { 1.0 } else { 0.0 };
        }
    }
    (x, y)
}

fn mean_loss(
    params: &DenoiserParameters,
    pairs: &[TrainingPair],
    idx: &[usize],
    chunk: usize,
) -> f64 {
    let n = params.n_sites();
    let mut total = 0.0;
    for c in idx.chunks(chunk) {
        let (x, y) = gather(pairs, c, n);
        total += params.batch_loss(x.view(), y.view()) * c.len() as f64;
    }
    total / idx.len() as f64
}

/// Mini-batch Adam on summed BCE with an 80/20 style split and early stopping.
///
/// The split uses `rng`'s substream `[0]`, initialization `[1]` and epoch `e`'s
/// shuffle `[2, e]`, so results depend only on the stream key.
pub fn train(
    pairs: &[TrainingPair],
    width: usize,
    config: &TrainingConfig,
    rng: &RandomStream,
) -> Result<TrainingOutcome> {
    config.validate()?;
    let first = pairs
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty training set".into()))?;
    let n = first.clean.len();
    if let Some(bad) = pairs
        .iter()
        .find(|p| p.noisy.len() != n || p.clean.len() != n)
    {
        return Err(Error::SizeMismatch {
            expected: n,
            got: bad.noisy.len().max(bad.clean.len()),
        });
    }
    if width == 0 {
        return Err(Error::InvalidArgument("hidden width must be >= 1".into()));
    }

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    rng.substream(&[0]).shuffle(&mut order);
    let n_train = ((pairs.len() as f64 * config.split).round() as usize).clamp(1, pairs.len());
    let (train_idx, val_idx) = order.split_at(n_train);
    let mut train_idx = train_idx.to_vec();
    // a single pair cannot be split; validate on the training set
    let val_idx: Vec<usize> = if val_idx.is_empty() {
        train_idx.clone()
    } else {
        val_idx.to_vec()
    };

    let mut params = DenoiserParameters::init(n, width, &mut rng.substream(&[1]));
    let mut adam = Adam::new(n, width);
    let mut best = params.clone();
    let mut best_val = mean_loss(&params, pairs, &val_idx, config.batch_size);
    let mut best_epoch = 0;
    let mut curve = Vec::new();

    for epoch in 1..=config.max_epochs {
        rng.substream(&[2, epoch as u64]).shuffle(&mut train_idx);
        let mut train_total = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            let (x, y) = gather(pairs, batch, n);
            let (loss, grad) = params.loss_and_grad(x.view(), y.view());
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("non-finite training loss {loss}"),
                });
            }
            train_total += loss * batch.len() as f64;
            adam.update(&mut params, &grad, config);
        }
        let train_bce = train_total / train_idx.len() as f64;
        let val_bce = mean_loss(&params, pairs, &val_idx, config.batch_size);
        if !val_bce.is_finite() || !params.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: format!("validation loss {val_bce}"),
            });
        }
        curve.push(EpochLoss {
            epoch,
            train_bce,
            val_bce,
        });
        if val_bce < best_val {
            best_val = val_bce;
            best = params.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= config.early_stop_patience {
            break;
        }
    }
    Ok(TrainingOutcome {
        params: best,
        curve,
        best_epoch,
    })
}
