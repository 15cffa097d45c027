//! Linear future-token probes over hidden states.
//!
//! A probe is a dense V x d linear map trained with plain mini-batch SGD on
//! softmax cross-entropy to predict the token generated n steps after the
//! one being predicted at the current position. Fixed learning rate, seeded
//! shuffles, zero initialization: identical seeds and hyperparameters give
//! bit-identical probes. Gradients accumulate in f32; losses reduce in f64.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::HiddenStateDataset;

#[derive(Debug)]
pub enum ProbeError {
    BadOffset { n: usize },
    TTooSmall { t: usize, n: usize },
    BadValFraction { value: f64 },
    BadHyper { what: &'static str },
    Diverged { epoch: usize, batch: usize },
    DimensionMismatch { what: &'static str },
    Io { path: String, source: std::io::Error },
    Malformed { path: String, detail: String },
}

impl fmt::Display for ProbeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeError::BadOffset { n } => write!(f, "offset n must be 1, 2, or 3, got {n}"),
            ProbeError::TTooSmall { t, n } => {
                write!(f, "T too small: {t} rows cannot pair with offset {n}")
            }
            ProbeError::BadValFraction { value } => {
                write!(f, "val_fraction must lie in (0,1), got {value}")
            }
            ProbeError::BadHyper { what } => write!(f, "hyperparameter out of range: {what}"),
            ProbeError::Diverged { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch {batch}")
            }
            ProbeError::DimensionMismatch { what } => write!(f, "dimension mismatch: {what}"),
            ProbeError::Io { path, source } => write!(f, "{path}: {source}"),
            ProbeError::Malformed { path, detail } => write!(f, "{path}: {detail}"),
        }
    }
}

impl std::error::Error for ProbeError {}

/// Feature/label pairs (row_t, token_{t+1+n}) with a seeded train/validation
/// split; both index lists are sorted ascending.
#[derive(Debug, Clone)]
pub struct ProbeDataset {
    pub hidden_dim: usize,
    pub vocab_size: usize,
    pub offset_n: usize,
    features: Vec<f32>,
    labels: Vec<u32>,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
}

impl ProbeDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature(&self, i: usize) -> &[f32] {
        &self.features[i * self.hidden_dim..(i + 1) * self.hidden_dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }
}

/// Pairs row t with the token at position t+1+n for t = 0..T-2-n, then
/// splits by a seeded shuffle.
pub fn build_probe_dataset(
    h: &HiddenStateDataset,
    n: usize,
    val_fraction: f64,
    split_seed: u64,
) -> Result<ProbeDataset, ProbeError> {
    if !(1..=3).contains(&n) {
        return Err(ProbeError::BadOffset { n });
    }
    let t = h.num_rows();
    if t <= n + 1 {
        return Err(ProbeError::TTooSmall { t, n });
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(ProbeError::BadValFraction { value: val_fraction });
    }

    let pairs = t - 1 - n;
    let d = h.hidden_dim;
    let mut features = Vec::with_capacity(pairs * d);
    let mut labels = Vec::with_capacity(pairs);
    for i in 0..pairs {
        features.extend_from_slice(h.row(i));
        labels.push(h.token_ids[i + 1 + n] as u32);
    }

    let mut order: Vec<usize> = (0..pairs).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
    order.shuffle(&mut rng);
    let val_count = ((pairs as f64 * val_fraction).round() as usize).clamp(1, pairs - 1);
    let mut val_idx: Vec<usize> = order[..val_count].to_vec();
    let mut train_idx: Vec<usize> = order[val_count..].to_vec();
    val_idx.sort_unstable();
    train_idx.sort_unstable();

    Ok(ProbeDataset {
        hidden_dim: d,
        vocab_size: h.vocab_size,
        offset_n: n,
        features,
        labels,
        train_idx,
        val_idx,
    })
}

/// Dense linear classifier: logits = W x + b.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    pub vocab_size: usize,
    pub hidden_dim: usize,
    pub trained_offset: usize,
    pub seed: u64,
    /// V x d, row-major.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl LinearProbe {
    pub fn zeros(vocab_size: usize, hidden_dim: usize, offset: usize, seed: u64) -> Self {
        LinearProbe {
            vocab_size,
            hidden_dim,
            trained_offset: offset,
            seed,
            weights: vec![0.0; vocab_size * hidden_dim],
            bias: vec![0.0; vocab_size],
        }
    }

    pub fn logits(&self, x: &[f32]) -> Vec<f32> {
        let d = self.hidden_dim;
        (0..self.vocab_size)
            .map(|c| {
                let row = &self.weights[c * d..(c + 1) * d];
                let mut acc = self.bias[c];
                for (w, v) in row.iter().zip(x.iter()) {
                    acc += w * v;
                }
                acc
            })
            .collect()
    }

    /// Argmax class; ties break toward the smallest token id.
    pub fn predict(&self, x: &[f32]) -> usize {
        let logits = self.logits(x);
        let mut best = 0usize;
        for (c, &l) in logits.iter().enumerate().skip(1) {
            if l > logits[best] {
                best = c;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f32,
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 10, lr: 0.1, batch: 32, seed: 17 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSummary {
    /// Mean training loss before the first update (ln V for a zero probe).
    pub initial_loss: f64,
    /// Mean training loss after the last epoch.
    pub final_loss: f64,
}

/// Mean softmax cross-entropy of the probe over the given examples, reduced
/// in f64.
pub fn mean_loss(probe: &LinearProbe, ds: &ProbeDataset, idx: &[usize]) -> f64 {
    let mut sum = 0.0f64;
    for &i in idx {
        let logits = probe.logits(ds.feature(i));
        sum += example_loss_f64(&logits, ds.label(i));
    }
    sum / idx.len() as f64
}

fn example_loss_f64(logits: &[f32], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let mut lse = 0.0f64;
    for &l in logits {
        lse += ((l as f64) - max).exp();
    }
    max + lse.ln() - logits[label] as f64
}

/// Mini-batch SGD on softmax cross-entropy with seeded per-epoch shuffling.
pub fn train_probe(
    ds: &ProbeDataset,
    cfg: &TrainConfig,
) -> Result<(LinearProbe, TrainSummary), ProbeError> {
    if cfg.epochs == 0 || cfg.batch == 0 {
        return Err(ProbeError::BadHyper { what: "epochs and batch must be positive" });
    }
    if !(cfg.lr > 0.0) {
        return Err(ProbeError::BadHyper { what: "lr must be positive" });
    }
    let v = ds.vocab_size;
    let d = ds.hidden_dim;
    let mut probe = LinearProbe::zeros(v, d, ds.offset_n, cfg.seed);
    let initial_loss = mean_loss(&probe, ds, &ds.train_idx);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order = ds.train_idx.clone();
    let mut grad_w = vec![0.0f32; v * d];
    let mut grad_b = vec![0.0f32; v];

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (batch_no, batch) in order.chunks(cfg.batch).enumerate() {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            grad_b.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0f64;

            for &i in batch {
                let x = ds.feature(i);
                let logits = probe.logits(x);
                batch_loss += example_loss_f64(&logits, ds.label(i));

                // softmax - onehot, in f32.
                let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
                let mut exps: Vec<f32> = logits.iter().map(|&l| (l - max).exp()).collect();
                let z: f32 = exps.iter().sum();
                for e in &mut exps {
                    *e /= z;
                }
                exps[ds.label(i)] -= 1.0;
                for (c, &e) in exps.iter().enumerate() {
                    grad_b[c] += e;
                    let row = &mut grad_w[c * d..(c + 1) * d];
                    for (g, &xv) in row.iter_mut().zip(x.iter()) {
                        *g += e * xv;
                    }
                }
            }

            if !batch_loss.is_finite() {
                return Err(ProbeError::Diverged { epoch, batch: batch_no });
            }
            let scale = cfg.lr / batch.len() as f32;
            for (w, g) in probe.weights.iter_mut().zip(grad_w.iter()) {
                *w -= scale * g;
            }
            for (b, g) in probe.bias.iter_mut().zip(grad_b.iter()) {
                *b -= scale * g;
            }
        }
    }

    let final_loss = mean_loss(&probe, ds, &ds.train_idx);
    Ok((probe, TrainSummary { initial_loss, final_loss }))
}

/// Top-1 accuracy over the validation split.
pub fn probe_accuracy(probe: &LinearProbe, ds: &ProbeDataset) -> Result<f64, ProbeError> {
    if probe.hidden_dim != ds.hidden_dim || probe.vocab_size != ds.vocab_size {
        return Err(ProbeError::DimensionMismatch { what: "probe vs dataset (V, d)" });
    }
    let hits = ds
        .val_idx
        .iter()
        .filter(|&&i| probe.predict(ds.feature(i)) == ds.label(i))
        .count();
    Ok(hits as f64 / ds.val_idx.len() as f64)
}

/// Compares the analytic cross-entropy gradient against central finite
/// differences on a seeded sample of at least `coords` coordinates,
/// everything evaluated in f64. Returns the maximum relative error.
pub fn gradient_check(
    ds: &ProbeDataset,
    probe: &LinearProbe,
    epsilon: f64,
    coords: usize,
    seed: u64,
) -> f64 {
    let v = probe.vocab_size;
    let d = probe.hidden_dim;
    let mut w64: Vec<f64> = probe.weights.iter().map(|&x| x as f64).collect();
    let mut b64: Vec<f64> = probe.bias.iter().map(|&x| x as f64).collect();
    let idx = &ds.train_idx;

    // Analytic gradient at the current point.
    let mut grad_w = vec![0.0f64; v * d];
    let mut grad_b = vec![0.0f64; v];
    for &i in idx {
        let x = ds.feature(i);
        let logits = logits_f64(&w64, &b64, v, d, x);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        for e in &mut exps {
            *e /= z;
        }
        exps[ds.label(i)] -= 1.0;
        for (c, &e) in exps.iter().enumerate() {
            grad_b[c] += e;
            for (j, &xv) in x.iter().enumerate() {
                grad_w[c * d + j] += e * xv as f64;
            }
        }
    }
    let scale = 1.0 / idx.len() as f64;
    grad_w.iter_mut().for_each(|g| *g *= scale);
    grad_b.iter_mut().for_each(|g| *g *= scale);

    let total = v * d + v;
    let mut picks: Vec<usize> = (0..total).collect();
    if total > coords {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        picks.shuffle(&mut rng);
        picks.truncate(coords);
    }

    fn set_coord(w: &mut [f64], b: &mut [f64], p: usize, value: f64) {
        if p < w.len() {
            w[p] = value;
        } else {
            b[p - w.len()] = value;
        }
    }

    let mut worst = 0.0f64;
    for &p in &picks {
        let analytic = if p < v * d { grad_w[p] } else { grad_b[p - v * d] };
        let orig = if p < v * d { w64[p] } else { b64[p - v * d] };
        set_coord(&mut w64, &mut b64, p, orig + epsilon);
        let up = mean_loss_f64(&w64, &b64, v, d, ds, idx);
        set_coord(&mut w64, &mut b64, p, orig - epsilon);
        let down = mean_loss_f64(&w64, &b64, v, d, ds, idx);
        set_coord(&mut w64, &mut b64, p, orig);
        let numeric = (up - down) / (2.0 * epsilon);
        let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

fn logits_f64(w: &[f64], b: &[f64], v: usize, d: usize, x: &[f32]) -> Vec<f64> {
    (0..v)
        .map(|c| {
            let mut acc = b[c];
            for (j, &xv) in x.iter().enumerate() {
                acc += w[c * d + j] * xv as f64;
            }
            acc
        })
        .collect()
}

fn mean_loss_f64(w: &[f64], b: &[f64], v: usize, d: usize, ds: &ProbeDataset, idx: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &i in idx {
        let logits = logits_f64(w, b, v, d, ds.feature(i));
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lse = 0.0;
        for &l in &logits {
            lse += (l - max).exp();
        }
        sum += max + lse.ln() - logits[ds.label(i)];
    }
    sum / idx.len() as f64
}

#[derive(Debug, Serialize, Deserialize)]
struct ProbeMeta {
    v: usize,
    d: usize,
    offset: usize,
    seed: u64,
    epochs: usize,
    lr: f32,
    batch: usize,
}

/// Saves a probe as a JSON sidecar plus raw little-endian f32 weights then
/// bias.
pub fn save_probe(
    probe: &LinearProbe,
    cfg: &TrainConfig,
    meta_path: &Path,
    weights_path: &Path,
) -> Result<(), ProbeError> {
    let meta = ProbeMeta {
        v: probe.vocab_size,
        d: probe.hidden_dim,
        offset: probe.trained_offset,
        seed: probe.seed,
        epochs: cfg.epochs,
        lr: cfg.lr,
        batch: cfg.batch,
    };
    let mut meta_out = serde_json::to_vec(&meta).expect("probe meta serializes");
    meta_out.push(b'\n');
    fs::write(meta_path, meta_out)
        .map_err(|e| ProbeError::Io { path: meta_path.display().to_string(), source: e })?;
    let file = fs::File::create(weights_path)
        .map_err(|e| ProbeError::Io { path: weights_path.display().to_string(), source: e })?;
    let mut w = std::io::BufWriter::new(file);
    for &x in probe.weights.iter().chain(probe.bias.iter()) {
        w.write_all(&x.to_le_bytes())
            .map_err(|e| ProbeError::Io { path: weights_path.display().to_string(), source: e })?;
    }
    w.flush().map_err(|e| ProbeError::Io { path: weights_path.display().to_string(), source: e })
}

pub fn load_probe(meta_path: &Path, weights_path: &Path) -> Result<LinearProbe, ProbeError> {
    let meta_text = fs::read_to_string(meta_path)
        .map_err(|e| ProbeError::Io { path: meta_path.display().to_string(), source: e })?;
    let meta: ProbeMeta = serde_json::from_str(&meta_text)
        .map_err(|e| ProbeError::Malformed { path: meta_path.display().to_string(), detail: e.to_string() })?;
    let mut bytes = Vec::new();
    fs::File::open(weights_path)
        .map_err(|e| ProbeError::Io { path: weights_path.display().to_string(), source: e })?
        .read_to_end(&mut bytes)
        .map_err(|e| ProbeError::Io { path: weights_path.display().to_string(), source: e })?;
    let expected = (meta.v * meta.d + meta.v) * 4;
    if bytes.len() != expected {
        return Err(ProbeError::Malformed {
            path: weights_path.display().to_string(),
            detail: format!("expected {expected} bytes, found {}", bytes.len()),
        });
    }
    let mut values = Vec::with_capacity(meta.v * meta.d + meta.v);
    for chunk in bytes.chunks_exact(4) {
        values.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
    }
    let bias = values.split_off(meta.v * meta.d);
    Ok(LinearProbe {
        vocab_size: meta.v,
        hidden_dim: meta.d,
        trained_offset: meta.offset,
        seed: meta.seed,
        weights: values,
        bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::HiddenStateDataset;

    fn tiny_hidden(t: usize, d: usize, v: usize) -> HiddenStateDataset {
        let rows: Vec<f32> = (0..t * d).map(|i| (i % 7) as f32 * 0.25 - 0.5).collect();
        let token_ids: Vec<i64> = (0..t).map(|i| (i % v) as i64).collect();
        HiddenStateDataset::new(d, 28, v, token_ids, rows).unwrap()
    }

    #[test]
    fn pair_index_arithmetic() {
        let h = tiny_hidden(5, 2, 5);
        let ds = build_probe_dataset(&h, 1, 0.25, 1).unwrap();
        assert_eq!(ds.len(), 3);
        // Pair t pairs row t with token t+2 for n=1.
        assert_eq!(ds.label(0), 2);
        assert_eq!(ds.label(1), 3);
        assert_eq!(ds.label(2), 4);
        assert_eq!(ds.feature(1), h.row(1));
        // Split covers and is disjoint.
        let mut all: Vec<usize> = ds.train_idx.iter().chain(ds.val_idx.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2]);
    }

    #[test]
    fn t_too_small() {
        let h = tiny_hidden(3, 2, 5);
        assert!(matches!(
            build_probe_dataset(&h, 3, 0.1, 1),
            Err(ProbeError::TTooSmall { t: 3, n: 3 })
        ));
    }

    #[test]
    fn bad_offset() {
        let h = tiny_hidden(20, 2, 5);
        assert!(matches!(build_probe_dataset(&h, 4, 0.1, 1), Err(ProbeError::BadOffset { n: 4 })));
    }

    #[test]
    fn zero_probe_loss_is_ln_v() {
        let h = tiny_hidden(64, 3, 7);
        let ds = build_probe_dataset(&h, 1, 0.2, 9).unwrap();
        let probe = LinearProbe::zeros(ds.vocab_size, ds.hidden_dim, 1, 0);
        let loss = mean_loss(&probe, &ds, &ds.train_idx);
        assert!((loss - (7.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn training_is_deterministic() {
        let h = tiny_hidden(100, 4, 6);
        let ds = build_probe_dataset(&h, 2, 0.2, 5).unwrap();
        let cfg = TrainConfig { epochs: 3, lr: 0.05, batch: 16, seed: 99 };
        let (p1, s1) = train_probe(&ds, &cfg).unwrap();
        let (p2, s2) = train_probe(&ds, &cfg).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(s1, s2);
        assert!(s1.final_loss <= s1.initial_loss);
    }

    #[test]
    fn accuracy_constant_predictor() {
        let d = 2;
        let v = 3;
        // Probe with a large bias toward class 0.
        let mut probe = LinearProbe::zeros(v, d, 1, 0);
        probe.bias[0] = 10.0;
        let rows: Vec<f32> = vec![0.0; 8 * d];
        let all_zero = HiddenStateDataset::new(d, 0, v, vec![0; 8], rows.clone()).unwrap();
        let ds0 = build_probe_dataset(&all_zero, 1, 0.5, 3).unwrap();
        assert_eq!(probe_accuracy(&probe, &ds0).unwrap(), 1.0);
        let all_one = HiddenStateDataset::new(d, 0, v, vec![1; 8], rows).unwrap();
        let ds1 = build_probe_dataset(&all_one, 1, 0.5, 3).unwrap();
        assert_eq!(probe_accuracy(&probe, &ds1).unwrap(), 0.0);
    }

    #[test]
    fn argmax_tie_breaks_to_smallest_id() {
        let probe = LinearProbe::zeros(4, 2, 1, 0);
        assert_eq!(probe.predict(&[1.0, -1.0]), 0);
    }

    #[test]
    fn gradient_epsilon_ordering() {
        let h = tiny_hidden(24, 3, 4);
        let ds = build_probe_dataset(&h, 1, 0.2, 2).unwrap();
        let cfg = TrainConfig { epochs: 1, lr: 0.1, batch: 8, seed: 3 };
        let (probe, _) = train_probe(&ds, &cfg).unwrap();
        let coarse = gradient_check(&ds, &probe, 1e-1, 120, 7);
        let fine = gradient_check(&ds, &probe, 1e-4, 120, 7);
        assert!(fine <= 1e-4, "fine-eps relative error {fine}");
        assert!(coarse > fine, "O(eps^2) truncation ordering violated");
    }

    #[test]
    fn zero_probe_bias_gradient_closed_form() {
        // For a zero probe on one example, d loss / d bias = softmax - onehot
        // = 1/V - [c == label]; the finite difference agrees tightly.
        let d = 2;
        let v = 4;
        let rows = vec![0.5f32, -0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let h = HiddenStateDataset::new(d, 0, v, vec![0, 0, 1, 0], rows).unwrap();
        let ds = build_probe_dataset(&h, 1, 0.5, 1).unwrap();
        let probe = LinearProbe::zeros(v, d, 1, 0);
        let err = gradient_check(&ds, &probe, 1e-4, v * d + v, 5);
        assert!(err <= 1e-6, "closed-form gradient mismatch: {err}");
    }

    #[test]
    fn save_load_roundtrip() {
        let h = tiny_hidden(50, 3, 5);
        let ds = build_probe_dataset(&h, 1, 0.2, 4).unwrap();
        let cfg = TrainConfig { epochs: 2, lr: 0.1, batch: 8, seed: 11 };
        let (probe, _) = train_probe(&ds, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let meta = dir.path().join("probe.meta.json");
        let weights = dir.path().join("probe.f32");
        save_probe(&probe, &cfg, &meta, &weights).unwrap();
        assert_eq!(load_probe(&meta, &weights).unwrap(), probe);
    }
}
