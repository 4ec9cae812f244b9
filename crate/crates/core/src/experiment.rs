//! Width-vs-samples scaling harness: pre-train `f`, redraw `N` labels,
//! fit an additive three-layer ReLU network `g` on the residual by gradient
//! descent, and search for the smallest width that reaches the loss
//! threshold.
//!
//! Every random draw comes from a ChaCha stream derived from the master seed
//! and the cell coordinates, so runs are bit-reproducible and cells can be
//! evaluated in any order.

use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builders3::{build_grid, ceil_sqrt, BuildOptions};
use crate::error::{FtcError, Result};
use crate::instance::{Dataset, FineTuneInstance};
use crate::network::{Layer, Network};
use crate::pwl::Activation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Heavy-ball momentum.
    Momentum,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hidden layer widths; ReLU throughout, linear output.
    pub hidden: Vec<usize>,
    pub optimizer: Optimizer,
    /// Peak step size, decayed to zero along a cosine.
    pub step_size: f64,
    /// Momentum coefficient (first-moment decay for Adam).
    pub momentum: f64,
    /// 0 means full batch.
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Stop as soon as the loss is at or below this value; 0 disables.
    pub stop_below: f64,
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(FtcError::InvalidRange("step size must be positive and momentum in [0, 1)".into()));
        }
        if self.hidden.contains(&0) {
            return Err(FtcError::InvalidRange("hidden widths must be positive".into()));
        }
        Ok(())
    }

    /// Wide one-hidden-layer network used as the pre-trained model.
    pub fn pretrain_default() -> Self {
        Self {
            hidden: vec![256],
            optimizer: Optimizer::Adam,
            step_size: 1e-2,
            momentum: 0.9,
            batch_size: 0,
            epochs: 4000,
            seed: 0,
            stop_below: 1e-6,
        }
    }

    /// Settings for the additive network; `hidden` is set per width.
    pub fn finetune_default() -> Self {
        Self {
            hidden: vec![],
            optimizer: Optimizer::Adam,
            step_size: 1e-2,
            momentum: 0.9,
            batch_size: 0,
            epochs: 3000,
            seed: 0,
            stop_below: 0.0,
        }
    }
}

/// Fully connected ReLU network with a scalar linear output, in a flat
/// layout suited to batched gradient steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Input width, hidden widths, then 1.
    pub dims: Vec<usize>,
    /// Row-major `out × in` per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn zeros(input: usize, hidden: &[usize]) -> Self {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let weights = dims.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect();
        let biases = dims[1..].iter().map(|&w| vec![0.0; w]).collect();
        Self { dims, weights, biases }
    }

    /// He-normal hidden layers; the output layer is He-normal too, or zero
    /// when `zero_output` is set (the network then starts as `g ≡ 0`).
    pub fn init(input: usize, hidden: &[usize], zero_output: bool, rng: &mut ChaCha8Rng) -> Self {
        let mut net = Self::zeros(input, hidden);
        let last = net.weights.len() - 1;
        for (l, w) in net.weights.iter_mut().enumerate() {
            if l == last && zero_output {
                continue;
            }
            let fan_in = net.dims[l] as f64;
            let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive std");
            for v in w.iter_mut() {
                *v = normal.sample(rng);
            }
        }
        net
    }

    pub fn hidden(&self) -> &[usize] {
        &self.dims[1..self.dims.len() - 1]
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let last = l + 1 == self.weights.len();
            a = (0..fan_out)
                .map(|j| {
                    let z = b[j] + w[j * fan_in..(j + 1) * fan_in].iter().zip(&a).map(|(p, q)| p * q).sum::<f64>();
                    if last { z } else { z.max(0.0) }
                })
                .collect();
        }
        a[0]
    }

    /// Mean squared error `(1/B) Σ (net(x) − y)²` over the given rows.
    pub fn mse(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        if xs.is_empty() {
            return 0.0;
        }
        xs.iter().zip(ys).map(|(x, y)| (self.forward(x) - y).powi(2)).sum::<f64>() / xs.len() as f64
    }

    /// Loss and gradients (same layout as the parameters) on a batch.
    fn loss_and_grad(&self, xs: &[&[f64]], ys: &[f64], grads: &mut Grads) -> f64 {
        let b = xs.len();
        let layers = self.weights.len();
        grads.clear();
        // acts[l] holds the batch input to layer l, row-major b × dims[l].
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
        acts.push(xs.iter().flat_map(|x| x.iter().copied()).collect());
        for l in 0..layers {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let w = &self.weights[l];
            let input = &acts[l];
            let mut out = vec![0.0; b * fan_out];
            for i in 0..b {
                let a = &input[i * fan_in..(i + 1) * fan_in];
                for j in 0..fan_out {
                    let z = self.biases[l][j] + w[j * fan_in..(j + 1) * fan_in].iter().zip(a).map(|(p, q)| p * q).sum::<f64>();
                    out[i * fan_out + j] = if l + 1 == layers { z } else { z.max(0.0) };
                }
            }
            acts.push(out);
        }
        let mut loss = 0.0;
        let mut delta: Vec<f64> = acts[layers]
            .iter()
            .zip(ys)
            .map(|(o, y)| {
                loss += (o - y).powi(2);
                2.0 * (o - y) / b as f64
            })
            .collect();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let input = &acts[l];
            let (gw, gb) = (&mut grads.weights[l], &mut grads.biases[l]);
            for i in 0..b {
                let a = &input[i * fan_in..(i + 1) * fan_in];
                for j in 0..fan_out {
                    let dj = delta[i * fan_out + j];
                    if dj == 0.0 {
                        continue;
                    }
                    gb[j] += dj;
                    for (g, ak) in gw[j * fan_in..(j + 1) * fan_in].iter_mut().zip(a) {
                        *g += dj * ak;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.weights[l];
            let mut prev = vec![0.0; b * fan_in];
            for i in 0..b {
                for j in 0..fan_out {
                    let dj = delta[i * fan_out + j];
                    if dj == 0.0 {
                        continue;
                    }
                    for (p, wk) in prev[i * fan_in..(i + 1) * fan_in].iter_mut().zip(&w[j * fan_in..(j + 1) * fan_in]) {
                        *p += dj * wk;
                    }
                }
                // ReLU derivative: the stored activation is positive exactly
                // where the unit is active.
                for (p, a) in prev[i * fan_in..(i + 1) * fan_in].iter_mut().zip(&input[i * fan_in..(i + 1) * fan_in]) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        loss / b as f64
    }

    pub fn to_network(&self) -> Network<f64> {
        let last = self.weights.len() - 1;
        let layers = (0..last)
            .map(|l| {
                let fan_in = self.dims[l];
                let mut layer = Layer::empty();
                for j in 0..self.dims[l + 1] {
                    layer.push(self.weights[l][j * fan_in..(j + 1) * fan_in].to_vec(), self.biases[l][j], Activation::Relu);
                }
                layer
            })
            .collect();
        Network {
            input_dim: self.dims[0],
            layers,
            output_weights: self.weights[last].clone(),
            output_bias: self.biases[last][0],
        }
    }

    /// Embeds a pure-ReLU network into this architecture, padding every
    /// layer with inert units. Fails if some layer does not fit.
    pub fn embed(network: &Network<f64>, hidden: &[usize]) -> Result<Self> {
        if network.layers.len() != hidden.len() || !network.is_pure_relu() {
            return Err(FtcError::InvalidNetwork("depth or activation mismatch".into()));
        }
        let mut net = Self::zeros(network.input_dim, hidden);
        for (l, layer) in network.layers.iter().enumerate() {
            if layer.width() > hidden[l] {
                return Err(FtcError::InvalidNetwork(format!("layer {} needs {} units, has {}", l + 1, layer.width(), hidden[l])));
            }
            let fan_in = net.dims[l];
            for (j, (row, b)) in layer.weights.iter().zip(&layer.biases).enumerate() {
                net.weights[l][j * fan_in..j * fan_in + row.len()].copy_from_slice(row);
                net.biases[l][j] = *b;
            }
        }
        let last = net.weights.len() - 1;
        net.weights[last][..network.output_weights.len()].copy_from_slice(&network.output_weights);
        net.biases[last][0] = network.output_bias;
        Ok(net)
    }

    /// Order-sensitive fingerprint of every parameter bit pattern.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.dims.hash(&mut h);
        for v in self.weights.iter().chain(&self.biases).flatten() {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

struct Grads {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Grads {
    fn like(net: &Mlp) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.fill(0.0);
        }
    }

    fn slices(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.weights.iter().chain(&self.biases)
    }
}

fn params_mut(net: &mut Mlp) -> impl Iterator<Item = &mut Vec<f64>> {
    net.weights.iter_mut().chain(net.biases.iter_mut())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Loss of the returned (best seen) parameters on the full data.
    pub loss: f64,
    pub initial_loss: f64,
    pub epochs_run: usize,
    /// Full-data loss after every epoch.
    pub trajectory: Vec<f64>,
}

/// Trains `net` in place on `(xs, ys)` and leaves it at the parameters with
/// the lowest full-data loss seen (the initial ones included).
pub fn train(net: &mut Mlp, xs: &[Vec<f64>], ys: &[f64], cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<TrainOutcome> {
    cfg.validate()?;
    let k = xs.len();
    let initial_loss = net.mse(xs, ys);
    let mut best = (initial_loss, net.clone());
    let mut trajectory = Vec::with_capacity(cfg.epochs);
    let mut grads = Grads::like(net);
    let mut m1 = Grads::like(net);
    let mut m2 = Grads::like(net);
    let batch = if cfg.batch_size == 0 { k } else { cfg.batch_size.min(k) };
    let steps_per_epoch = k.div_ceil(batch.max(1)).max(1);
    let total = (cfg.epochs * steps_per_epoch).max(1);
    let mut order: Vec<usize> = (0..k).collect();
    let mut step = 0usize;
    let mut epochs_run = 0;
    let stop = |loss: f64| cfg.stop_below > 0.0 && loss <= cfg.stop_below;
    if k == 0 || stop(initial_loss) {
        return Ok(TrainOutcome { loss: initial_loss, initial_loss, epochs_run, trajectory });
    }
    for _ in 0..cfg.epochs {
        if batch < k {
            for i in (1..k).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
        }
        for chunk in order.chunks(batch) {
            let bx: Vec<&[f64]> = chunk.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<f64> = chunk.iter().map(|&i| ys[i]).collect();
            net.loss_and_grad(&bx, &by, &mut grads);
            let lr = cfg.step_size * 0.5 * (1.0 + (std::f64::consts::PI * step as f64 / total as f64).cos());
            step += 1;
            let t = step as i32;
            let it = params_mut(net).zip(grads.slices()).zip(m1.weights.iter_mut().chain(m1.biases.iter_mut()));
            match cfg.optimizer {
                Optimizer::Momentum => {
                    for ((p, g), v) in it {
                        for ((pi, gi), vi) in p.iter_mut().zip(g).zip(v.iter_mut()) {
                            *vi = cfg.momentum * *vi + gi;
                            *pi -= lr * *vi;
                        }
                    }
                }
                Optimizer::Adam => {
                    const BETA2: f64 = 0.999;
                    let c1 = 1.0 - cfg.momentum.powi(t);
                    let c2 = 1.0 - BETA2.powi(t);
                    for (((p, g), v), s) in it.zip(m2.weights.iter_mut().chain(m2.biases.iter_mut())) {
                        for (((pi, gi), vi), si) in p.iter_mut().zip(g).zip(v.iter_mut()).zip(s.iter_mut()) {
                            *vi = cfg.momentum * *vi + (1.0 - cfg.momentum) * gi;
                            *si = BETA2 * *si + (1.0 - BETA2) * gi * gi;
                            *pi -= lr * (*vi / c1) / ((*si / c2).sqrt() + 1e-8);
                        }
                    }
                }
            }
        }
        epochs_run += 1;
        let loss = net.mse(xs, ys);
        trajectory.push(loss);
        if !loss.is_finite() {
            break;
        }
        if loss < best.0 {
            best = (loss, net.clone());
        }
        if stop(loss) {
            break;
        }
    }
    *net = best.1;
    Ok(TrainOutcome { loss: best.0, initial_loss, epochs_run, trajectory })
}

/// Per-cell random stream: same master seed and coordinates, same draws.
pub fn cell_rng(master: u64, coords: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    let mut h = DefaultHasher::new();
    coords.hash(&mut h);
    rng.set_stream(h.finish());
    rng
}

const STREAM_PRETRAIN: u64 = 1;
const STREAM_PERTURB: u64 = 2;
const STREAM_FINETUNE: u64 = 3;

/// Pre-trains `f` on the dataset. Fails with `InsufficientData` when the
/// final loss stays above `fit_threshold`.
pub fn train_mlp(data: &Dataset, cfg: &TrainConfig, fit_threshold: f64) -> Result<(Mlp, TrainOutcome)> {
    let d = data.points.first().map_or(0, Vec::len);
    let mut rng = cell_rng(cfg.seed, &[STREAM_PRETRAIN]);
    let mut f = Mlp::init(d, &cfg.hidden, false, &mut rng);
    let out = train(&mut f, &data.points, &data.labels, cfg, &mut rng)?;
    if !(out.loss <= fit_threshold) {
        return Err(FtcError::InsufficientData(format!(
            "pre-training stalled at loss {:.3e} above {fit_threshold:.1e}",
            out.loss
        )));
    }
    Ok((f, out))
}

/// Redraws `N` labels uniformly in `[−1, 1]`; returns the new dataset and
/// the tuned indices (1-based, ascending).
pub fn perturb_labels(data: &Dataset, n: usize, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    let k = data.labels.len();
    if n > k {
        return Err(FtcError::InvalidRange(format!("N = {n} exceeds K = {k}")));
    }
    let mut rng = cell_rng(seed, &[STREAM_PERTURB, n as u64]);
    let mut idx: Vec<usize> = (0..k).collect();
    for i in 0..n {
        idx.swap(i, rng.random_range(i..k));
    }
    let mut tuned: Vec<usize> = idx[..n].to_vec();
    tuned.sort_unstable();
    let unif = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    let mut out = data.clone();
    for &i in &tuned {
        out.labels[i] = unif.sample(&mut rng);
    }
    Ok((out, tuned.iter().map(|i| i + 1).collect()))
}

/// Hidden widths `(⌈m/2⌉, ⌊m/2⌋)` of the additive network.
pub fn split_width(m: usize) -> [usize; 2] {
    [m.div_ceil(2), m / 2]
}

/// Smallest total width the grid build fits on `K` samples.
pub fn constructive_width(k: usize) -> usize {
    4 * ceil_sqrt(k)
}

/// Grid build on the residuals of all `K` samples, scaled into `[−1, 1]`,
/// expanded to ReLUs and padded to widths `(⌈m/2⌉, ⌊m/2⌋)`.
pub fn constructive_init(points: &[Vec<f64>], residual: &[f64], m: usize, seed: u64) -> Result<Mlp> {
    let k = points.len();
    let scale = residual.iter().fold(1.0f64, |s, r| s.max(r.abs()));
    let inst = FineTuneInstance::new(points.to_vec(), residual.iter().map(|r| r / scale).collect(), (1..=k).collect())?;
    let (net, _) = build_grid::<f64>(&inst, &BuildOptions { seed, ..Default::default() })?;
    let mut relu = net.to_pure_relu(points)?;
    for w in &mut relu.output_weights {
        *w *= scale;
    }
    relu.output_bias *= scale;
    Mlp::embed(&relu, &split_width(m))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FineTuneOutcome {
    pub loss_ft: f64,
    pub initial_loss: f64,
    pub epochs_run: usize,
    pub constructive: bool,
}

/// Fits `g` with widths `(⌈m/2⌉, ⌊m/2⌋)` so that `f + g` matches the new
/// labels; `f` is only read. With `constructive`, `g` starts from the grid
/// build when `m` is large enough.
pub fn finetune_additive(
    f: &Mlp,
    data: &Dataset,
    m: usize,
    cfg: &TrainConfig,
    constructive: bool,
) -> Result<(Mlp, FineTuneOutcome)> {
    if m < 2 {
        return Err(FtcError::InvalidRange("the additive network needs m ≥ 2".into()));
    }
    let residual: Vec<f64> = data.points.iter().zip(&data.labels).map(|(x, y)| y - f.forward(x)).collect();
    let d = data.points.first().map_or(0, Vec::len);
    let hidden = split_width(m);
    let mut rng = cell_rng(cfg.seed, &[STREAM_FINETUNE, m as u64]);
    let use_build = constructive && m >= constructive_width(data.points.len());
    let mut g = if use_build {
        constructive_init(&data.points, &residual, m, cfg.seed)?
    } else {
        Mlp::init(d, &hidden, true, &mut rng)
    };
    let out = train(&mut g, &data.points, &residual, cfg, &mut rng)?;
    Ok((g, FineTuneOutcome { loss_ft: out.loss, initial_loss: out.initial_loss, epochs_run: out.epochs_run, constructive: use_build }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    pub n_list: Vec<usize>,
    pub m_min: usize,
    pub m_max: usize,
    /// Training runs per (N, m) cell; the best loss counts.
    pub seeds_per_cell: usize,
    pub threshold: f64,
    /// Pre-training must reach this loss.
    pub fit_threshold: f64,
    pub master_seed: u64,
    pub pretrain: TrainConfig,
    pub finetune: TrainConfig,
    pub constructive_init: bool,
}

impl ExperimentConfig {
    /// Desk scale: `K = 200`, `d = 10`.
    pub fn desk() -> Self {
        Self {
            k: 200,
            d: 10,
            n_list: vec![2, 4, 8, 16, 32, 64],
            m_min: 2,
            m_max: 128,
            seeds_per_cell: 3,
            threshold: 0.04,
            fit_threshold: 1e-3,
            master_seed: 0,
            pretrain: TrainConfig::pretrain_default(),
            finetune: TrainConfig::finetune_default(),
            constructive_init: false,
        }
    }

    /// The larger setting with `K = 1000`.
    pub fn full_scale() -> Self {
        Self {
            k: 1000,
            n_list: vec![2, 4, 8, 16, 32, 64, 128, 256],
            m_max: 256,
            pretrain: TrainConfig { hidden: vec![1024], ..TrainConfig::pretrain_default() },
            ..Self::desk()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk()),
            "full" => Some(Self::full_scale()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m_min < 2 || self.m_max < self.m_min || self.seeds_per_cell == 0 {
            return Err(FtcError::InvalidRange("need 2 ≤ m_min ≤ m_max and at least one seed per cell".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n > self.k) {
            return Err(FtcError::InvalidRange(format!("N = {n} exceeds K = {}", self.k)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(rename = "N")]
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub loss_ft: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthSearch {
    #[serde(rename = "N")]
    pub n: usize,
    /// `None` when no width up to `m_max` passes.
    pub min_width: Option<usize>,
    pub cells: Vec<Cell>,
}

/// Smallest `m` in `[m_min, m_max]` whose best-of-seeds loss is at most the
/// threshold: doubling from `m_min`, then bisection.
pub fn min_width_search(f: &Mlp, data: &Dataset, n: usize, cfg: &ExperimentConfig) -> Result<WidthSearch> {
    let mut cells = Vec::new();
    let mut memo: BTreeMap<usize, bool> = BTreeMap::new();
    let mut probe = |m: usize, cells: &mut Vec<Cell>| -> Result<bool> {
        if let Some(&p) = memo.get(&m) {
            return Ok(p);
        }
        let mut passed = false;
        for rep in 0..cfg.seeds_per_cell as u64 {
            let seed = cell_seed(cfg.master_seed, n, rep);
            let tcfg = TrainConfig {
                hidden: split_width(m).to_vec(),
                seed,
                stop_below: cfg.threshold,
                ..cfg.finetune.clone()
            };
            let (_, out) = finetune_additive(f, data, m, &tcfg, cfg.constructive_init)?;
            let ok = out.loss_ft <= cfg.threshold;
            cells.push(Cell { n, m, seed, loss_ft: out.loss_ft, passed: ok });
            if ok {
                passed = true;
                break;
            }
        }
        memo.insert(m, passed);
        Ok(passed)
    };
    let mut fail = None;
    let mut m = cfg.m_min;
    let pass = loop {
        if probe(m, &mut cells)? {
            break Some(m);
        }
        fail = Some(m);
        if m == cfg.m_max {
            break None;
        }
        m = (2 * m).min(cfg.m_max);
    };
    let Some(mut hi) = pass else {
        return Ok(WidthSearch { n, min_width: None, cells });
    };
    if let Some(mut lo) = fail {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if probe(mid, &mut cells)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    Ok(WidthSearch { n, min_width: Some(hi), cells })
}

fn cell_seed(master: u64, n: usize, rep: u64) -> u64 {
    cell_rng(master, &[STREAM_FINETUNE, n as u64, rep]).random()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Least-squares line through `(log N, log m)`.
pub fn scaling_fit(pairs: &[(usize, usize)]) -> Result<ScalingFit> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(n, m)| *n > 0 && *m > 0)
        .map(|&(n, m)| ((n as f64).ln(), (m as f64).ln()))
        .collect();
    let mut distinct: Vec<usize> = pairs.iter().filter(|(n, m)| *n > 0 && *m > 0).map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(FtcError::InsufficientData(format!("{} distinct N values, need 4", distinct.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - exponent * p.0).powi(2)).sum();
    let stderr = if pts.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(ScalingFit { exponent, intercept, stderr, points: pts.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub config: ExperimentConfig,
    pub pretrain_loss: f64,
    /// Fingerprint of `f` before and after all fine-tuning runs.
    pub f_fingerprint: (u64, u64),
    pub searches: Vec<WidthSearch>,
    pub fit: Option<ScalingFit>,
    pub fit_error: Option<String>,
}

impl ScalingResult {
    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.searches.iter().flat_map(|s| &s.cells)
    }

    pub fn min_widths(&self) -> Vec<(usize, Option<usize>)> {
        self.searches.iter().map(|s| (s.n, s.min_width)).collect()
    }
}

/// Whole pipeline: data, pre-training, one width search per `N` (in
/// parallel), and the log-log fit.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ScalingResult> {
    cfg.validate()?;
    let data = crate::instance::gen_synthetic(cfg.k, cfg.d, cfg.master_seed);
    let pre = TrainConfig { seed: cfg.master_seed, ..cfg.pretrain.clone() };
    let (f, out) = train_mlp(&data, &pre, cfg.fit_threshold)?;
    let before = f.fingerprint();
    let searches: Vec<WidthSearch> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let (shifted, _) = perturb_labels(&data, n, cfg.master_seed)?;
            min_width_search(&f, &shifted, n, cfg)
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = searches.iter().filter_map(|s| s.min_width.map(|m| (s.n, m))).collect();
    let (fit, fit_error) = match scaling_fit(&pairs) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ScalingResult {
        config: cfg.clone(),
        pretrain_loss: out.loss,
        f_fingerprint: (before, f.fingerprint()),
        searches,
        fit,
        fit_error,
    })
}
