//! Two-layer constructions: the ReLU chain interpolator and the point-removal
//! builder on top of it.

use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::instance::{find_direction, Direction, FineTuneInstance};
use crate::network::{Layer, Network};
use crate::partition::{reduced_index_set, removal_count, Block};
use crate::pwl::Activation;
use crate::scalar::Scalar;

/// Knots `(w_i, z_i)` with strictly increasing abscissae.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec<S: Scalar> {
    knots: Vec<(S, S)>,
}

impl<S: Scalar> ChainSpec<S> {
    pub fn new(knots: Vec<(S, S)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(FtcError::InvalidRange("a chain needs at least two knots".into()));
        }
        for w in knots.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(FtcError::DuplicateAbscissa(w[0].0.as_f64()));
            }
            if w[0].0 > w[1].0 {
                return Err(FtcError::InvalidRange("knots must be sorted by abscissa".into()));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(S, S)] {
        &self.knots
    }

    /// Slope of the interpolant on each of the `m` intervals.
    pub fn slopes(&self) -> Vec<S> {
        self.knots
            .windows(2)
            .map(|k| (k[1].1.clone() - k[0].1.clone()) / (k[1].0.clone() - k[0].0.clone()))
            .collect()
    }
}

/// One-input network `z₁ + Σ vᵢ·relu(x − wᵢ)` that interpolates the knots,
/// is constant left of the first knot and keeps the last slope to the right.
pub fn chain_interpolator<S: Scalar>(spec: &ChainSpec<S>) -> Network<S> {
    let slopes = spec.slopes();
    let mut layer = Layer::empty();
    let mut out = Vec::with_capacity(slopes.len());
    let mut prev = S::zero();
    for (i, s) in slopes.iter().enumerate() {
        layer.push(vec![S::one()], -spec.knots[i].0.clone(), Activation::Relu);
        out.push(s.clone() - prev);
        prev = s.clone();
    }
    Network {
        input_dim: 1,
        layers: vec![layer],
        output_weights: out,
        output_bias: spec.knots[0].1.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerReport {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub method: String,
    pub direction: Vec<f64>,
    /// Sample indices (1-based) in ascending projection order.
    pub order: Vec<usize>,
    /// Reduced index set in sorted positions.
    pub j_positions: Vec<usize>,
    /// The same set as sample indices.
    pub j_samples: Vec<usize>,
    pub removed_samples: Vec<usize>,
    pub untuned_blocks: Vec<Block>,
    pub neurons: usize,
    /// `min{3N + 1, K − 1}`.
    pub bound: usize,
    /// `K − 1 − Σ max{|P| − 2, 0}`.
    pub sharp_bound: usize,
}

/// Builds a two-layer ReLU network hitting every tuned target and vanishing
/// on every other sample.
pub fn build_two_layer<S: Scalar>(inst: &FineTuneInstance, seed: u64) -> Result<(Network<S>, TwoLayerReport)> {
    inst.validate()?;
    let k = inst.k;
    let n = inst.n();
    let bound = if k == 0 { 0 } else { (3 * n + 1).min(k - 1) };
    if n == 0 || k == 0 {
        let report = TwoLayerReport {
            k,
            n,
            method: "two_layer".into(),
            direction: vec![],
            order: (1..=k).collect(),
            j_positions: vec![],
            j_samples: vec![],
            removed_samples: vec![],
            untuned_blocks: vec![],
            neurons: 0,
            bound,
            sharp_bound: bound,
        };
        return Ok((Network::zero(inst.d), report));
    }
    let dir: Direction<S> = find_direction(&inst.points, seed)?;
    let pos = dir.positions();
    let tuned_positions: Vec<usize> = inst.tune_set.iter().map(|&t| pos[t - 1] + 1).collect();
    let reduced = reduced_index_set(k, &tuned_positions)?;
    let sample = |p: usize| dir.order[p - 1];
    let net = if reduced.len() == 1 {
        Network::constant(inst.d, S::from_f64(inst.targets[sample(1)]))
    } else {
        let knots = reduced
            .j
            .iter()
            .map(|&p| (dir.sorted(p - 1), S::from_f64(inst.targets[sample(p)])))
            .collect();
        chain_interpolator(&ChainSpec::new(knots)?).lift_projection(&dir.vector)?
    };
    let mut j_samples: Vec<usize> = reduced.j.iter().map(|&p| sample(p) + 1).collect();
    j_samples.sort_unstable();
    let mut removed_samples: Vec<usize> = reduced.removed.iter().map(|&p| sample(p) + 1).collect();
    removed_samples.sort_unstable();
    let report = TwoLayerReport {
        k,
        n,
        method: "two_layer".into(),
        direction: dir.vector_f64(),
        order: dir.order.iter().map(|i| i + 1).collect(),
        j_positions: reduced.j.clone(),
        j_samples,
        removed_samples,
        neurons: net.neuron_count(),
        bound,
        sharp_bound: k - 1 - removal_count(&reduced.untuned_blocks),
        untuned_blocks: reduced.untuned_blocks,
    };
    Ok((net, report))
}
