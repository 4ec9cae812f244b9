//! Deep networks by stacking three-layer builds on disjoint subsets of the
//! tuned samples.
//!
//! Every sub-build reads the same scalar projection, so two extra ReLU
//! channels suffice: one carries the projection forward, the other the
//! running sum of finished sub-builds. Both are shifted to stay positive on
//! the data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builders3::{build_projected, ceil_sqrt, BuildOptions, Method, ProjectedBuild, ThreeLayerReport};
use crate::error::{FtcError, Result};
use crate::instance::{find_direction, Direction, FineTuneInstance};
use crate::network::{Layer, Network, VerifyReport};
use crate::partition::reduced_index_set;
use crate::pwl::Activation;
use crate::scalar::{smax, Scalar};

/// Width bounds for depth `L`, with `q = ⌊(L−1)/2⌋` sub-builds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeepWidthBound {
    pub q: usize,
    /// `4 min{√(3N/√q + 5), √K} + 2`, the stated closed form.
    pub closed_form: f64,
    /// `4 min{√(3N/q + 5), √K} + 2`, following the subset-size argument.
    pub subset_form: f64,
    /// `4 min{⌈√(3⌈N/q⌉ + 2)⌉, ⌈√K⌉} + 2`, what the construction guarantees.
    pub construction: usize,
}

pub fn deep_width_bound(n: usize, k: usize, l: usize) -> Result<DeepWidthBound> {
    if l < 4 {
        return Err(FtcError::InvalidRange(format!("depth {l} below 4")));
    }
    let q = (l - 1) / 2;
    let (nf, kf, qf) = (n as f64, k as f64, q as f64);
    let closed_form = 4.0 * (3.0 * nf / qf.sqrt() + 5.0).sqrt().min(kf.sqrt()) + 2.0;
    let subset_form = 4.0 * (3.0 * nf / qf + 5.0).sqrt().min(kf.sqrt()) + 2.0;
    let per = n.div_ceil(q);
    let construction = 4 * ceil_sqrt(3 * per + 2).min(ceil_sqrt(k)) + 2;
    Ok(DeepWidthBound { q, closed_form, subset_form, construction })
}

/// How the tuned samples are split across sub-builds and where the two
/// carried channels are shifted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeepPlan {
    #[serde(rename = "L")]
    pub depth: usize,
    pub q: usize,
    /// Tuned sample indices (1-based) of each nonempty subset.
    pub subsets: Vec<Vec<usize>>,
    pub passthrough_low: f64,
    pub accumulator_low: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeepReport {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(flatten)]
    pub plan: DeepPlan,
    pub sub_reports: Vec<ThreeLayerReport>,
    /// ReLU-equivalent width of every hidden layer.
    pub widths: Vec<usize>,
    pub max_width: usize,
    pub bound: DeepWidthBound,
    pub within_construction_bound: bool,
    pub within_subset_form_bound: bool,
    pub within_closed_form_bound: bool,
    pub verify: Option<VerifyReport>,
}

/// Shift keeping a channel positive on `[min, max]` with a 10% margin.
fn low_shift<S: Scalar>(min: &S, max: &S) -> S {
    let range = smax(&(max.clone() - min.clone()), &S::one());
    min.clone() - range / S::from_i64(10)
}

/// Sub-build method with the smaller widest layer: grid (`2⌈√K⌉`) or sparse
/// (`4⌈√|J|⌉`).
fn pick_method(k: usize, tuned_positions: &[usize]) -> Result<Method> {
    let j = reduced_index_set(k, tuned_positions)?.len();
    Ok(if 4 * ceil_sqrt(j) < 2 * ceil_sqrt(k) { Method::Sparse } else { Method::Grid })
}

/// Builds an `L`-layer network (depth counts the output layer) hitting every
/// tuned target and vanishing on the other samples.
pub fn build_deep<S: Scalar>(inst: &FineTuneInstance, l: usize, opts: &BuildOptions) -> Result<(Network<S>, DeepReport)> {
    let bound = deep_width_bound(inst.n(), inst.k, l)?;
    inst.validate()?;
    inst.require_unit_targets()?;
    let q = bound.q;
    let mut report = DeepReport {
        k: inst.k,
        n: inst.n(),
        plan: DeepPlan { depth: l, q, ..Default::default() },
        sub_reports: vec![],
        widths: vec![],
        max_width: 0,
        within_construction_bound: true,
        within_subset_form_bound: true,
        within_closed_form_bound: true,
        bound,
        verify: None,
    };
    if inst.n() == 0 {
        let net = Network::zero(inst.d);
        report.verify = Some(net.verify_finetune(inst, &S::zero())?);
        return Ok((net, report));
    }
    let dir: Direction<S> = find_direction(&inst.points, opts.seed)?;
    let pos = dir.positions();
    let mut tuned = inst.tune_set.clone();
    tuned.sort_by_key(|&t| pos[t - 1]);
    let mut subsets: Vec<Vec<usize>> = vec![vec![]; q];
    for (i, &t) in tuned.iter().enumerate() {
        subsets[i % q].push(t);
    }
    subsets.retain(|s| !s.is_empty());
    for s in &mut subsets {
        s.sort_unstable();
    }

    let built: Vec<ProjectedBuild<S>> = subsets
        .par_iter()
        .map(|subset| {
            let positions: Vec<usize> = subset.iter().map(|&t| pos[t - 1] + 1).collect();
            build_projected::<S>(pick_method(inst.k, &positions)?, &inst.restricted(subset), opts)
        })
        .collect::<Result<_>>()?;
    let mut subs = Vec::with_capacity(built.len());
    for b in built {
        if b.direction.as_ref().is_some_and(|a| *a != dir.vector) {
            return Err(FtcError::InvalidNetwork("sub-build chose a different direction".into()));
        }
        // A sub-build whose targets are all zero contributes nothing.
        if !b.net.layers.is_empty() {
            subs.push(b);
        }
    }

    let c = dir.sorted_projections();
    let p_low = low_shift(&c[0], &c[c.len() - 1]);
    let (mut z_min, mut z_max) = (S::zero(), S::zero());
    for &t in &inst.tune_set {
        let z = S::from_f64(inst.targets[t - 1]);
        if z < z_min {
            z_min = z.clone();
        }
        if z > z_max {
            z_max = z;
        }
    }
    let acc_low = low_shift(&z_min, &z_max);
    let net = compose(inst.d, l, &dir.vector, &subs, &p_low, &acc_low)?;

    report.plan.subsets = subsets;
    report.plan.passthrough_low = p_low.as_f64();
    report.plan.accumulator_low = acc_low.as_f64();
    report.sub_reports = subs.into_iter().map(|b| b.report).collect();
    report.widths = net.relu_widths();
    report.max_width = net.max_relu_width();
    report.within_construction_bound = report.max_width <= report.bound.construction;
    report.within_subset_form_bound = report.max_width as f64 <= report.bound.subset_form;
    report.within_closed_form_bound = report.max_width as f64 <= report.bound.closed_form;
    let tol = if S::MODE == "f64" { S::from_f64(1e-8) } else { S::zero() };
    let v = net.verify_finetune(inst, &tol)?;
    let pass = v.pass;
    report.verify = Some(v);
    if !pass {
        return Err(FtcError::VerificationFailed(format!(
            "deep build misses targets by {:.3e}",
            report.verify.as_ref().unwrap().max_err_on_t.max(report.verify.as_ref().unwrap().max_err_off_t)
        )));
    }
    Ok((net, report))
}

/// Appends a neuron and returns its slot.
fn push<S: Scalar>(layer: &mut Layer<S>, row: Vec<S>, bias: S, act: Activation<S>) -> usize {
    layer.push(row, bias, act);
    layer.width() - 1
}

/// Previous-layer slots of the channels a layer reads.
#[derive(Clone, Default)]
struct Slots {
    /// Sub-build neurons of the previous layer.
    sub: Vec<usize>,
    passthrough: Option<usize>,
    accumulator: Option<usize>,
}

fn compose<S: Scalar>(
    d: usize,
    depth: usize,
    a: &[S],
    subs: &[ProjectedBuild<S>],
    p_low: &S,
    acc_low: &S,
) -> Result<Network<S>> {
    let hidden = depth - 1;
    let m = subs.len();
    let mut layers: Vec<Layer<S>> = Vec::with_capacity(hidden);
    let mut prev = Slots::default();
    let mut prev_width = d;
    let unit = |width: usize, at: usize, v: S| {
        let mut r = vec![S::zero(); width];
        r[at] = v;
        r
    };
    for h in 0..hidden {
        let mut cur = Layer::empty();
        let mut slots = Slots::default();
        let sub_index = h / 2;
        let second_half = h % 2 == 1;
        if sub_index < m {
            let sub = &subs[sub_index].net;
            if !second_half {
                let first = &sub.layers[0];
                for ((row, b), act) in first.weights.iter().zip(&first.biases).zip(&first.activations) {
                    let w = row[0].clone();
                    let idx = if h == 0 {
                        push(&mut cur, a.iter().map(|ak| w.clone() * ak.clone()).collect(), b.clone(), act.clone())
                    } else {
                        let at = prev.passthrough.expect("projection channel");
                        push(&mut cur, unit(prev_width, at, w.clone()), b.clone() + w * p_low.clone(), act.clone())
                    };
                    slots.sub.push(idx);
                }
                // The projection is needed again only by later sub-builds.
                if sub_index + 1 < m {
                    let idx = if h == 0 {
                        push(&mut cur, a.to_vec(), -p_low.clone(), Activation::Relu)
                    } else {
                        push(&mut cur, unit(prev_width, prev.passthrough.unwrap(), S::one()), S::zero(), Activation::Relu)
                    };
                    slots.passthrough = Some(idx);
                }
            } else {
                let second = &sub.layers[1];
                for ((row, b), act) in second.weights.iter().zip(&second.biases).zip(&second.activations) {
                    let mut r = vec![S::zero(); prev_width];
                    for (w, &at) in row.iter().zip(&prev.sub) {
                        r[at] = w.clone();
                    }
                    slots.sub.push(push(&mut cur, r, b.clone(), act.clone()));
                }
                if let Some(at) = prev.passthrough {
                    slots.passthrough = Some(push(&mut cur, unit(prev_width, at, S::one()), S::zero(), Activation::Relu));
                }
            }
        }
        // Accumulator: absorbs a finished sub-build's read-out when the
        // previous layer holds its second-layer neurons.
        let mut r = vec![S::zero(); prev_width];
        let mut bias = S::zero();
        match prev.accumulator {
            Some(at) => r[at] = S::one(),
            None => bias = -acc_low.clone(),
        }
        if h >= 2 && h % 2 == 0 && h / 2 - 1 < m && !prev.sub.is_empty() {
            let done = &subs[h / 2 - 1].net;
            for (v, &at) in done.output_weights.iter().zip(&prev.sub) {
                r[at] = v.clone();
            }
            bias = bias + done.output_bias.clone();
        }
        slots.accumulator = Some(push(&mut cur, r, bias, Activation::Relu));
        prev_width = cur.width();
        layers.push(cur);
        prev = slots;
    }
    let mut out = vec![S::zero(); prev_width];
    let mut out_bias = acc_low.clone();
    out[prev.accumulator.unwrap()] = S::one();
    if !prev.sub.is_empty() {
        let last = &subs[m - 1].net;
        for (v, &at) in last.output_weights.iter().zip(&prev.sub) {
            out[at] = v.clone();
        }
        out_bias = out_bias + last.output_bias.clone();
    }
    let net = Network { input_dim: d, layers, output_weights: out, output_bias: out_bias };
    net.check()?;
    Ok(net)
}
