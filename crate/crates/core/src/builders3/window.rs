//! First-layer windows: one hard-tanh neuron per consecutive group, with
//! alternating orientation, plus the choice of window boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::network::Layer;
use crate::pwl::Activation;
use crate::scalar::{two, Scalar};

use super::clip::Side;

/// How window boundaries are placed inside the gaps between groups.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Halfway across every gap; edge windows padded by half the minimum gap.
    Midpoint,
    /// Boundaries chosen to keep the second-layer null vectors balanced,
    /// which keeps the clip scale (and so float error) small.
    #[default]
    Conditioned,
}

/// A second-layer representative: a real sample or a virtual point inside a
/// group that has fewer members than the transversal needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rep {
    Sample(usize),
    Virtual { group: usize, slot: usize, of: usize },
}

/// One second-layer neuron: a representative per group and the rows that
/// must be clipped.
#[derive(Clone, Debug)]
pub struct NeuronPlan {
    pub reps: Vec<Rep>,
    pub off: Vec<(usize, Side)>,
}

/// Consecutive groups of sorted positions (0-based) and the `G + 1`
/// boundaries `B_0 < … < B_G` of their windows.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowScheme<S: Scalar> {
    pub groups: Vec<Vec<usize>>,
    pub boundaries: Vec<S>,
}

/// `+1` for the first window, alternating afterwards.
pub fn positive_orientation(g: usize) -> bool {
    g % 2 == 0
}

/// Members of a group ordered by increasing oriented window output.
pub fn slot_order(group: &[usize], g: usize) -> Vec<usize> {
    let mut v = group.to_vec();
    if !positive_orientation(g) {
        v.reverse();
    }
    v
}

impl<S: Scalar> WindowScheme<S> {
    pub fn new(groups: Vec<Vec<usize>>, boundaries: Vec<S>, c: &[S]) -> Result<Self> {
        if boundaries.len() != groups.len() + 1 {
            return Err(FtcError::DimensionMismatch { expected: groups.len() + 1, found: boundaries.len() });
        }
        for (g, grp) in groups.iter().enumerate() {
            if grp.is_empty() {
                return Err(FtcError::EmptyGroup(g + 1));
            }
            let (lo, hi) = (&boundaries[g], &boundaries[g + 1]);
            if grp.iter().any(|&p| c[p] <= *lo || c[p] >= *hi) {
                return Err(FtcError::InvalidRange(format!("group {} leaves its window", g + 1)));
            }
        }
        Ok(Self { groups, boundaries })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    fn weight_bias(&self, g: usize) -> (S, S) {
        let (lo, hi) = (self.boundaries[g].clone(), self.boundaries[g + 1].clone());
        let width = hi.clone() - lo.clone();
        let w = two::<S>() / width.clone();
        let b = -(hi + lo) / width;
        if positive_orientation(g) {
            (w, b)
        } else {
            (-w, -b)
        }
    }

    /// Hard-tanh layer over a scalar input.
    pub fn layer(&self) -> Layer<S> {
        let mut layer = Layer::empty();
        for g in 0..self.len() {
            let (w, b) = self.weight_bias(g);
            layer.push(vec![w], b, Activation::HardTanh);
        }
        layer
    }

    /// Window outputs at projection `p`, followed by a trailing 1. Uses the
    /// same arithmetic as the network layer.
    pub fn beta_row(&self, p: &S) -> Vec<S> {
        let mut row: Vec<S> = (0..self.len())
            .map(|g| {
                let (w, b) = self.weight_bias(g);
                Activation::HardTanh.apply(&(w * p.clone() + b))
            })
            .collect();
        row.push(S::one());
        row
    }

    /// Window containing `p`, if any (the left one on a shared boundary).
    pub fn window_of(&self, p: &S) -> Option<usize> {
        if *p < self.boundaries[0] || *p > self.boundaries[self.len()] {
            return None;
        }
        let idx = self.boundaries[1..].partition_point(|b| b < p);
        Some(idx.min(self.len() - 1))
    }

    /// Projection used for a representative.
    pub fn rep_point(&self, rep: &Rep, c: &[S]) -> S {
        match *rep {
            Rep::Sample(p) => c[p].clone(),
            Rep::Virtual { group, slot, of } => virtual_point(&self.groups[group], group, &self.boundaries, c, slot, of),
        }
    }
}

/// Point strictly between the group's highest-output member and the window
/// edge on that side, ordered by slot.
fn virtual_point<S: Scalar>(group: &[usize], g: usize, boundaries: &[S], c: &[S], slot: usize, of: usize) -> S {
    let n = group.len();
    let last = c[*slot_order(group, g).last().unwrap()].clone();
    let edge = if positive_orientation(g) { boundaries[g + 1].clone() } else { boundaries[g].clone() };
    let num = S::from_i64((slot + 1 - n) as i64);
    let den = S::from_i64((of + 1 - n) as i64);
    last.clone() + (edge - last) * num / den
}

/// Grid-style transversal plans: neuron `k` takes slot `k` of every group
/// (virtual when the group is short).
pub fn transversal_reps(groups: &[Vec<usize>], slot: usize, of: usize) -> Vec<Rep> {
    groups
        .iter()
        .enumerate()
        .map(|(g, grp)| {
            let order = slot_order(grp, g);
            if slot < order.len() {
                Rep::Sample(order[slot])
            } else {
                Rep::Virtual { group: g, slot, of }
            }
        })
        .collect()
}

const DENOM: i64 = 1024;

/// Places the window boundaries of `groups` under `policy`.
///
/// `c` holds all sorted projections, `eps` half their minimum gap. Plans are
/// used only by the conditioned policy.
pub fn place_boundaries<S: Scalar>(
    groups: &[Vec<usize>],
    c: &[S],
    eps: &S,
    policy: BoundaryPolicy,
    plans: &[NeuronPlan],
    margin: f64,
) -> Vec<S> {
    let first = c[groups[0][0]].clone();
    let last = c[*groups.last().unwrap().last().unwrap()].clone();
    match policy {
        BoundaryPolicy::Midpoint => {
            let mut b = vec![first - eps.clone() * S::half()];
            for w in groups.windows(2) {
                let lo = c[*w[0].last().unwrap()].clone();
                let hi = c[w[1][0]].clone();
                b.push((lo + hi) * S::half());
            }
            b.push(last + eps.clone() * S::half());
            b
        }
        BoundaryPolicy::Conditioned => {
            let spacing = if c.len() > 1 {
                (c[c.len() - 1].clone() - c[0].clone()) / S::from_i64(c.len() as i64 - 1)
            } else {
                S::one()
            };
            let theta = optimize_fractions(groups, c, spacing.as_f64(), plans, margin);
            realize(groups, c, &spacing, &theta)
        }
    }
}

/// Boundaries from integer fractions `θ_j / 1024`: interior boundaries sit at
/// that fraction of their gap, edges at `spacing · θ / (1 − θ)` outside.
fn realize<S: Scalar>(groups: &[Vec<usize>], c: &[S], spacing: &S, theta: &[i64]) -> Vec<S> {
    let g = groups.len();
    let edge = |t: i64| spacing.clone() * S::from_i64(t) / S::from_i64(DENOM - t);
    let mut b = Vec::with_capacity(g + 1);
    b.push(c[groups[0][0]].clone() - edge(theta[0]));
    for j in 1..g {
        let lo = c[*groups[j - 1].last().unwrap()].clone();
        let hi = c[groups[j][0]].clone();
        b.push(lo.clone() + (hi - lo) * S::from_i64(theta[j]) / S::from_i64(DENOM));
    }
    b.push(c[*groups[g - 1].last().unwrap()].clone() + edge(theta[g]));
    b
}

/// Predicted log of the clip scale over all plans (float model).
fn log_scale(groups: &[Vec<usize>], cf: &[f64], bounds: &[f64], plans: &[NeuronPlan], margin: f64) -> f64 {
    let g = groups.len();
    let local = |j: usize, p: f64| (2.0 * p - bounds[j] - bounds[j + 1]) / (bounds[j + 1] - bounds[j]);
    let locate = |p: f64| bounds[1..g].partition_point(|b| *b < p).min(g - 1);
    let mut worst = f64::NEG_INFINITY;
    let mut t = vec![0.0; g];
    let mut log_nu = vec![0.0; g];
    let mut gap = vec![f64::INFINITY; g];
    for plan in plans {
        for (j, rep) in plan.reps.iter().enumerate() {
            let p = match *rep {
                Rep::Sample(p) => cf[p],
                Rep::Virtual { group, slot, of } => virtual_point(&groups[group], group, bounds, cf, slot, of),
            };
            t[j] = local(j, p);
        }
        for j in 1..g {
            log_nu[j] = log_nu[j - 1] + (1.0 - t[j - 1]).ln() - (1.0 + t[j]).ln();
        }
        let top = log_nu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        gap.iter_mut().for_each(|v| *v = f64::INFINITY);
        for &(p, _) in &plan.off {
            let j = locate(cf[p]);
            gap[j] = gap[j].min((local(j, cf[p]) - t[j]).abs());
        }
        for j in 0..g {
            if gap[j].is_finite() {
                worst = worst.max(top - log_nu[j] - gap[j].max(1e-300).ln());
            }
        }
    }
    worst + (2.0 + margin).ln()
}

/// Gauss-Seidel pass setting each interior boundary so that the null-vector
/// ratio across it is as close to 1 as the fraction grid allows.
fn balance_ratios(groups: &[Vec<usize>], cf: &[f64], spacing: f64, plan: &NeuronPlan, theta: &mut [i64]) {
    let g = groups.len();
    let rep = |j: usize, b: &[f64]| match plan.reps[j] {
        Rep::Sample(p) => cf[p],
        Rep::Virtual { group, slot, of } => virtual_point(&groups[group], group, b, cf, slot, of),
    };
    let log_ratio = |j: usize, b: &[f64]| {
        // Ratio between groups j − 1 and j.
        let (lo, mid, hi) = (b[j - 1], b[j], b[j + 1]);
        let right = (mid - rep(j - 1, b)) / (mid - lo);
        let left = (rep(j, b) - mid) / (hi - mid);
        (right / left).ln().abs()
    };
    let mut b = realize(groups, cf, &spacing, theta);
    for _ in 0..12 {
        let mut moved = false;
        for j in 1..g {
            let lo = cf[*groups[j - 1].last().unwrap()];
            let hi = cf[groups[j][0]];
            let mut best = (f64::INFINITY, theta[j]);
            for cand in 1..DENOM {
                b[j] = lo + (hi - lo) * cand as f64 / DENOM as f64;
                let r = log_ratio(j, &b);
                if r < best.0 {
                    best = (r, cand);
                }
            }
            moved |= best.1 != theta[j];
            theta[j] = best.1;
            b[j] = lo + (hi - lo) * best.1 as f64 / DENOM as f64;
        }
        if !moved {
            break;
        }
    }
}

fn optimize_fractions(groups: &[Vec<usize>], c: &[impl Scalar], spacing: f64, plans: &[NeuronPlan], margin: f64) -> Vec<i64> {
    let g = groups.len();
    let cf: Vec<f64> = c.iter().map(Scalar::as_f64).collect();
    let mut theta = vec![DENOM / 2; g + 1];
    theta[0] = DENOM / 3;
    theta[g] = DENOM / 3;
    if plans.is_empty() {
        return theta;
    }
    if let [plan] = plans {
        balance_ratios(groups, &cf, spacing, plan, &mut theta);
    }
    let score = |theta: &[i64]| log_scale(groups, &cf, &realize(groups, &cf, &spacing, theta), plans, margin);
    let coarse: Vec<i64> = {
        let mut v: Vec<i64> = (0..10).map(|e| 1i64 << e).collect();
        v.extend((0..10).map(|e| DENOM - (1i64 << e)));
        v.extend((1..16).map(|i| i * DENOM / 16));
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut best = score(&theta);
    for _ in 0..8 {
        let before = best;
        for j in 0..=g {
            let cur = theta[j];
            let local = [64, 32, 16, 8, 4, 2, 1].into_iter().flat_map(|s| [cur - s, cur + s]);
            for cand in coarse.iter().cloned().chain(local) {
                if cand <= 0 || cand >= DENOM || cand == theta[j] {
                    continue;
                }
                let keep = theta[j];
                theta[j] = cand;
                let s = score(&theta);
                if s < best - 1e-12 {
                    best = s;
                } else {
                    theta[j] = keep;
                }
            }
        }
        if best > before - 1e-9 {
            break;
        }
    }
    theta
}
