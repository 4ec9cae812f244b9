//! Closed-form bounds on the minimal width `m★` for a given number of tuned
//! samples, and on the fine-tuning capacity `N★` for a given width.
//!
//! Raw values follow the formulas as stated. Tightened values use
//! integrality: a neuron or sample count lies in
//! `[⌈lower⌉, ⌊upper⌋]`, and a capacity is never negative.

use serde::{Deserialize, Serialize};

use crate::builders3::{method_bound, Method};
use crate::error::{FtcError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Minimal number of neurons.
    Width,
    /// Fine-tuning capacity.
    Samples,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityBounds {
    pub quantity: Quantity,
    pub depth: usize,
    pub lower: f64,
    pub upper: f64,
    pub lower_tight: i64,
    pub upper_tight: i64,
    /// Set when the capacity is exactly `K`.
    pub equals_k: bool,
    pub regime: String,
}

impl CapacityBounds {
    fn new(quantity: Quantity, depth: usize, lower: f64, upper: f64, regime: &str) -> Self {
        let floor_at_zero = |v: f64| v.max(0.0);
        Self {
            quantity,
            depth,
            lower,
            upper,
            lower_tight: floor_at_zero(snap(lower).ceil()) as i64,
            upper_tight: snap(upper).floor() as i64,
            equals_k: false,
            regime: regime.into(),
        }
    }

    fn exactly_k(depth: usize, k: usize, regime: &str) -> Self {
        let mut b = Self::new(Quantity::Samples, depth, k as f64, k as f64, regime);
        b.equals_k = true;
        b
    }
}

/// Rounds away float noise next to an integer before ceil/floor, so
/// `√16 = 4` stays 4.
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        v
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k < 3 {
        return Err(FtcError::InvalidRange(format!("K = {k} below 3")));
    }
    if n > k {
        return Err(FtcError::InvalidRange(format!("N = {n} exceeds K = {k}")));
    }
    Ok(())
}

fn check_mk(m: usize, k: usize) -> Result<()> {
    if m < 1 {
        return Err(FtcError::InvalidRange("m must be at least 1".into()));
    }
    if k < 3 {
        return Err(FtcError::InvalidRange(format!("K = {k} below 3")));
    }
    Ok(())
}

/// `min{3N, K−2} ≤ m★ ≤ min{3N+1, K−1}`.
pub fn m_bounds_2layer(n: usize, k: usize) -> Result<CapacityBounds> {
    check_nk(n, k)?;
    let lower = (3 * n).min(k - 2) as f64;
    let upper = (3 * n + 1).min(k - 1) as f64;
    let regime = if 3 * n + 1 <= k - 1 { "spread" } else { "compressed" };
    Ok(CapacityBounds::new(Quantity::Width, 2, lower, upper, regime))
}

pub fn n_bounds_2layer(m: usize, k: usize) -> Result<CapacityBounds> {
    check_mk(m, k)?;
    Ok(if k >= m + 2 {
        CapacityBounds::new(Quantity::Samples, 2, ((m - 1) / 3) as f64, m as f64 / 3.0, "few_neurons")
    } else {
        CapacityBounds::exactly_k(2, k, "memorization")
    })
}

/// Lower bound `√(2 min{3N, K−2} + 1/4) − 1/2`, upper bound
/// `min{2√K + min{2√K, 3N}, 6√(3N+2)}`.
pub fn m_bounds_3layer(n: usize, k: usize) -> Result<CapacityBounds> {
    check_nk(n, k)?;
    let (nf, kf) = (n as f64, k as f64);
    let lower = (2.0 * (3 * n).min(k - 2) as f64 + 0.25).sqrt() - 0.5;
    let root_k = kf.sqrt();
    let by_k = 2.0 * root_k + (2.0 * root_k).min(3.0 * nf);
    let by_n = 6.0 * (3.0 * nf + 2.0).sqrt();
    let regime = if by_k <= by_n { "sample_count" } else { "tuned_count" };
    Ok(CapacityBounds::new(Quantity::Width, 3, lower, by_k.min(by_n), regime))
}

/// Neuron budget the three-layer builders actually meet: the best of the
/// grid, bump and sparse ceilings.
pub fn constructive_width_3layer(n: usize, k: usize) -> usize {
    [Method::Grid, Method::Bump, Method::Sparse]
        .into_iter()
        .map(|m| method_bound(m, k, n))
        .min()
        .unwrap()
}

/// Which clause of the three-layer capacity statement applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime3 {
    /// `K ≤ ⌊m²/16⌋`.
    Memorization,
    /// `⌊m²/16⌋ + 1 ≤ K < (m²+m+4)/2`.
    Intermediate,
    /// `K ≥ (m²+m+4)/2`.
    FewNeurons,
}

impl Regime3 {
    pub fn name(self) -> &'static str {
        match self {
            Regime3::Memorization => "memorization",
            Regime3::Intermediate => "intermediate",
            Regime3::FewNeurons => "few_neurons",
        }
    }
}

pub fn regime_3layer(m: usize, k: usize) -> Regime3 {
    let m2 = m * m;
    if k <= m2 / 16 {
        Regime3::Memorization
    } else if 2 * k < m2 + m + 4 {
        Regime3::Intermediate
    } else {
        Regime3::FewNeurons
    }
}

/// `⌊m²/108 − 2/3⌋` in integers: `⌊(m² − 72)/108⌋`. Negative for `m ≤ 8`.
pub fn lower_capacity_3layer(m: usize) -> i64 {
    (m as i64 * m as i64 - 72).div_euclid(108)
}

pub fn n_bounds_3layer(m: usize, k: usize) -> Result<CapacityBounds> {
    check_mk(m, k)?;
    let regime = regime_3layer(m, k);
    let lower = lower_capacity_3layer(m) as f64;
    Ok(match regime {
        Regime3::Memorization => CapacityBounds::exactly_k(3, k, regime.name()),
        Regime3::Intermediate => CapacityBounds::new(Quantity::Samples, 3, lower, k as f64, regime.name()),
        Regime3::FewNeurons => {
            let upper = (m * m + m) as f64 / 6.0;
            CapacityBounds::new(Quantity::Samples, 3, lower, upper, regime.name())
        }
    })
}

/// Range of the memorization capacity (all samples tuned, `K = N`) implied
/// by the same width bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemorizationRange {
    pub depth: usize,
    pub lower: usize,
    pub upper: usize,
}

/// Two layers: `N − 2 ≤ m★(N, N) ≤ N − 1` gives `[m+1, m+2]`. Three layers:
/// the grid build memorizes `⌊m²/16⌋` points and the lower bound caps it at
/// `(m²+m+4)/2`.
pub fn memorization_range(depth: usize, m: usize) -> Result<MemorizationRange> {
    match depth {
        2 => Ok(MemorizationRange { depth, lower: m + 1, upper: m + 2 }),
        3 => Ok(MemorizationRange { depth, lower: m * m / 16, upper: (m * m + m + 4) / 2 }),
        _ => Err(FtcError::InvalidRange(format!("depth {depth} has no closed-form capacity"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub holds: bool,
    pub details: Vec<String>,
}

/// Fine-tuning capacity never exceeds memorization capacity: every bound on
/// `N★` for `(m, K)` must be compatible with the memorization range at the
/// same width: both tightened ends, and `K` itself when the capacity is
/// exactly `K`, stay at or below the range's upper end.
pub fn ftc_mc_consistency(m: usize, k: usize) -> Consistency {
    let mut details = vec![];
    for depth in [2, 3] {
        let n = match depth {
            2 => n_bounds_2layer(m, k),
            _ => n_bounds_3layer(m, k),
        };
        let (Ok(n), Ok(mc)) = (n, memorization_range(depth, m)) else {
            continue;
        };
        if n.lower_tight > mc.upper as i64 {
            details.push(format!("depth {depth}: capacity lower {} above memorization upper {}", n.lower_tight, mc.upper));
        }
        if !n.equals_k && n.upper_tight > mc.upper as i64 {
            details.push(format!("depth {depth}: capacity upper {} above memorization upper {}", n.upper_tight, mc.upper));
        }
        if n.equals_k && k > mc.upper {
            details.push(format!("depth {depth}: capacity K = {k} above memorization upper {}", mc.upper));
        }
    }
    Consistency { holds: details.is_empty(), details }
}
