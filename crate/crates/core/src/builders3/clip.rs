//! Second-layer solve: hit the representatives' targets exactly and push
//! every other sample past the saturation threshold.

use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::linalg::rref;
use crate::scalar::{dot, Scalar};

/// Which side of `±(1 + margin)` an off-representative row must land on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Positive,
    Negative,
    Either,
}

impl Side {
    fn accepts<S: Scalar>(self, v: &S, threshold: &S) -> bool {
        match self {
            Side::Positive => v >= threshold,
            Side::Negative => *v <= -threshold.clone(),
            Side::Either => v.abs() >= *threshold,
        }
    }
}

/// Largest exponent tried in the doubling search for the null-space scale.
pub const MAX_SCALE_EXPONENT: u32 = 60;

#[derive(Clone, Debug)]
pub struct ClipSystem<S: Scalar> {
    /// One row per representative: first-layer outputs followed by a 1.
    pub matrix: Vec<Vec<S>>,
    pub targets: Vec<S>,
    pub mu: Vec<S>,
    /// Null vector, positive on its first `G` coordinates, max-normalized.
    pub nu: Vec<S>,
    pub lambda: S,
    /// Exponent `e` with `λ = 2^e`, or `None` when `λ = 0` sufficed.
    pub lambda_exponent: Option<u32>,
    pub margin: S,
    pub rank: usize,
    /// `μ + λν`, refined against rounding in float back ends.
    pub weights: Vec<S>,
}

impl<S: Scalar> ClipSystem<S> {
    /// `μ + λν` after refinement; the last entry is the bias.
    pub fn solution(&self) -> Vec<S> {
        self.weights.clone()
    }

    /// Ratio of the largest to the smallest null-vector entry over the
    /// first `G` coordinates.
    pub fn nu_spread(&self) -> f64 {
        let g = self.targets.len();
        let vals: Vec<f64> = self.nu[..g].iter().map(|v| v.as_f64()).collect();
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

/// Options for [`solve_clip_system`].
#[derive(Clone, Debug)]
pub struct ClipOptions<S: Scalar> {
    pub margin: S,
    /// Also require the first `G` solution entries to be positive.
    pub positive_weights: bool,
}

/// Augmented system `[M | rhs]` with rows 2.. replaced by consecutive
/// differences: window rows then differ in two coordinates only, which keeps
/// elimination accurate and free of fill.
fn differenced<S: Scalar>(rows: &[Vec<S>], rhs: &[S]) -> Vec<Vec<S>> {
    (0..rows.len())
        .map(|i| {
            let mut row: Vec<S> = rows[i].iter().cloned().chain([rhs[i].clone()]).collect();
            if i > 0 {
                let prev = rows[i - 1].iter().chain([&rhs[i - 1]]);
                for (v, p) in row.iter_mut().zip(prev) {
                    *v = v.clone() - p.clone();
                }
            }
            row
        })
        .collect()
}

/// Particular solution of `M w = rhs` with the free coordinate set to 0.
fn particular_solution<S: Scalar>(rows: &[Vec<S>], rhs: &[S]) -> Vec<S> {
    let g = rows.len();
    let red = rref(differenced(rows, rhs), g + 1);
    let mut w = vec![S::zero(); g + 1];
    for (row, &p) in red.rows.iter().zip(&red.pivots) {
        w[p] = row[g + 1].clone();
    }
    w
}

fn residual<S: Scalar>(rows: &[Vec<S>], targets: &[S], w: &[S]) -> Vec<S> {
    rows.iter().zip(targets).map(|(r, z)| z.clone() - S::dot_accurate(r, w)).collect()
}

fn max_abs<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |m, x| if x.abs() > m { x.abs() } else { m })
}

/// Solves `M w = targets` on the representative rows, then scales along the
/// null direction until every off row lands on its side of `±(1 + margin)`.
pub fn solve_clip_system<S: Scalar>(
    rep_rows: &[Vec<S>],
    targets: &[S],
    off_rows: &[(Vec<S>, Side)],
    opts: &ClipOptions<S>,
) -> Result<ClipSystem<S>> {
    let g = rep_rows.len();
    if targets.len() != g {
        return Err(FtcError::DimensionMismatch { expected: g, found: targets.len() });
    }
    if let Some(r) = rep_rows.iter().chain(off_rows.iter().map(|(r, _)| r)).find(|r| r.len() != g + 1) {
        return Err(FtcError::DimensionMismatch { expected: g + 1, found: r.len() });
    }
    let red = rref(differenced(rep_rows, targets), g + 1);
    let rank = red.pivots.len();
    if rank != g {
        return Err(FtcError::RankDeficient { rank, expected: g });
    }
    let free = (0..=g).find(|c| !red.pivots.contains(c)).expect("one free column");
    let mut nu = vec![S::zero(); g + 1];
    let mut particular = vec![S::zero(); g + 1];
    nu[free] = S::one();
    for (row, &p) in red.rows.iter().zip(&red.pivots) {
        nu[p] = -row[free].clone();
        particular[p] = row[g + 1].clone();
    }
    let negative = nu[..g].iter().filter(|v| **v < S::zero()).count();
    if negative == g {
        nu.iter_mut().for_each(|v| *v = -v.clone());
    }
    if let Some(bad) = nu[..g].iter().position(|v| *v <= S::zero()) {
        return Err(FtcError::SignPattern(bad + 1));
    }
    let peak = nu[..g].iter().fold(S::zero(), |m, v| if *v > m { v.clone() } else { m });
    nu.iter_mut().for_each(|v| *v = v.clone() / peak.clone());
    let along = dot(&particular, &nu) / dot(&nu, &nu);
    let mu: Vec<S> = particular
        .iter()
        .zip(&nu)
        .map(|(p, n)| p.clone() - along.clone() * n.clone())
        .collect();

    let threshold = S::one() + opts.margin.clone();
    let parts: Vec<(S, S, Side)> = off_rows
        .iter()
        .map(|(r, side)| (dot(r, &mu), dot(r, &nu), *side))
        .collect();
    let admissible = |lambda: &S| {
        let rows_ok = parts
            .iter()
            .all(|(a, k, side)| side.accepts(&(a.clone() + lambda.clone() * k.clone()), &threshold));
        let signs_ok = !opts.positive_weights
            || mu[..g]
                .iter()
                .zip(&nu[..g])
                .all(|(m, n)| m.clone() + lambda.clone() * n.clone() > S::zero());
        rows_ok && signs_ok
    };
    let mut found = None;
    if admissible(&S::zero()) {
        found = Some((S::zero(), None));
    } else {
        for e in 0..=MAX_SCALE_EXPONENT {
            let lambda = S::from_i64(1i64 << e);
            if admissible(&lambda) {
                found = Some((lambda, Some(e)));
                break;
            }
        }
    }
    let (lambda, lambda_exponent) = found.ok_or(FtcError::ScaleExhausted(MAX_SCALE_EXPONENT))?;
    let mut sys = ClipSystem {
        matrix: rep_rows.to_vec(),
        targets: targets.to_vec(),
        mu,
        nu,
        lambda,
        lambda_exponent,
        margin: opts.margin.clone(),
        rank,
        weights: vec![],
    };
    // Iterative refinement of the float solution; exact back ends see a zero
    // residual and skip it.
    let mut w: Vec<S> = sys
        .mu
        .iter()
        .zip(&sys.nu)
        .map(|(m, n)| m.clone() + sys.lambda.clone() * n.clone())
        .collect();
    let mut res = residual(rep_rows, targets, &w);
    for _ in 0..3 {
        let before = max_abs(&res);
        if before.is_zero() {
            break;
        }
        let fix = particular_solution(rep_rows, &res);
        let cand: Vec<S> = w.iter().zip(&fix).map(|(a, b)| a.clone() + b.clone()).collect();
        let cand_res = residual(rep_rows, targets, &cand);
        let still_clipped = off_rows
            .iter()
            .all(|(r, side)| side.accepts(&dot(r, &cand), &threshold));
        if max_abs(&cand_res) >= before || !still_clipped {
            break;
        }
        w = cand;
        res = cand_res;
    }
    let scale = w.iter().fold(S::one(), |m, v| if v.abs() > m { v.abs() } else { m });
    for (i, (r, z)) in rep_rows.iter().zip(targets).enumerate() {
        let err = dot(r, &w) - z.clone();
        if !err.negligible(&(scale.clone() * S::from_i64(1000))) {
            return Err(FtcError::VerificationFailed(format!(
                "representative row {} misses its target by {}",
                i + 1,
                err.as_f64()
            )));
        }
    }
    sys.weights = w;
    Ok(sys)
}
