//! Fine-tuning instances, dataset generators and separating directions.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{FtcError, Result};
use crate::scalar::{dot, Scalar};

/// Samples `x_i`, residual targets `z_i` and the tuned indices `T`
/// (1-based). Targets off `T` are exactly zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FineTuneInstance {
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub tune_set: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_labels: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub generator: Option<String>,
}

impl FineTuneInstance {
    /// Builds an instance from points and a full target vector; `T` is the
    /// support of the targets.
    pub fn from_targets(points: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let tune_set = targets
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != 0.0)
            .map(|(i, _)| i + 1)
            .collect();
        Self::new(points, targets, tune_set)
    }

    pub fn new(points: Vec<Vec<f64>>, targets: Vec<f64>, mut tune_set: Vec<usize>) -> Result<Self> {
        tune_set.sort_unstable();
        let inst = Self {
            d: points.first().map_or(0, Vec::len),
            k: points.len(),
            points,
            targets,
            tune_set,
            base_labels: None,
            seed: None,
            generator: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.tune_set.len()
    }

    pub fn is_tuned(&self, index: usize) -> bool {
        self.tune_set.binary_search(&index).is_ok()
    }

    /// Checks every invariant and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.k {
            return Err(FtcError::DimensionMismatch { expected: self.k, found: self.points.len() });
        }
        if self.targets.len() != self.k {
            return Err(FtcError::DimensionMismatch { expected: self.k, found: self.targets.len() });
        }
        for p in &self.points {
            if p.len() != self.d {
                return Err(FtcError::DimensionMismatch { expected: self.d, found: p.len() });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(FtcError::Parse("non-finite coordinate".into()));
            }
        }
        let mut seen = vec![false; self.k + 1];
        for &t in &self.tune_set {
            if t == 0 || t > self.k {
                return Err(FtcError::IndexOutOfRange { index: t, k: self.k });
            }
            if seen[t] {
                return Err(FtcError::InvalidRange(format!("index {t} tuned twice")));
            }
            seen[t] = true;
        }
        for (i, z) in self.targets.iter().enumerate() {
            if !z.is_finite() {
                return Err(FtcError::Parse(format!("non-finite target at {}", i + 1)));
            }
            if !seen[i + 1] && *z != 0.0 {
                return Err(FtcError::NonzeroOffTarget { index: i + 1, value: *z });
            }
        }
        let mut idx: Vec<usize> = (0..self.k).collect();
        let lex = |a: &usize, b: &usize| {
            self.points[*a]
                .iter()
                .zip(&self.points[*b])
                .map(|(x, y)| x.partial_cmp(y).unwrap())
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        };
        idx.sort_by(lex);
        for w in idx.windows(2) {
            if lex(&w[0], &w[1]) == Ordering::Equal {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(FtcError::DuplicatePoint(a + 1, b + 1));
            }
        }
        Ok(())
    }

    /// Errors unless every target lies in `[-1, 1]`.
    pub fn require_unit_targets(&self) -> Result<()> {
        match self.targets.iter().position(|z| z.abs() > 1.0) {
            Some(i) => Err(FtcError::TargetOutOfRange { index: i + 1, value: self.targets[i] }),
            None => Ok(()),
        }
    }

    /// Copy with targets restricted to `subset` (1-based) and zero elsewhere.
    pub fn restricted(&self, subset: &[usize]) -> Self {
        let mut targets = vec![0.0; self.k];
        for &t in subset {
            targets[t - 1] = self.targets[t - 1];
        }
        let mut tune_set = subset.to_vec();
        tune_set.sort_unstable();
        Self { targets, tune_set, ..self.clone() }
    }

    pub fn points_as<S: Scalar>(&self) -> Vec<Vec<S>> {
        self.points
            .iter()
            .map(|p| p.iter().map(|v| S::from_f64(*v)).collect())
            .collect()
    }
}

/// A projection direction separating all samples, with the sort order of
/// their projections and the padding `ε` (half the minimum gap).
#[derive(Clone, Debug, PartialEq)]
pub struct Direction<S: Scalar> {
    pub vector: Vec<S>,
    pub projections: Vec<S>,
    /// Sample indices (0-based) in ascending projection order.
    pub order: Vec<usize>,
    pub eps: S,
}

impl<S: Scalar> Direction<S> {
    /// Projects `points` onto `vector`; fails if two projections coincide.
    pub fn from_vector(vector: Vec<S>, points: &[Vec<S>]) -> Result<Self> {
        let projections: Vec<S> = points.iter().map(|p| dot(&vector, p)).collect();
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|a, b| projections[*a].partial_cmp(&projections[*b]).unwrap());
        let mut eps: Option<S> = None;
        for w in order.windows(2) {
            let gap = projections[w[1]].clone() - projections[w[0]].clone();
            if gap <= S::zero() {
                return Err(FtcError::DuplicatePoint(w[0].min(w[1]) + 1, w[0].max(w[1]) + 1));
            }
            if eps.as_ref().is_none_or(|e| gap < *e) {
                eps = Some(gap);
            }
        }
        let eps = eps.map_or_else(S::one, |g| g * S::half());
        Ok(Self { vector, projections, order, eps })
    }

    pub fn pad_low(&self) -> S {
        self.sorted(0) - self.eps.clone()
    }

    pub fn pad_high(&self) -> S {
        self.sorted(self.order.len() - 1) + self.eps.clone()
    }

    /// Projection of the sample at sorted position `p` (0-based).
    pub fn sorted(&self, p: usize) -> S {
        self.projections[self.order[p]].clone()
    }

    pub fn sorted_projections(&self) -> Vec<S> {
        self.order.iter().map(|&i| self.projections[i].clone()).collect()
    }

    /// Sorted position (0-based) of every sample.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &i) in self.order.iter().enumerate() {
            pos[i] = p;
        }
        pos
    }

    pub fn vector_f64(&self) -> Vec<f64> {
        self.vector.iter().map(Scalar::as_f64).collect()
    }
}

const RANDOM_ATTEMPTS: usize = 1000;
const DIRECTION_GRID: f64 = 4096.0;

/// Axis directions first, then seeded unit-sphere samples, until every
/// projection gap exceeds `1e-9 · scale`.
pub fn find_direction<S: Scalar>(points: &[Vec<f64>], seed: u64) -> Result<Direction<S>> {
    let d = points.first().map_or(1, Vec::len).max(1);
    let exact: Vec<Vec<S>> = points
        .iter()
        .map(|p| p.iter().map(|v| S::from_f64(*v)).collect())
        .collect();
    let scale = points
        .iter()
        .flat_map(|p| p.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let separates = |v: &[f64]| {
        let mut proj: Vec<f64> = points.iter().map(|p| p.iter().zip(v).map(|(a, b)| a * b).sum()).collect();
        proj.sort_by(|a, b| a.partial_cmp(b).unwrap());
        proj.windows(2).all(|w| w[1] - w[0] > 1e-9 * scale)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes = (0..d).map(|a| {
        let mut v = vec![0.0; d];
        v[a] = 1.0;
        v
    });
    let randoms = (0..RANDOM_ATTEMPTS).map(move |_| {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        // Short dyadic coordinates keep exact arithmetic on lifted weights cheap.
        v.into_iter().map(|x| (x / norm * DIRECTION_GRID).round() / DIRECTION_GRID).collect::<Vec<f64>>()
    });
    for v in axes.chain(randoms) {
        if separates(&v) {
            let vector = v.iter().map(|x| S::from_f64(*x)).collect();
            if let Ok(dir) = Direction::from_vector(vector, &exact) {
                return Ok(dir);
            }
        }
    }
    Err(FtcError::DirectionExhausted(d + RANDOM_ATTEMPTS))
}

/// Lower bound on the piece count of any continuous piecewise-linear
/// interpolant through `(x_i, z_i)`, with `x` strictly increasing.
///
/// Each nonzero change of chord slope needs a kink nearby, and the number of
/// sign alternations of those changes cannot exceed the number of kinks minus
/// one.
pub fn forced_pieces<S: Scalar>(xs: &[S], zs: &[S]) -> usize {
    let chords: Vec<S> = xs
        .windows(2)
        .zip(zs.windows(2))
        .map(|(x, z)| (z[1].clone() - z[0].clone()) / (x[1].clone() - x[0].clone()))
        .collect();
    let signs: Vec<bool> = chords
        .windows(2)
        .map(|c| c[1].clone() - c[0].clone())
        .filter(|d| !d.is_zero())
        .map(|d| d > S::zero())
        .collect();
    if signs.is_empty() {
        return 1;
    }
    2 + signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Zigzag instance on the line `x_i = i·u` forcing `piece_budget(K, N)`
/// pieces on every exact interpolant.
pub fn gen_adversarial(k: usize, n: usize, u: &[f64]) -> Result<FineTuneInstance> {
    if k < 3 || n < 1 || n > k {
        return Err(FtcError::InvalidRange(format!(
            "adversarial layout needs K >= 3 and 1 <= N <= K, got K={k}, N={n}"
        )));
    }
    if u.iter().all(|v| *v == 0.0) {
        return Err(FtcError::InvalidRange("direction u must be nonzero".into()));
    }
    let mut z = vec![0.0; k];
    let tune_set: Vec<usize>;
    let generator;
    if k >= 3 * n + 2 {
        tune_set = (1..=n).map(|i| 3 * i).collect();
        for (j, &t) in tune_set.iter().enumerate() {
            z[t - 1] = if j % 2 == 0 { -1.0 } else { 2.0 };
        }
        generator = "adversarial-spread";
    } else {
        tune_set = compressed_tune_set(k, n);
        fill_alternating_curvature(&mut z, &tune_set);
        generator = "adversarial-compressed";
    }
    let points = (1..=k)
        .map(|i| u.iter().map(|v| v * i as f64).collect())
        .collect();
    let mut inst = FineTuneInstance::new(points, z, tune_set)?;
    inst.generator = Some(generator.into());
    Ok(inst)
}

/// Spreads the `K − N` untuned indices over the `N + 1` gaps around the
/// tuned ones, at most two per gap.
fn compressed_tune_set(k: usize, n: usize) -> Vec<usize> {
    let untuned = k - n;
    let base = untuned / (n + 1);
    let extra = untuned % (n + 1);
    let mut t = Vec::with_capacity(n);
    let mut i = 0;
    for gap in 0..n {
        i += base + usize::from(gap < extra) + 1;
        t.push(i);
    }
    t
}

/// Chooses targets on `tune_set` so the second differences of `z` strictly
/// alternate in sign across all interior indices.
fn fill_alternating_curvature(z: &mut [f64], tune_set: &[usize]) {
    let k = z.len();
    let tuned = |i: usize| tune_set.binary_search(&i).is_ok();
    // Desired sign of the second difference at 1-based index i.
    let sigma = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
    let at = |z: &[f64], i: usize| if i >= 1 && i <= k { z[i - 1] } else { 0.0 };
    for &i in tune_set {
        let s = sigma(i);
        let mut v: f64 = 1.0;
        if i >= 3 {
            let c = at(z, i - 2) - 2.0 * at(z, i - 1);
            v = v.max((s * c).floor() + 1.0);
        }
        if i >= 2 && i < k && !tuned(i + 1) {
            v = v.max((-s * at(z, i - 1) / 2.0).floor() + 1.0);
        }
        z[i - 1] = -s * v;
    }
}

/// Features and labels for the scaling experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub seed: u64,
}

/// `x_i ~ N(0, I_d)`, `y_i ~ Unif[-1, 1]`.
pub fn gen_synthetic(k: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unif = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    let points = (0..k)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let labels = (0..k).map(|_| rng.sample(unif)).collect();
    Dataset { points, labels, seed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::piece_budget;
    use num_rational::BigRational;

    fn line(k: usize) -> Vec<Vec<f64>> {
        (1..=k).map(|i| vec![i as f64]).collect()
    }

    #[test]
    fn validation_examples() {
        assert!(FineTuneInstance::new(line(3), vec![0.0, 0.5, 0.0], vec![2]).is_ok());
        let dup = vec![vec![1.0, 2.0], vec![0.0, 0.0], vec![1.0, 2.0]];
        assert_eq!(
            FineTuneInstance::new(dup, vec![0.0; 3], vec![]).unwrap_err(),
            FtcError::DuplicatePoint(1, 3)
        );
        assert_eq!(
            FineTuneInstance::new(line(3), vec![0.0, 0.1, 0.0], vec![]).unwrap_err(),
            FtcError::NonzeroOffTarget { index: 2, value: 0.1 }
        );
        assert!(matches!(
            FineTuneInstance::new(line(3), vec![0.0; 3], vec![4]),
            Err(FtcError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn direction_examples() {
        let pts: Vec<Vec<f64>> = (1..=5).map(|i| vec![0.0, i as f64, 0.0]).collect();
        let dir = find_direction::<f64>(&pts, 0).unwrap();
        assert_eq!(dir.vector, vec![0.0, 1.0, 0.0]);
        let scalars = vec![vec![3.0], vec![-1.0], vec![2.5]];
        let dir = find_direction::<f64>(&scalars, 0).unwrap();
        assert_eq!(dir.projections, vec![3.0, -1.0, 2.5]);
        assert_eq!(dir.order, vec![1, 2, 0]);
        assert_eq!(dir.eps, 0.25);
        assert_eq!(dir.pad_low(), -1.25);
    }

    #[test]
    fn direction_separates_random_points() {
        let data = gen_synthetic(50, 10, 7);
        let dir = find_direction::<BigRational>(&data.points, 7).unwrap();
        let sorted = dir.sorted_projections();
        assert!(sorted.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn direction_needs_non_axis_vector() {
        // Every axis projection collides, the diagonal-ish sample does not.
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let dir = find_direction::<f64>(&pts, 3).unwrap();
        assert!(dir.vector.iter().all(|v| *v != 0.0));
    }

    #[test]
    fn adversarial_examples() {
        let u = [1.0];
        let a = gen_adversarial(14, 4, &u).unwrap();
        assert_eq!(a.tune_set, vec![3, 6, 9, 12]);
        assert_eq!((a.targets[5], a.targets[11], a.targets[2], a.targets[8]), (2.0, 2.0, -1.0, -1.0));
        let b = gen_adversarial(9, 4, &u).unwrap();
        assert_eq!(b.tune_set, vec![2, 4, 6, 8]);
        let c = gen_adversarial(5, 1, &u).unwrap();
        assert_eq!(c.tune_set, vec![3]);
        assert_eq!(c.targets[2], -1.0);
        for (inst, k, n) in [(a, 14, 4), (b, 9, 4), (c, 5, 1)] {
            let xs: Vec<f64> = (1..=k).map(|i| i as f64).collect();
            assert_eq!(forced_pieces(&xs, &inst.targets), piece_budget(k, n).unwrap());
        }
    }

    #[test]
    fn alternating_sign_compressed_targets_force_fewer_pieces() {
        // Targets −1, 2, −1, 2 on every other index: the chord slope between
        // a −1 and the following 2 lies between its neighbours, so one kink
        // can serve two slope changes.
        let xs: Vec<f64> = (1..=9).map(|i| i as f64).collect();
        let zs = [0.0, -1.0, 0.0, 2.0, 0.0, -1.0, 0.0, 2.0, 0.0];
        assert!(forced_pieces(&xs, &zs) < 8);
        // An explicit two-piece interpolant of the first four points.
        let f = |t: f64| if t <= 7.0 / 3.0 { 1.0 - t } else { 2.0 * t - 6.0 };
        for (x, z) in xs.iter().zip(zs).take(4) {
            assert!((f(*x) - z).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_examples() {
        let a = gen_synthetic(1000, 10, 5);
        assert_eq!(a.points.len(), 1000);
        assert!(a.points.iter().all(|p| p.len() == 10));
        assert!(a.labels.iter().all(|y| (-1.0..=1.0).contains(y)));
        assert_eq!(a, gen_synthetic(1000, 10, 5));
        assert_ne!(a, gen_synthetic(1000, 10, 6));
    }

    #[test]
    fn json_schema_uses_capital_k() {
        let inst = gen_adversarial(5, 1, &[1.0, 0.0]).unwrap();
        let v = serde_json::to_value(&inst).unwrap();
        assert_eq!(v["K"], 5);
        assert_eq!(v["d"], 2);
        let back: FineTuneInstance = serde_json::from_value(v).unwrap();
        assert_eq!(back, inst);
    }
}
