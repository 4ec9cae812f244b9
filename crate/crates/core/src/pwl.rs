//! Exact univariate piecewise-linear calculus.
//!
//! A [`Pwl1D`] is continuous by construction: it stores its breakpoints, one
//! slope per piece and the value at every breakpoint. Composition and
//! summation first collect every abscissa where the result can bend, then
//! read slopes off a sample point strictly inside each piece, so no slope is
//! ever obtained by differencing two nearby values.

use std::cmp::Ordering;

use serde_json::{json, Value};

use crate::error::{FtcError, Result};
use crate::scalar::{two, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Pwl1D<S: Scalar> {
    breakpoints: Vec<S>,
    slopes: Vec<S>,
    values: Vec<S>,
    // Used only when there are no breakpoints.
    anchor: (S, S),
}

fn cmp<S: Scalar>(a: &S, b: &S) -> Ordering {
    a.partial_cmp(b).expect("comparable scalars")
}

impl<S: Scalar> Pwl1D<S> {
    /// Builds from breakpoints, slopes and a single point the function passes
    /// through. The result is canonical.
    pub fn new(breakpoints: Vec<S>, slopes: Vec<S>, anchor_x: S, anchor_y: S) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(FtcError::InvalidRange(format!(
                "{} slopes for {} breakpoints",
                slopes.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FtcError::InvalidRange(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if breakpoints.is_empty() {
            let intercept = anchor_y - slopes[0].clone() * anchor_x;
            return Ok(Self::linear(slopes[0].clone(), intercept));
        }
        // Value at the first breakpoint by integrating from the anchor.
        let mut values = Vec::with_capacity(breakpoints.len());
        let k = breakpoints.partition_point(|b| *b <= anchor_x);
        let v0 = if k == 0 {
            anchor_y - slopes[0].clone() * (anchor_x - breakpoints[0].clone())
        } else {
            let mut v = anchor_y - slopes[k].clone() * (anchor_x - breakpoints[k - 1].clone());
            for i in (1..k).rev() {
                v = v - slopes[i].clone() * (breakpoints[i].clone() - breakpoints[i - 1].clone());
            }
            v
        };
        values.push(v0);
        for i in 1..breakpoints.len() {
            let prev = values[i - 1].clone();
            values.push(
                prev + slopes[i].clone() * (breakpoints[i].clone() - breakpoints[i - 1].clone()),
            );
        }
        Ok(Self::from_parts(breakpoints, slopes, values))
    }

    /// Internal constructor: values are given at every breakpoint.
    fn from_parts(breakpoints: Vec<S>, slopes: Vec<S>, values: Vec<S>) -> Self {
        debug_assert_eq!(slopes.len(), breakpoints.len() + 1);
        debug_assert_eq!(values.len(), breakpoints.len());
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut vals = Vec::with_capacity(values.len());
        let mut slopes = slopes.into_iter();
        let mut sl = vec![slopes.next().expect("at least one slope")];
        let mut reference = None;
        for ((b, v), s) in breakpoints.into_iter().zip(values).zip(slopes) {
            if reference.is_none() {
                reference = Some((b.clone(), v.clone()));
            }
            if sl.last().unwrap().slopes_equal(&s) {
                continue;
            }
            bps.push(b);
            vals.push(v);
            sl.push(s);
        }
        if bps.is_empty() {
            let (x, y) = reference.unwrap_or((S::zero(), S::zero()));
            let intercept = y - sl[0].clone() * x;
            return Self::linear(sl.pop().unwrap(), intercept);
        }
        Self {
            breakpoints: bps,
            slopes: sl,
            values: vals,
            anchor: (S::zero(), S::zero()),
        }
    }

    pub fn constant(c: S) -> Self {
        Self {
            breakpoints: vec![],
            slopes: vec![S::zero()],
            values: vec![],
            anchor: (S::zero(), c),
        }
    }

    /// t ↦ slope·t + intercept.
    pub fn linear(slope: S, intercept: S) -> Self {
        Self {
            breakpoints: vec![],
            slopes: vec![slope],
            values: vec![],
            anchor: (S::zero(), intercept),
        }
    }

    pub fn identity() -> Self {
        Self::linear(S::one(), S::zero())
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[S] {
        &self.slopes
    }

    /// Values at the breakpoints.
    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Point the function passes through: the first breakpoint if any.
    pub fn anchor(&self) -> (S, S) {
        match self.breakpoints.first() {
            Some(b) => (b.clone(), self.values[0].clone()),
            None => self.anchor.clone(),
        }
    }

    pub fn piece_count(&self) -> usize {
        self.slopes.len()
    }

    pub fn eval(&self, t: &S) -> S {
        if self.breakpoints.is_empty() {
            let (x, y) = &self.anchor;
            return y.clone() + self.slopes[0].clone() * (t.clone() - x.clone());
        }
        let k = self.breakpoints.partition_point(|b| b <= t);
        if k == 0 {
            self.values[0].clone() + self.slopes[0].clone() * (t.clone() - self.breakpoints[0].clone())
        } else {
            self.values[k - 1].clone()
                + self.slopes[k].clone() * (t.clone() - self.breakpoints[k - 1].clone())
        }
    }

    /// Slope of the piece containing `t`; at a breakpoint, the piece to its
    /// right.
    pub fn slope_at(&self, t: &S) -> S {
        let k = self.breakpoints.partition_point(|b| b <= t);
        self.slopes[k].clone()
    }

    /// One abscissa strictly inside each piece, left to right.
    fn piece_samples(bps: &[S]) -> Vec<S> {
        if bps.is_empty() {
            return vec![S::zero()];
        }
        let mut out = Vec::with_capacity(bps.len() + 1);
        out.push(bps[0].clone() - S::one());
        for w in bps.windows(2) {
            out.push((w[0].clone() + w[1].clone()) / two::<S>());
        }
        out.push(bps[bps.len() - 1].clone() + S::one());
        out
    }

    fn sorted_unique(mut v: Vec<S>) -> Vec<S> {
        v.sort_by(cmp);
        v.dedup_by(|a, b| a == b);
        v
    }

    /// Builds the function that is affine between consecutive `candidates`
    /// (and beyond the ends), from its value and derivative oracles.
    fn assemble(candidates: Vec<S>, value: impl Fn(&S) -> S, slope: impl Fn(&S) -> S) -> Self {
        let bps = Self::sorted_unique(candidates);
        let slopes: Vec<S> = Self::piece_samples(&bps).iter().map(&slope).collect();
        if bps.is_empty() {
            return Self::linear(slopes[0].clone(), value(&S::zero()));
        }
        let values: Vec<S> = bps.iter().map(&value).collect();
        Self::from_parts(bps, slopes, values)
    }

    /// x ↦ f(a·x + b).
    pub fn affine_pre(&self, a: &S, b: &S) -> Self {
        if a.is_zero() {
            return Self::constant(self.eval(b));
        }
        let bps: Vec<S> = self
            .breakpoints
            .iter()
            .map(|p| (p.clone() - b.clone()) / a.clone())
            .collect();
        let f = |x: &S| self.eval(&(a.clone() * x.clone() + b.clone()));
        let d = |x: &S| self.slope_at(&(a.clone() * x.clone() + b.clone())) * a.clone();
        Self::assemble(bps, f, d)
    }

    /// outer ∘ self.
    pub fn compose_into(&self, outer: &Self) -> Self {
        let mut candidates = self.breakpoints.clone();
        let n = self.breakpoints.len();
        for k in 0..=n {
            let s = &self.slopes[k];
            if s.is_zero() {
                continue;
            }
            let (xr, vr) = if n == 0 {
                self.anchor.clone()
            } else if k == 0 {
                (self.breakpoints[0].clone(), self.values[0].clone())
            } else {
                (self.breakpoints[k - 1].clone(), self.values[k - 1].clone())
            };
            for c in &outer.breakpoints {
                let t = xr.clone() + (c.clone() - vr.clone()) / s.clone();
                let above = k == 0 || t > self.breakpoints[k - 1];
                let below = k == n || t < self.breakpoints[k];
                if above && below {
                    candidates.push(t);
                }
            }
        }
        let f = |x: &S| outer.eval(&self.eval(x));
        let d = |x: &S| outer.slope_at(&self.eval(x)) * self.slope_at(x);
        Self::assemble(candidates, f, d)
    }

    pub fn apply_activation(&self, act: &Activation<S>) -> Self {
        self.compose_into(&act.pwl())
    }

    /// Σ cᵢ·fᵢ + bias.
    pub fn weighted_sum(terms: &[(S, &Pwl1D<S>)], bias: &S) -> Self {
        let live: Vec<&(S, &Pwl1D<S>)> = terms.iter().filter(|(c, _)| !c.is_zero()).collect();
        let candidates: Vec<S> = live
            .iter()
            .flat_map(|(_, f)| f.breakpoints.iter().cloned())
            .collect();
        let f = |x: &S| {
            live.iter()
                .fold(bias.clone(), |acc, (c, g)| acc + c.clone() * g.eval(x))
        };
        let d = |x: &S| {
            live.iter()
                .fold(S::zero(), |acc, (c, g)| acc + c.clone() * g.slope_at(x))
        };
        Self::assemble(candidates, f, d)
    }

    /// True when both functions agree on `[low, ∞)`, or everywhere when
    /// `low` is `None`.
    pub fn equal_on(&self, other: &Self, low: Option<&S>) -> bool {
        let diff = Self::weighted_sum(&[(S::one(), self), (-S::one(), other)], &S::zero());
        let zero = |v: &S| v.slopes_equal(&S::zero());
        match low {
            None => diff.piece_count() == 1 && zero(&diff.slopes[0]) && zero(&diff.eval(&S::zero())),
            Some(l) => {
                if !zero(&diff.eval(l)) {
                    return false;
                }
                let first = diff.breakpoints.partition_point(|b| b <= l);
                diff.slopes[first..].iter().all(zero)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let (x, y) = self.anchor();
        json!({
            "breakpoints": self.breakpoints.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "slopes": self.slopes.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "anchor": {"x": x.to_json(), "y": y.to_json()},
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let list = |key: &str| -> Result<Vec<S>> {
            v.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| FtcError::Parse(format!("missing array {key}")))?
                .iter()
                .map(S::from_json)
                .collect()
        };
        let anchor = v
            .get("anchor")
            .ok_or_else(|| FtcError::Parse("missing anchor".into()))?;
        let field = |k: &str| {
            anchor
                .get(k)
                .ok_or_else(|| FtcError::Parse(format!("missing anchor.{k}")))
                .and_then(S::from_json)
        };
        Self::new(list("breakpoints")?, list("slopes")?, field("x")?, field("y")?)
    }
}

/// Minimum piece count forced on any exact interpolant of the adversarial
/// zigzag instance with `k` samples and `n` tuned ones.
pub fn piece_budget(k: usize, n: usize) -> Result<usize> {
    if k < 3 || n < 1 || n > k {
        return Err(FtcError::InvalidRange(format!(
            "piece budget needs 1 <= N <= K and K >= 3, got K={k}, N={n}"
        )));
    }
    Ok(if k >= 3 * n + 2 { 3 * n + 1 } else { k - 1 })
}

/// Named scalar activations. Every kind is a finite piecewise-linear map.
#[derive(Clone, Debug, PartialEq)]
pub enum Activation<S: Scalar> {
    Relu,
    HardTanh,
    /// Zero outside `[center − δ, center + δ]`, a tent of height `center`
    /// peaking at `center`.
    Bump { center: S, halfwidth: S },
    /// Identity below 1, linear descent to 0 on `[1, 1 + δ]`, 0 above.
    TailCut { delta: S },
    /// 0 below −1−δ, ramp to −1 at −1, identity on [−1, 1], ramp to 0 at
    /// 1+δ, 0 above.
    WindowLinear { delta: S },
    Identity,
}

impl<S: Scalar> Activation<S> {
    pub fn kind(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::HardTanh => "hard_tanh",
            Activation::Bump { .. } => "bump",
            Activation::TailCut { .. } => "tail_cut",
            Activation::WindowLinear { .. } => "window_linear",
            Activation::Identity => "identity",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |d: &S, what: &str| {
            if *d > S::zero() {
                Ok(())
            } else {
                Err(FtcError::InvalidRange(format!("{what} must be positive")))
            }
        };
        match self {
            Activation::Bump { center, halfwidth } => {
                if center.is_zero() {
                    return Err(FtcError::InvalidRange("bump center must be nonzero".into()));
                }
                positive(halfwidth, "bump halfwidth")
            }
            Activation::TailCut { delta } | Activation::WindowLinear { delta } => {
                positive(delta, "ramp width")
            }
            _ => Ok(()),
        }
    }

    pub fn pwl(&self) -> Pwl1D<S> {
        let one = S::one;
        let parts = |b: Vec<S>, s: Vec<S>, v: Vec<S>| Pwl1D::from_parts(b, s, v);
        match self {
            Activation::Relu => parts(vec![S::zero()], vec![S::zero(), one()], vec![S::zero()]),
            Activation::HardTanh => parts(
                vec![-one(), one()],
                vec![S::zero(), one(), S::zero()],
                vec![-one(), one()],
            ),
            Activation::Bump { center: c, halfwidth: d } => {
                let k = c.clone() / d.clone();
                parts(
                    vec![c.clone() - d.clone(), c.clone(), c.clone() + d.clone()],
                    vec![S::zero(), k.clone(), -k, S::zero()],
                    vec![S::zero(), c.clone(), S::zero()],
                )
            }
            Activation::TailCut { delta } => parts(
                vec![one(), one() + delta.clone()],
                vec![one(), -(one() / delta.clone()), S::zero()],
                vec![one(), S::zero()],
            ),
            Activation::WindowLinear { delta } => {
                let k = one() / delta.clone();
                parts(
                    vec![-one() - delta.clone(), -one(), one(), one() + delta.clone()],
                    vec![S::zero(), -k.clone(), one(), -k, S::zero()],
                    vec![S::zero(), -one(), one(), S::zero()],
                )
            }
            Activation::Identity => Pwl1D::identity(),
        }
    }

    /// Pointwise evaluation without building the piecewise form.
    pub fn apply(&self, t: &S) -> S {
        let one = S::one();
        match self {
            Activation::Relu => {
                if *t > S::zero() {
                    t.clone()
                } else {
                    S::zero()
                }
            }
            Activation::HardTanh => {
                if *t <= -one.clone() {
                    -one
                } else if *t >= one {
                    one
                } else {
                    t.clone()
                }
            }
            Activation::Bump { center, halfwidth } => {
                let dist = (t.clone() - center.clone()).abs();
                if dist >= *halfwidth {
                    S::zero()
                } else {
                    center.clone() * (halfwidth.clone() - dist) / halfwidth.clone()
                }
            }
            Activation::TailCut { delta } => {
                if *t <= one {
                    t.clone()
                } else if *t >= one.clone() + delta.clone() {
                    S::zero()
                } else {
                    (one + delta.clone() - t.clone()) / delta.clone()
                }
            }
            Activation::WindowLinear { delta } => {
                let a = t.abs();
                if a <= one {
                    t.clone()
                } else if a >= one.clone() + delta.clone() {
                    S::zero()
                } else {
                    t.signum() * (one + delta.clone() - a) / delta.clone()
                }
            }
            Activation::Identity => t.clone(),
        }
    }

    /// ReLU-equivalent neuron count, assuming a bounded-below input domain
    /// where one is needed.
    pub fn relu_count(&self) -> usize {
        match self {
            Activation::Relu | Activation::Identity => 1,
            Activation::HardTanh | Activation::TailCut { .. } => 2,
            Activation::Bump { .. } => 3,
            Activation::WindowLinear { .. } => 4,
        }
    }

    pub fn to_json(&self) -> Value {
        let params = match self {
            Activation::Bump { center, halfwidth } => {
                json!({"center": center.to_json(), "halfwidth": halfwidth.to_json()})
            }
            Activation::TailCut { delta } | Activation::WindowLinear { delta } => {
                json!({"delta": delta.to_json()})
            }
            _ => json!({}),
        };
        json!({"kind": self.kind(), "params": params})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| FtcError::Parse("activation without kind".into()))?;
        let param = |k: &str| -> Result<S> {
            v.get("params")
                .and_then(|p| p.get(k))
                .ok_or_else(|| FtcError::Parse(format!("activation {kind} missing {k}")))
                .and_then(S::from_json)
        };
        let act = match kind {
            "relu" => Activation::Relu,
            "hard_tanh" => Activation::HardTanh,
            "bump" => Activation::Bump {
                center: param("center")?,
                halfwidth: param("halfwidth")?,
            },
            "tail_cut" => Activation::TailCut { delta: param("delta")? },
            "window_linear" => Activation::WindowLinear { delta: param("delta")? },
            "identity" => Activation::Identity,
            other => return Err(FtcError::Parse(format!("unknown activation {other}"))),
        };
        act.validate()?;
        Ok(act)
    }

    /// Writes the activation as `constant + Σ coeff·relu(direction·t + shift)`.
    ///
    /// A flat left tail gives right-facing terms and a flat right tail gives
    /// left-facing ones; both are exact on all of ℝ. Otherwise the expansion
    /// starts at `domain_low` and is exact only on `[domain_low, ∞)`.
    pub fn to_relus(&self, domain_low: Option<&S>) -> Result<ReluDecomposition<S>> {
        let p = self.pwl();
        let bps = p.breakpoints();
        let sl = p.slopes();
        let jumps = |from: usize| {
            (from..bps.len())
                .filter_map(|i| {
                    let j = sl[i + 1].clone() - sl[i].clone();
                    (!j.is_zero()).then(|| (i, j))
                })
                .collect::<Vec<_>>()
        };
        if sl[0].is_zero() && !bps.is_empty() {
            let terms = jumps(0)
                .into_iter()
                .map(|(i, j)| ReluTerm::right(&bps[i], j))
                .collect();
            return Ok(ReluDecomposition {
                terms,
                constant: p.values()[0].clone(),
                domain_low: None,
            });
        }
        if sl[sl.len() - 1].is_zero() && !bps.is_empty() {
            let terms = jumps(0)
                .into_iter()
                .map(|(i, j)| ReluTerm::left(&bps[i], j))
                .collect();
            return Ok(ReluDecomposition {
                terms,
                constant: p.values()[bps.len() - 1].clone(),
                domain_low: None,
            });
        }
        let low = domain_low.ok_or_else(|| {
            FtcError::UnboundedDomain(format!(
                "{} has no flat tail; a finite lower bound on its inputs is required",
                self.kind()
            ))
        })?;
        let first = bps.partition_point(|b| b <= low);
        let mut terms = vec![ReluTerm::right(low, p.slope_at(low))];
        terms.extend(
            jumps(first)
                .into_iter()
                .map(|(i, j)| ReluTerm::right(&bps[i], j)),
        );
        terms.retain(|t| !t.coeff.is_zero());
        Ok(ReluDecomposition {
            terms,
            constant: p.eval(low),
            domain_low: Some(low.clone()),
        })
    }
}

/// `coeff · relu(direction·t + shift)` with `direction = ±1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluTerm<S: Scalar> {
    pub direction: S,
    pub shift: S,
    pub coeff: S,
}

impl<S: Scalar> ReluTerm<S> {
    fn right(knot: &S, coeff: S) -> Self {
        Self {
            direction: S::one(),
            shift: -knot.clone(),
            coeff,
        }
    }
    fn left(knot: &S, coeff: S) -> Self {
        Self {
            direction: -S::one(),
            shift: knot.clone(),
            coeff,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReluDecomposition<S: Scalar> {
    pub terms: Vec<ReluTerm<S>>,
    pub constant: S,
    /// Set when the expansion is exact only from this point upward.
    pub domain_low: Option<S>,
}

impl<S: Scalar> ReluDecomposition<S> {
    pub fn relu_count(&self) -> usize {
        self.terms.len()
    }

    pub fn eval(&self, t: &S) -> S {
        self.terms.iter().fold(self.constant.clone(), |acc, term| {
            let pre = term.direction.clone() * t.clone() + term.shift.clone();
            if pre > S::zero() {
                acc + term.coeff.clone() * pre
            } else {
                acc
            }
        })
    }

    pub fn to_pwl(&self) -> Pwl1D<S> {
        let relu = Activation::Relu.pwl();
        let parts: Vec<Pwl1D<S>> = self
            .terms
            .iter()
            .map(|t| relu.affine_pre(&t.direction, &t.shift))
            .collect();
        let terms: Vec<(S, &Pwl1D<S>)> = self
            .terms
            .iter()
            .zip(&parts)
            .map(|(t, p)| (t.coeff.clone(), p))
            .collect();
        Pwl1D::weighted_sum(&terms, &self.constant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn relu() -> Pwl1D<f64> {
        Activation::Relu.pwl()
    }

    #[test]
    fn affine_pre_examples() {
        assert_eq!(relu().affine_pre(&1.0, &0.0), relu());
        let mirrored = relu().affine_pre(&-1.0, &0.0);
        assert_eq!(mirrored.slopes(), &[-1.0, 0.0]);
        assert_eq!(mirrored.eval(&-3.0), 3.0);
        let ht = Activation::<f64>::HardTanh.pwl().affine_pre(&2.0, &0.0);
        assert_eq!(ht.breakpoints(), &[-0.5, 0.5]);
        assert_eq!(ht.piece_count(), 3);
        assert_eq!(relu().affine_pre(&0.0, &2.0).piece_count(), 1);
    }

    #[test]
    fn activation_examples() {
        let neg = Pwl1D::constant(-1.0).apply_activation(&Activation::Relu);
        assert_eq!(neg.piece_count(), 1);
        assert_eq!(neg.eval(&5.0), 0.0);
        let id = Pwl1D::<f64>::identity().apply_activation(&Activation::Relu);
        assert_eq!(id, relu());
        let three_t = Pwl1D::linear(q(3, 1), q(0, 1)).apply_activation(&Activation::HardTanh);
        assert_eq!(three_t.breakpoints(), &[q(-1, 3), q(1, 3)]);
        assert_eq!(three_t.piece_count(), 3);
    }

    #[test]
    fn weighted_sum_examples() {
        let r = relu();
        assert_eq!(Pwl1D::weighted_sum(&[(1.0, &r), (-1.0, &r)], &0.0).piece_count(), 1);
        let m = r.affine_pre(&-1.0, &0.0);
        let abs = Pwl1D::weighted_sum(&[(1.0, &r), (1.0, &m)], &0.0);
        assert_eq!(abs.piece_count(), 2);
        assert_eq!(abs.eval(&-2.5), 2.5);
        let shifted: Vec<Pwl1D<f64>> = (0..7).map(|i| r.affine_pre(&1.0, &(-(i as f64)))).collect();
        let terms: Vec<(f64, &Pwl1D<f64>)> = shifted
            .iter()
            .enumerate()
            .map(|(i, f)| (if i % 2 == 0 { 1.0 } else { -2.0 }, f))
            .collect();
        assert_eq!(Pwl1D::weighted_sum(&terms, &0.0).piece_count(), 8);
    }

    #[test]
    fn piece_count_examples() {
        assert_eq!(Pwl1D::constant(3.0).piece_count(), 1);
        assert_eq!(relu().piece_count(), 2);
        assert_eq!(Activation::<f64>::HardTanh.pwl().piece_count(), 3);
        assert_eq!(Activation::TailCut { delta: 0.5 }.pwl().piece_count(), 3);
        assert_eq!(Activation::Bump { center: 2.0, halfwidth: 0.5 }.pwl().piece_count(), 4);
        assert_eq!(Activation::WindowLinear { delta: 0.5 }.pwl().piece_count(), 5);
    }

    #[test]
    fn piece_budget_examples() {
        assert_eq!(piece_budget(14, 4).unwrap(), 13);
        assert_eq!(piece_budget(9, 4).unwrap(), 8);
        assert_eq!(piece_budget(5, 1).unwrap(), 4);
        assert!(piece_budget(2, 1).is_err());
        assert!(piece_budget(5, 0).is_err());
        assert!(piece_budget(5, 6).is_err());
    }

    #[test]
    fn constructor_merges_equal_slopes() {
        let f = Pwl1D::new(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 2.0, 2.0], 0.0, 0.0).unwrap();
        assert_eq!(f.breakpoints(), &[1.0]);
        assert_eq!(f.eval(&3.0), 1.0 + 2.0 * 2.0);
        assert!(Pwl1D::new(vec![1.0, 0.0], vec![0.0, 1.0, 0.0], 0.0, 0.0).is_err());
        assert!(Pwl1D::new(vec![0.0], vec![0.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn anchor_anywhere_reconstructs_same_function() {
        let f = Pwl1D::new(vec![-1.0, 2.0], vec![3.0, -1.0, 0.5], 5.0, 1.0).unwrap();
        assert_eq!(f.eval(&5.0), 1.0);
        assert_eq!(f.eval(&2.0), 1.0 - 0.5 * 3.0);
        let g = Pwl1D::new(vec![-1.0, 2.0], vec![3.0, -1.0, 0.5], -1.0, f.eval(&-1.0)).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn activation_pointwise_matches_pwl() {
        let acts = [
            Activation::Relu,
            Activation::HardTanh,
            Activation::Bump { center: q(-3, 4), halfwidth: q(1, 8) },
            Activation::TailCut { delta: q(1, 3) },
            Activation::WindowLinear { delta: q(1, 5) },
            Activation::Identity,
        ];
        for act in &acts {
            let p = act.pwl();
            for i in -40..=40 {
                let t = q(i, 16);
                assert_eq!(act.apply(&t), p.eval(&t), "{} at {}", act.kind(), t);
            }
        }
    }

    #[test]
    fn relu_decomposition_counts_and_round_trips() {
        let cases: Vec<(Activation<Q>, usize)> = vec![
            (Activation::Relu, 1),
            (Activation::HardTanh, 2),
            (Activation::Bump { center: q(2, 1), halfwidth: q(1, 2) }, 3),
            (Activation::TailCut { delta: q(1, 4) }, 2),
            (Activation::WindowLinear { delta: q(1, 4) }, 4),
        ];
        for (act, n) in cases {
            let dec = act.to_relus(None).unwrap();
            assert_eq!(dec.relu_count(), n, "{}", act.kind());
            assert_eq!(dec.relu_count(), act.relu_count());
            assert!(dec.domain_low.is_none());
            assert!(dec.to_pwl().equal_on(&act.pwl(), None), "{}", act.kind());
        }
    }

    #[test]
    fn hard_tanh_decomposition_is_the_textbook_one() {
        let dec = Activation::<Q>::HardTanh.to_relus(None).unwrap();
        assert_eq!(dec.constant, q(-1, 1));
        let shifts: Vec<Q> = dec.terms.iter().map(|t| t.shift.clone()).collect();
        let coeffs: Vec<Q> = dec.terms.iter().map(|t| t.coeff.clone()).collect();
        assert_eq!(shifts, vec![q(1, 1), q(-1, 1)]);
        assert_eq!(coeffs, vec![q(1, 1), q(-1, 1)]);
    }

    #[test]
    fn bump_decomposition_slope_changes() {
        let dec = Activation::Bump { center: q(2, 1), halfwidth: q(1, 2) }
            .to_relus(None)
            .unwrap();
        let coeffs: Vec<Q> = dec.terms.iter().map(|t| t.coeff.clone()).collect();
        assert_eq!(coeffs, vec![q(4, 1), q(-8, 1), q(4, 1)]);
    }

    #[test]
    fn identity_needs_a_lower_bound() {
        let id = Activation::<Q>::Identity;
        assert!(matches!(id.to_relus(None), Err(FtcError::UnboundedDomain(_))));
        let low = q(-7, 2);
        let dec = id.to_relus(Some(&low)).unwrap();
        assert_eq!(dec.relu_count(), 1);
        assert!(dec.to_pwl().equal_on(&id.pwl(), Some(&low)));
        assert!(!dec.to_pwl().equal_on(&id.pwl(), None));
        for i in -7..20 {
            let t = q(i, 2);
            assert_eq!(dec.eval(&t), t);
        }
    }

    #[test]
    fn bounded_domain_decomposition_of_sloped_tails() {
        // Slope on both tails: a bounded-below expansion is required.
        let act = Activation::<Q>::Identity;
        let dec = act.to_relus(Some(&q(3, 1))).unwrap();
        assert_eq!(dec.constant, q(3, 1));
    }

    #[test]
    fn json_round_trip() {
        let f = Pwl1D::new(vec![q(-1, 3), q(2, 7)], vec![q(1, 1), q(-5, 2), q(0, 1)], q(0, 1), q(1, 9))
            .unwrap();
        let back = Pwl1D::<Q>::from_json(&f.to_json()).unwrap();
        assert_eq!(f, back);
        let act = Activation::Bump { center: q(-1, 2), halfwidth: q(1, 16) };
        assert_eq!(Activation::<Q>::from_json(&act.to_json()).unwrap(), act);
        let bad = serde_json::json!({"kind": "bump", "params": {"center": 0.0, "halfwidth": 1.0}});
        assert!(Activation::<f64>::from_json(&bad).is_err());
    }
}
