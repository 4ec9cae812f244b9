//! Numeric back ends shared by every construction.
//!
//! `f64` is the default. `BigRational` gives exact arithmetic for
//! certification runs: every builder formula is rational in its inputs, so a
//! rational build either verifies with zero error or not at all.

use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::FtcError;

/// Arithmetic used by piecewise-linear calculus, networks and builders.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// Short tag recorded in serialized networks.
    const MODE: &'static str;

    /// Exact conversion for rationals; identity for floats.
    fn from_f64(v: f64) -> Self;
    fn from_i64(v: i64) -> Self;
    fn as_f64(&self) -> f64;
    /// Slope comparison used when merging pieces.
    fn slopes_equal(&self, other: &Self) -> bool;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self, FtcError>;
    fn is_finite(&self) -> bool;
    /// Pivot test for elimination: exact zero for rationals, relative to
    /// `scale` for floats.
    fn negligible(&self, scale: &Self) -> bool;

    fn half() -> Self {
        Self::from_i64(1) / Self::from_i64(2)
    }

    /// Plain dot product; see [`dot`].
    fn sum_products(w: &[Self], x: &[Self]) -> Self {
        let mut acc = Self::zero();
        for (a, b) in w.iter().zip(x) {
            if !a.is_zero() && !b.is_zero() {
                acc = acc + a.clone() * b.clone();
            }
        }
        acc
    }

    /// `self − f·p`, the elimination update.
    fn sub_mul(&self, f: &Self, p: &Self) -> Self {
        self.clone() - f.clone() * p.clone()
    }

    /// Dot product evaluated as if in twice the working precision.
    fn dot_accurate(w: &[Self], x: &[Self]) -> Self {
        dot(w, x)
    }
}

impl Scalar for f64 {
    const MODE: &'static str = "f64";

    fn from_f64(v: f64) -> Self {
        v
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn slopes_equal(&self, other: &Self) -> bool {
        let scale = 1f64.max(self.abs()).max(other.abs());
        (self - other).abs() <= 1e-12 * scale
    }
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
    fn from_json(v: &Value) -> Result<Self, FtcError> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| FtcError::Parse(format!("bad number {n}"))),
            Value::String(s) => parse_ratio(s).map(|r| r.as_f64()),
            other => Err(FtcError::Parse(format!("expected number, got {other}"))),
        }
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn negligible(&self, scale: &Self) -> bool {
        self.abs() <= 1e-12 * scale.abs().max(1.0)
    }
    fn dot_accurate(w: &[Self], x: &[Self]) -> Self {
        // Compensated summation of error-free products.
        let (mut sum, mut err) = (0.0f64, 0.0f64);
        for (a, b) in w.iter().zip(x) {
            let p = a * b;
            let pe = a.mul_add(*b, -p);
            let s = sum + p;
            let bb = s - sum;
            err += (sum - (s - bb)) + (p - bb) + pe;
            sum = s;
        }
        sum + err
    }
}

impl Scalar for BigRational {
    const MODE: &'static str = "rational";

    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite float")
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn as_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
    fn slopes_equal(&self, other: &Self) -> bool {
        self == other
    }
    fn to_json(&self) -> Value {
        Value::String(format!("{}/{}", self.numer(), self.denom()))
    }
    fn from_json(v: &Value) -> Result<Self, FtcError> {
        match v {
            Value::String(s) => parse_ratio(s),
            Value::Number(n) => {
                let f = n
                    .as_f64()
                    .ok_or_else(|| FtcError::Parse(format!("bad number {n}")))?;
                BigRational::from_float(f)
                    .ok_or_else(|| FtcError::Parse(format!("non-finite {f}")))
            }
            other => Err(FtcError::Parse(format!("expected rational, got {other}"))),
        }
    }
    fn is_finite(&self) -> bool {
        true
    }
    fn negligible(&self, _scale: &Self) -> bool {
        self.is_zero()
    }
    /// Normalizes once instead of after the product and again after the
    /// difference.
    fn sub_mul(&self, f: &Self, p: &Self) -> Self {
        let fp_den = f.denom() * p.denom();
        let fp_num = f.numer() * p.numer();
        if fp_den == *self.denom() {
            return BigRational::new(self.numer() - fp_num, fp_den);
        }
        BigRational::new(self.numer() * &fp_den - fp_num * self.denom(), self.denom() * fp_den)
    }
    /// One unreduced fraction for the whole sum, normalized once at the end.
    fn sum_products(w: &[Self], x: &[Self]) -> Self {
        let mut num = BigInt::zero();
        let mut den = BigInt::from(1);
        for (a, b) in w.iter().zip(x) {
            if a.is_zero() || b.is_zero() {
                continue;
            }
            let pn = a.numer() * b.numer();
            let pd = a.denom() * b.denom();
            if pd == den {
                num += pn;
            } else if (&den % &pd).is_zero() {
                num += pn * (&den / &pd);
            } else if (&pd % &den).is_zero() {
                num = num * (&pd / &den) + pn;
                den = pd;
            } else {
                num = num * &pd + pn * &den;
                den *= pd;
            }
        }
        BigRational::new(num, den)
    }
}

fn parse_ratio(s: &str) -> Result<BigRational, FtcError> {
    let bad = || FtcError::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => match BigInt::from_str(s.trim()) {
            Ok(n) => Ok(BigRational::from_integer(n)),
            Err(_) => {
                let f: f64 = s.trim().parse().map_err(|_| bad())?;
                BigRational::from_float(f).ok_or_else(bad)
            }
        },
    }
}

/// Correctly scaled conversion that survives numerators and denominators
/// far beyond the f64 range.
fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            let q = n / d;
            if q.is_finite() && (q != 0.0 || r.is_zero()) {
                return q;
            }
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = nb - db - 60;
    let scaled = if shift >= 0 {
        r.numer().clone() / (r.denom().clone() << (shift as usize))
    } else {
        (r.numer().clone() << ((-shift) as usize)) / r.denom().clone()
    };
    scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift as i32)
}

pub fn smax<S: Scalar>(a: &S, b: &S) -> S {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn smin<S: Scalar>(a: &S, b: &S) -> S {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Dot product that skips zero weights; rational multiplication by zero is
/// not free.
pub fn dot<S: Scalar>(w: &[S], x: &[S]) -> S {
    S::sum_products(w, x)
}

/// Converts a whole vector between back ends through `f64` (exact into
/// rationals, rounding out of them).
pub fn convert_vec<A: Scalar, B: Scalar>(v: &[A]) -> Vec<B> {
    v.iter().map(|x| B::from_f64(x.as_f64())).collect()
}

pub fn two<S: Scalar>() -> S {
    S::one() + S::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_json_round_trip_is_exact() {
        let r = BigRational::new(BigInt::from(-7), BigInt::from(3));
        let v = r.to_json();
        assert_eq!(v, Value::String("-7/3".into()));
        assert_eq!(BigRational::from_json(&v).unwrap(), r);
    }

    #[test]
    fn float_to_rational_is_exact() {
        let x = 0.1f64;
        let r = BigRational::from_f64(x);
        assert_eq!(r.as_f64(), x);
        assert_ne!(r, BigRational::new(1.into(), 10.into()));
    }

    #[test]
    fn huge_rationals_convert_to_f64() {
        let big = BigInt::from(1) << 2000usize;
        let r = BigRational::new(big.clone() * BigInt::from(3), big);
        assert_eq!(r.as_f64(), 3.0);
        let tiny = BigRational::new(BigInt::from(1), BigInt::from(1) << 1100usize);
        assert!(tiny.as_f64() == 0.0 || tiny.as_f64() < 1e-300);
    }

    #[test]
    fn compensated_dot_recovers_cancelled_terms() {
        let w = [1e16, 1.0, -1e16];
        let x = [1.0, 1.0, 1.0];
        assert_eq!(dot(&w, &x), 0.0);
        assert_eq!(f64::dot_accurate(&w, &x), 1.0);
    }

    #[test]
    fn float_slope_tolerance() {
        assert!(1.0f64.slopes_equal(&(1.0 + 1e-14)));
        assert!(!1.0f64.slopes_equal(&(1.0 + 1e-9)));
    }

    #[test]
    fn parses_plain_integers_and_decimals() {
        assert_eq!(
            BigRational::from_json(&Value::String("5".into())).unwrap(),
            BigRational::from_i64(5)
        );
        assert_eq!(f64::from_json(&Value::String("1/4".into())).unwrap(), 0.25);
    }
}
