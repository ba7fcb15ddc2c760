//! Signed magnitudes `±exp^h(v)` for quantities whose exponent alone overflows
//! every float format, such as `t^{M_k}` once `M_k` has hundreds of digits.
//!
//! Arithmetic is approximate (128-bit mantissa at the innermost level) and is
//! only used for log-domain comparisons; exact quantities are kept as
//! `BigUint` whenever they fit in memory.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Serialize, Serializer};

use crate::hp::Real;

/// `v` is lifted by a logarithm once its binary exponent exceeds this.
const LIFT_BITS: i32 = 1 << 28;

fn ln_huge() -> Real {
    Real::from_u64(LIFT_BITS as u64) * Real::ln2()
}

/// `sign * exp^height(v)` with `v >= 0`; `height > 0` implies `v > ln(2^LIFT_BITS)`.
#[derive(Clone)]
pub struct Mag {
    neg: bool,
    height: u32,
    v: Real,
}

impl Mag {
    pub fn zero() -> Self {
        Mag { neg: false, height: 0, v: Real::zero() }
    }

    pub fn from_real(r: Real) -> Self {
        let neg = r.is_negative();
        Mag { neg, height: 0, v: r.abs() }.normalize()
    }

    pub fn from_u64(x: u64) -> Self {
        Self::from_real(Real::from_u64(x))
    }

    pub fn from_f64(x: f64) -> Self {
        Self::from_real(Real::from_f64(x))
    }

    pub fn from_biguint(x: &BigUint) -> Self {
        Self::from_real(Real::from_biguint(x))
    }

    pub fn from_ratio(x: &BigRational) -> Self {
        let m = Self::from_biguint(x.numer().magnitude()).div(&Self::from_biguint(x.denom().magnitude()));
        if x.is_negative() {
            m.neg()
        } else {
            m
        }
    }

    fn normalize(mut self) -> Self {
        if self.v.is_zero() {
            return Mag::zero();
        }
        while self.v.exponent() > LIFT_BITS {
            self.v = self.v.ln();
            self.height += 1;
        }
        let lim = ln_huge();
        while self.height > 0 && self.v <= lim {
            self.v = self.v.exp();
            self.height -= 1;
        }
        self
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.neg && !self.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.neg && !self.is_zero()
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Mag { neg: !self.neg, height: self.height, v: self.v.clone() }
    }

    pub fn abs(&self) -> Self {
        Mag { neg: false, height: self.height, v: self.v.clone() }
    }

    /// `ln|x|`; panics on zero.
    pub fn ln_abs(&self) -> Self {
        assert!(!self.is_zero(), "logarithm of zero");
        if self.height == 0 {
            Mag::from_real(self.v.ln())
        } else {
            Mag { neg: false, height: self.height - 1, v: self.v.clone() }.normalize()
        }
    }

    pub fn exp(&self) -> Self {
        if self.is_zero() {
            return Mag::from_u64(1);
        }
        if self.neg {
            if self.height == 0 {
                return Mag::from_real((-&self.v).exp());
            }
            return Mag::zero();
        }
        Mag { neg: false, height: self.height + 1, v: self.v.clone() }.normalize()
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Mag::zero();
        }
        let neg = self.neg != o.neg;
        let m = if self.height == 0 && o.height == 0 { Mag::from_real(&self.v * &o.v) } else { self.ln_abs().add(&o.ln_abs()).exp() };
        if neg {
            m.neg()
        } else {
            m
        }
    }

    pub fn div(&self, o: &Self) -> Self {
        assert!(!o.is_zero(), "division by zero");
        if self.is_zero() {
            return Mag::zero();
        }
        let neg = self.neg != o.neg;
        let m = if self.height == 0 && o.height == 0 { Mag::from_real(&self.v / &o.v) } else { self.ln_abs().sub(&o.ln_abs()).exp() };
        if neg {
            m.neg()
        } else {
            m
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.height == 0 && o.height == 0 {
            let a = if self.neg { -&self.v } else { self.v.clone() };
            let b = if o.neg { -&o.v } else { o.v.clone() };
            return Mag::from_real(a + b);
        }
        let (big, small) = if self.abs().cmp_mag(&o.abs()) == Ordering::Less { (o, self) } else { (self, o) };
        let gap = small.ln_abs().sub(&big.ln_abs());
        if gap.cmp_mag(&Mag::from_f64(-400.0)) == Ordering::Less {
            return big.clone();
        }
        let r = gap.exp().to_real();
        let f = if big.neg == small.neg {
            (Real::one() + r).ln()
        } else {
            let d = Real::one() - r;
            if !d.is_positive() {
                return Mag::zero();
            }
            d.ln()
        };
        let m = big.ln_abs().add(&Mag::from_real(f)).exp();
        if big.neg {
            m.neg()
        } else {
            m
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// `x^e` for `x > 0`.
    pub fn pow(&self, e: &Mag) -> Self {
        assert!(self.is_positive(), "power of a non-positive magnitude");
        e.mul(&self.ln_abs()).exp()
    }

    pub fn sqrt(&self) -> Self {
        self.pow(&Mag::from_f64(0.5))
    }

    /// The innermost value as a `Real` when the height is zero.
    pub fn to_real(&self) -> Real {
        assert_eq!(self.height, 0, "magnitude exceeds the float range");
        if self.neg {
            -&self.v
        } else {
            self.v.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.height == 0 {
            self.to_real().to_f64()
        } else if self.neg {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    }

    pub fn cmp_mag(&self, o: &Self) -> Ordering {
        match (self.is_negative(), o.is_negative()) {
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let abs = self.height.cmp(&o.height).then_with(|| self.v.partial_cmp(&o.v).unwrap_or(Ordering::Equal));
        if self.is_negative() {
            abs.reverse()
        } else {
            abs
        }
    }

    /// `log10|x|` as a magnitude, for reporting sizes.
    pub fn log10_abs(&self) -> Mag {
        self.ln_abs().div(&Mag::from_real(Real::from_u64(10).ln()))
    }
}

impl PartialEq for Mag {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_mag(other) == Ordering::Equal
    }
}

impl PartialOrd for Mag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_mag(other))
    }
}

impl fmt::Debug for Mag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Mag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.is_negative() { "-" } else { "" };
        if self.height == 0 {
            let x = self.v.to_f64();
            if x.is_finite() {
                return write!(f, "{sign}{x:e}");
            }
        }
        write!(f, "{sign}10^({})", self.abs().log10_abs())
    }
}

/// A quantity kept exactly while it fits in memory and approximately beyond.
#[derive(Clone, Debug)]
pub enum Num {
    Exact(BigUint),
    Approx(Mag),
}

impl Num {
    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            Num::Exact(x) => Some(x),
            Num::Approx(_) => None,
        }
    }

    pub fn to_mag(&self) -> Mag {
        match self {
            Num::Exact(x) => Mag::from_biguint(x),
            Num::Approx(m) => m.clone(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(_))
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Exact(x) => write!(f, "{x}"),
            Num::Approx(m) => write!(f, "~{m}"),
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Serialize for Mag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
