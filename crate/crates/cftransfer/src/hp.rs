//! Fixed 128-bit-mantissa floating point for logarithms and reported ratios.
//!
//! Counts and interval endpoints stay exact; a `Real` appears only where a
//! logarithm or an irrational power is unavoidable.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub const PRECISION: usize = 128;
const RM: RoundingMode = RoundingMode::ToEven;
const WORD_BITS: u64 = 64;
const KEPT_WORDS: u64 = 3;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

#[derive(Clone)]
pub struct Real(BigFloat);

impl Real {
    pub fn zero() -> Self {
        Real(BigFloat::from_word(0, PRECISION))
    }

    pub fn one() -> Self {
        Real(BigFloat::from_word(1, PRECISION))
    }

    pub fn from_f64(x: f64) -> Self {
        Real(BigFloat::from_f64(x, PRECISION))
    }

    pub fn from_u64(x: u64) -> Self {
        Real(BigFloat::from_u64(x, PRECISION))
    }

    pub fn from_i64(x: i64) -> Self {
        Real(BigFloat::from_i64(x, PRECISION))
    }

    /// Rounds to the nearest representable value using the top 192 bits.
    pub fn from_biguint(x: &BigUint) -> Self {
        if x.is_zero() {
            return Self::zero();
        }
        let bits = x.bits();
        let keep = KEPT_WORDS * WORD_BITS;
        let top = if bits > keep { x >> (bits - keep) } else { x << (keep - bits) };
        let mut words = top.to_u64_digits();
        words.resize(KEPT_WORDS as usize, 0);
        let e = i32::try_from(bits).expect("integer too large for a float exponent");
        let mut f = BigFloat::from_words(&words, Sign::Pos, e);
        f.set_precision(PRECISION, RM).expect("precision");
        Real(f)
    }

    pub fn from_bigint(x: &BigInt) -> Self {
        let r = Self::from_biguint(x.magnitude());
        if x.is_negative() {
            -r
        } else {
            r
        }
    }

    pub fn from_ratio(x: &BigRational) -> Self {
        Self::from_bigint(x.numer()) / Self::from_bigint(x.denom())
    }

    pub fn ln2() -> Self {
        Self::from_u64(2).ln()
    }

    /// Natural logarithm of a positive integer without materializing a float of its full width.
    pub fn ln_biguint(x: &BigUint) -> Self {
        Self::from_biguint(x).ln()
    }

    pub fn ln_ratio(x: &BigRational) -> Self {
        Self::ln_biguint(x.numer().magnitude()) - Self::ln_biguint(x.denom().magnitude())
    }

    pub fn ln(&self) -> Self {
        assert!(self.is_positive(), "logarithm of a non-positive value");
        with_consts(|cc| Real(self.0.ln(PRECISION, RM, cc)))
    }

    pub fn exp(&self) -> Self {
        with_consts(|cc| Real(self.0.exp(PRECISION, RM, cc)))
    }

    pub fn sqrt(&self) -> Self {
        Real(self.0.sqrt(PRECISION, RM))
    }

    pub fn powf(&self, e: &Real) -> Self {
        with_consts(|cc| Real(self.0.pow(&e.0, PRECISION, RM, cc)))
    }

    pub fn abs(&self) -> Self {
        Real(self.0.abs())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.0.is_zero() && self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        !self.0.is_zero() && self.0.is_negative()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    /// Binary exponent `e` with `2^(e-1) <= |x| < 2^e`; zero maps to `i32::MIN`.
    pub fn exponent(&self) -> i32 {
        if self.0.is_zero() {
            return i32::MIN;
        }
        self.0.exponent().unwrap_or(i32::MIN)
    }

    pub fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.0.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        let Some((words, _, sign, e, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        if self.0.is_zero() {
            return 0.0;
        }
        let top = words.last().copied().unwrap_or(0) as f64 / 2f64.powi(64);
        let mag = if e > 1100 {
            f64::INFINITY
        } else if e < -1100 {
            0.0
        } else {
            top * 2f64.powi(e)
        };
        if sign == Sign::Neg {
            -mag
        } else {
            mag
        }
    }

    /// Decimal rendering with the full working precision, e.g. `6.9314718055994530942e-1`.
    pub fn to_decimal(&self) -> String {
        with_consts(|cc| self.0.format(Radix::Dec, RM, cc).unwrap_or_else(|_| "NaN".into()))
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal())
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal())
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                Real(self.0.$method(&rhs.0, PRECISION, RM))
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                (&self).$method(rhs)
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(self.0.neg())
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(self.0.clone().neg())
    }
}
