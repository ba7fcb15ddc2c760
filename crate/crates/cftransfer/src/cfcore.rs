//! Regular and semi-regular continued fractions: convergents, fundamental
//! intervals and their diameters, all in exact rational arithmetic.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::serial::{biguint_str, ratio_str};

/// A finite prefix `a_1, ..., a_n` of partial quotients, optionally with a
/// sign word `σ_1, ..., σ_n` for semi-regular expansions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitWord {
    digits: Vec<BigUint>,
    signs: Option<Vec<i8>>,
}

impl DigitWord {
    pub fn regular(digits: Vec<BigUint>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::InvalidInput("empty digit word".into()));
        }
        if let Some(i) = digits.iter().position(|d| d.is_zero()) {
            return Err(Error::InvalidInput(format!("digit {} is zero", i + 1)));
        }
        Ok(DigitWord { digits, signs: None })
    }

    pub fn from_u64s(digits: &[u64]) -> Result<Self> {
        Self::regular(digits.iter().map(|&d| BigUint::from(d)).collect())
    }

    /// A signed word; `signs[i] + digits[i + 1] >= 1` must hold for every `i < n - 1`.
    pub fn signed(digits: Vec<BigUint>, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != digits.len() {
            return Err(Error::InvalidInput(format!("{} digits but {} signs", digits.len(), signs.len())));
        }
        if let Some(s) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::InvalidInput(format!("sign {s} is not +1 or -1")));
        }
        let mut w = Self::regular(digits)?;
        for (i, (s, next)) in signs.iter().zip(w.digits.iter().skip(1)).enumerate() {
            if *s == -1 && next.is_one() {
                return Err(Error::Admissibility { position: i + 2, digit: w.digits[i + 1].to_string() });
            }
        }
        w.signs = Some(signs);
        Ok(w)
    }

    pub fn digits(&self) -> &[BigUint] {
        &self.digits
    }

    pub fn signs(&self) -> Option<&[i8]> {
        self.signs.as_deref()
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn is_regular(&self) -> bool {
        self.signs.is_none()
    }

    /// Appends a digit to a regular word.
    pub fn push(&mut self, d: BigUint) -> Result<()> {
        if d.is_zero() {
            return Err(Error::InvalidInput("digit is zero".into()));
        }
        if self.signs.is_some() {
            return Err(Error::InvalidInput("push on a signed word".into()));
        }
        self.digits.push(d);
        Ok(())
    }

    /// One digit per line; signed words as `+a` / `-a`.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (i, d) in self.digits.iter().enumerate() {
            match &self.signs {
                Some(s) => out.push_str(&format!("{}{}\n", if s[i] < 0 { '-' } else { '+' }, d)),
                None => out.push_str(&format!("{d}\n")),
            }
        }
        out
    }

    pub fn parse_lines(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let signed = lines.first().is_some_and(|l| l.starts_with('+') || l.starts_with('-'));
        let mut digits = Vec::with_capacity(lines.len());
        let mut signs = Vec::with_capacity(lines.len());
        for (i, l) in lines.iter().enumerate() {
            let (sign, body) = match l.as_bytes()[0] {
                b'+' => (1, &l[1..]),
                b'-' => (-1, &l[1..]),
                _ => (1, *l),
            };
            if signed != (l.starts_with('+') || l.starts_with('-')) {
                return Err(Error::InvalidInput(format!("line {}: mixed signed and unsigned digits", i + 1)));
            }
            let d: BigUint = body.parse().map_err(|_| Error::InvalidInput(format!("line {}: not a digit: {l:?}", i + 1)))?;
            digits.push(d);
            signs.push(sign);
        }
        if signed {
            Self::signed(digits, signs)
        } else {
            Self::regular(digits)
        }
    }
}

impl fmt::Display for DigitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if let Some(s) = &self.signs {
                write!(f, "{}", if s[i] < 0 { '-' } else { '+' })?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Convergent {
    #[serde(with = "biguint_str")]
    pub p: BigUint,
    #[serde(with = "biguint_str")]
    pub q: BigUint,
    pub index: i64,
}

/// Running state of the convergent recurrence, extended one digit at a time.
#[derive(Clone, Debug)]
pub struct ConvergentCursor {
    pub p_prev: BigUint,
    pub q_prev: BigUint,
    pub p: BigUint,
    pub q: BigUint,
    pub depth: usize,
}

impl Default for ConvergentCursor {
    fn default() -> Self {
        Self::new()
    }
}

impl ConvergentCursor {
    /// Seeded with `p_{-1} = 1, p_0 = 0, q_{-1} = 0, q_0 = 1`.
    pub fn new() -> Self {
        ConvergentCursor { p_prev: BigUint::one(), q_prev: BigUint::zero(), p: BigUint::zero(), q: BigUint::one(), depth: 0 }
    }

    pub fn push(&mut self, a: &BigUint) {
        let p = a * &self.p + &self.p_prev;
        let q = a * &self.q + &self.q_prev;
        self.p_prev = std::mem::replace(&mut self.p, p);
        self.q_prev = std::mem::replace(&mut self.q, q);
        self.depth += 1;
    }

    pub fn extend<'a>(&mut self, digits: impl IntoIterator<Item = &'a BigUint>) {
        for a in digits {
            self.push(a);
        }
    }

    /// Value `(p r + p') / (q r + q')` for the complete quotient `r >= 1` following the prefix.
    pub fn image(&self, t: &BigRational) -> BigRational {
        let (p, pp, q, qp) = self.as_ints();
        (t * &p + &pp) / (t * &q + &qp)
    }

    fn as_ints(&self) -> (BigInt, BigInt, BigInt, BigInt) {
        (BigInt::from(self.p.clone()), BigInt::from(self.p_prev.clone()), BigInt::from(self.q.clone()), BigInt::from(self.q_prev.clone()))
    }

    /// Closed hull of all points whose expansion continues with a digit in `[lo, hi]`.
    pub fn hull_of_next(&self, lo: &BigUint, hi: &BigUint) -> (BigRational, BigRational) {
        let t_small = BigRational::from_integer(BigInt::from(lo.clone()));
        let t_large = BigRational::from_integer(BigInt::from(hi + 1u32));
        let a = self.image(&t_small);
        let b = self.image(&t_large);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

pub fn convergents(word: &DigitWord) -> Result<Vec<Convergent>> {
    if word.is_empty() {
        return Err(Error::InvalidInput("empty digit word".into()));
    }
    if !word.is_regular() {
        return Err(Error::InvalidInput("convergents need a regular word".into()));
    }
    let mut c = ConvergentCursor::new();
    Ok(word
        .digits
        .iter()
        .enumerate()
        .map(|(i, a)| {
            c.push(a);
            Convergent { p: c.p.clone(), q: c.q.clone(), index: i as i64 + 1 }
        })
        .collect())
}

/// Exact bounds `½∏(a_i+1)^{-2} <= |I| <= ∏a_i^{-2}` evaluated for one word.
#[derive(Clone, Debug, Serialize)]
pub struct DiameterSandwich {
    #[serde(with = "ratio_str")]
    pub lower: BigRational,
    #[serde(with = "ratio_str")]
    pub upper: BigRational,
    pub holds: bool,
}

/// Bounds `C^{-1}∏(a_i+1)^{-2} <= |I| <= C∏(a_i-1)^{-2}` for semi-regular words with all digits at least 3.
#[derive(Clone, Debug, Serialize)]
pub struct SemiRegularBounds {
    #[serde(with = "ratio_str")]
    pub lower: BigRational,
    #[serde(with = "ratio_str")]
    pub upper: BigRational,
    /// Smallest constant for which both bounds hold on this word.
    #[serde(with = "ratio_str")]
    pub observed_c: BigRational,
    #[serde(with = "ratio_str")]
    pub configured_c: BigRational,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FundamentalInterval {
    #[serde(with = "ratio_str")]
    pub lo: BigRational,
    #[serde(with = "ratio_str")]
    pub hi: BigRational,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub depth: usize,
    #[serde(skip)]
    pub word: DigitWord,
    pub sandwich: Option<DiameterSandwich>,
    pub semi_regular: Option<SemiRegularBounds>,
}

impl FundamentalInterval {
    pub fn diameter(&self) -> BigRational {
        &self.hi - &self.lo
    }

    /// Set inclusion, ignoring endpoint closedness.
    pub fn contains_interval(&self, other: &FundamentalInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// True when the interiors intersect.
    pub fn overlaps_interior(&self, other: &FundamentalInterval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }
}

fn ratio(n: BigUint, d: BigUint) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Endpoints of the regular fundamental interval and their closedness.
fn regular_endpoints(c: &ConvergentCursor) -> (BigRational, BigRational, bool, bool) {
    let a = ratio(c.p.clone(), c.q.clone());
    let b = ratio(&c.p + &c.p_prev, &c.q + &c.q_prev);
    if c.depth.is_multiple_of(2) {
        (a, b, true, false)
    } else {
        (b, a, false, true)
    }
}

pub fn fundamental_interval(word: &DigitWord) -> Result<FundamentalInterval> {
    if word.is_empty() {
        return Err(Error::InvalidInput("empty digit word".into()));
    }
    if !word.is_regular() {
        return Err(Error::InvalidInput("fundamental_interval needs a regular word".into()));
    }
    let mut c = ConvergentCursor::new();
    c.extend(&word.digits);
    let (lo, hi, lo_closed, hi_closed) = regular_endpoints(&c);
    let diam = &hi - &lo;
    let mut prod_a = BigUint::one();
    let mut prod_a1 = BigUint::one();
    for a in &word.digits {
        prod_a *= a;
        prod_a1 *= a + 1u32;
    }
    let lower = ratio(BigUint::one(), BigUint::from(2u32) * &prod_a1 * &prod_a1);
    let upper = ratio(BigUint::one(), &prod_a * &prod_a);
    let holds = lower <= diam && diam <= upper;
    Ok(FundamentalInterval {
        lo,
        hi,
        lo_closed,
        hi_closed,
        depth: word.len(),
        word: word.clone(),
        sandwich: Some(DiameterSandwich { lower, upper, holds }),
        semi_regular: None,
    })
}

/// Exact diameter `1/(q_n(q_n + q_{n-1}))` from the convergent recurrence alone.
pub fn diameter_formula(word: &DigitWord) -> Result<BigRational> {
    let cs = convergents(word)?;
    let n = cs.len();
    let q = cs[n - 1].q.clone();
    let q_prev = if n >= 2 { cs[n - 2].q.clone() } else { BigUint::one() };
    Ok(ratio(BigUint::one(), &q * (&q + q_prev)))
}

/// Image of `[0, 1]` under `x -> 1/(a_1 + σ_1/(a_2 + ... σ_{n-1}/(a_n + σ_n x)))`,
/// with the bounds check applied when every digit is at least 3.
pub fn semi_regular_interval(word: &DigitWord, c: &BigRational) -> Result<FundamentalInterval> {
    let signs: Vec<i8> = match word.signs() {
        Some(s) => s.to_vec(),
        None => vec![1; word.len()],
    };
    let mut lo = BigRational::zero();
    let mut hi = BigRational::one();
    for i in (0..word.len()).rev() {
        let a = BigRational::from_integer(BigInt::from(word.digits[i].clone()));
        let s = BigRational::from_integer(BigInt::from(signs[i]));
        let d_lo = &a + &s * &lo;
        let d_hi = &a + &s * &hi;
        if d_lo <= BigRational::zero() || d_hi <= BigRational::zero() {
            return Err(Error::Admissibility { position: i + 1, digit: word.digits[i].to_string() });
        }
        let x = d_lo.recip();
        let y = d_hi.recip();
        if x <= y {
            lo = x;
            hi = y;
        } else {
            lo = y;
            hi = x;
        }
    }
    let semi = if word.digits.iter().all(|a| *a >= BigUint::from(3u32)) {
        let diam = &hi - &lo;
        let mut p_plus = BigUint::one();
        let mut p_minus = BigUint::one();
        for a in &word.digits {
            p_plus *= a + 1u32;
            p_minus *= a - 1u32;
        }
        let lower = ratio(BigUint::one(), &p_plus * &p_plus);
        let upper = ratio(BigUint::one(), &p_minus * &p_minus);
        let need_lo = &lower / &diam;
        let need_hi = &diam / &upper;
        let observed_c = if need_lo > need_hi { need_lo } else { need_hi };
        let observed_c = if observed_c < BigRational::one() { BigRational::one() } else { observed_c };
        Some(SemiRegularBounds { holds: observed_c <= *c, lower, upper, observed_c, configured_c: c.clone() })
    } else {
        None
    };
    Ok(FundamentalInterval { lo, hi, lo_closed: true, hi_closed: true, depth: word.len(), word: word.clone(), sandwich: None, semi_regular: semi })
}
