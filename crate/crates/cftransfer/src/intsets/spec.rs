//! JSON set descriptions `{kind, params}`, materialized sets and set algebra.

use std::path::PathBuf;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::analytic::{Naturals, PiatetskiShapiro, ResidueClass, SquareBlocks, Squares};
use super::sieve::{is_prime_u64, p1_primes_up_to, primes_up_to, BuildOptions};
use super::{within, IntegerSet, SetHandle};
use crate::error::{Error, Result};
use crate::serial::parse_ratio;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SetSpec {
    Naturals,
    Primes,
    P1Primes,
    /// `alpha` as a rational string such as `"3/2"`.
    PiatetskiShapiro {
        alpha: String,
    },
    File {
        path: PathBuf,
    },
    ComplementInNaturals {
        of: Box<SetSpec>,
    },
    Intersection {
        of: Box<SetSpec>,
        lo: u64,
        hi: u64,
    },
    Explicit {
        values: Vec<u64>,
    },
    ResidueClass {
        modulus: u64,
        residue: u64,
    },
    Squares,
    SquareBlocks,
    Meet {
        a: Box<SetSpec>,
        b: Box<SetSpec>,
    },
}

impl SetSpec {
    pub fn evens() -> Self {
        SetSpec::ResidueClass { modulus: 2, residue: 0 }
    }

    pub fn ps(alpha: &str) -> Self {
        SetSpec::PiatetskiShapiro { alpha: alpha.into() }
    }
}

/// Ascending elements materialized up to a horizon.
pub struct SortedSet {
    name: String,
    elems: Vec<u64>,
    /// `None` when `elems` is the whole set.
    horizon: Option<u64>,
    /// Membership beyond the horizon, when available.
    oracle: Option<fn(u64) -> bool>,
}

impl SortedSet {
    /// A complete finite set; errors unless strictly increasing and positive.
    pub fn finite(name: impl Into<String>, elems: Vec<u64>) -> Result<Self> {
        validate(&elems, |i, reason| Error::InvalidInput(format!("element {}: {reason}", i + 1)))?;
        Ok(SortedSet { name: name.into(), elems, horizon: None, oracle: None })
    }

    /// The set's elements up to `horizon`; callers guarantee ordering.
    pub fn truncated(name: impl Into<String>, elems: Vec<u64>, horizon: u64, oracle: Option<fn(u64) -> bool>) -> Self {
        debug_assert!(elems.windows(2).all(|w| w[0] < w[1]));
        SortedSet { name: name.into(), elems, horizon: Some(horizon), oracle }
    }

    pub fn elements(&self) -> &[u64] {
        &self.elems
    }
}

fn validate(elems: &[u64], err: impl Fn(usize, &str) -> Error) -> Result<()> {
    for (i, &x) in elems.iter().enumerate() {
        if x == 0 {
            return Err(err(i, "not a positive integer"));
        }
        if i > 0 && elems[i - 1] >= x {
            return Err(err(i, if elems[i - 1] == x { "duplicate value" } else { "not ascending" }));
        }
    }
    Ok(())
}

impl IntegerSet for SortedSet {
    fn describe(&self) -> String {
        self.name.clone()
    }
    fn horizon(&self) -> Option<u64> {
        self.horizon
    }
    fn contains(&self, m: u64) -> bool {
        if !within(self.horizon, m) {
            if let Some(o) = self.oracle {
                return o(m);
            }
        }
        self.elems.binary_search(&m).is_ok()
    }
    fn count(&self, n: u64) -> u64 {
        self.elems.partition_point(|&x| x <= n) as u64
    }
    fn nth(&self, i: u64) -> Option<u64> {
        if i == 0 {
            return None;
        }
        self.elems.get(i as usize - 1).copied()
    }
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        let a = self.elems.partition_point(|&x| x < lo);
        let b = self.elems.partition_point(|&x| x <= hi);
        for &x in &self.elems[a..b.max(a)] {
            f(x);
        }
    }
    fn is_analytic(&self) -> bool {
        self.horizon.is_none()
    }
    fn count_big(&self, n: &BigUint) -> Option<BigUint> {
        match (n.to_u64(), self.horizon) {
            (Some(n), h) if within(h, n) => Some(BigUint::from(self.count(n))),
            (None, None) => Some(BigUint::from(self.elems.len())),
            _ => None,
        }
    }
    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        match m.to_u64() {
            Some(m) if within(self.horizon, m) || self.oracle.is_some() => Some(self.contains(m)),
            None if self.horizon.is_none() => Some(false),
            _ => None,
        }
    }
}

/// `ℕ ∖ S`.
pub struct Complement {
    inner: SetHandle,
}

impl Complement {
    pub fn new(inner: SetHandle) -> Self {
        Complement { inner }
    }
}

impl IntegerSet for Complement {
    fn describe(&self) -> String {
        format!("complement_in_naturals({})", self.inner.describe())
    }
    fn horizon(&self) -> Option<u64> {
        self.inner.horizon()
    }
    fn contains(&self, m: u64) -> bool {
        m >= 1 && !self.inner.contains(m)
    }
    fn count(&self, n: u64) -> u64 {
        n - self.inner.count(n)
    }
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        if lo > hi {
            return;
        }
        let mut skip = Vec::new();
        self.inner.for_each_in(lo, hi, &mut |x| skip.push(x));
        let mut j = 0;
        for x in lo.max(1)..=hi {
            while j < skip.len() && skip[j] < x {
                j += 1;
            }
            if j < skip.len() && skip[j] == x {
                continue;
            }
            f(x);
        }
    }
    fn is_analytic(&self) -> bool {
        self.inner.is_analytic()
    }
    fn count_big(&self, n: &BigUint) -> Option<BigUint> {
        Some(n - self.inner.count_big(n)?)
    }
    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        if *m == BigUint::ZERO {
            return Some(false);
        }
        Some(!self.inner.contains_big(m)?)
    }
    fn nth_big(&self, i: &BigUint) -> Option<BigUint> {
        if let Some(x) = i.to_u64().and_then(|i| self.nth(i)) {
            return Some(BigUint::from(x));
        }
        if !self.is_analytic() {
            return None;
        }
        // Double the bracket until it holds i elements.
        let mut hi = i * 2u32 + 64u32;
        while self.count_big(&hi)? < *i {
            hi *= 2u32;
        }
        Some(super::bisect_big(|n| self.count_big(n).expect("analytic"), i, i.clone(), hi))
    }
    fn period(&self) -> Option<(u64, u64)> {
        self.inner.period().map(|(c, p)| (p - c, p))
    }
}

/// `S ∩ [lo, hi]`.
pub struct Intersection {
    inner: SetHandle,
    lo: u64,
    hi: u64,
}

impl Intersection {
    pub fn new(inner: SetHandle, lo: u64, hi: u64) -> Self {
        Intersection { inner, lo, hi }
    }
}

impl IntegerSet for Intersection {
    fn describe(&self) -> String {
        format!("intersection({}, [{}, {}])", self.inner.describe(), self.lo, self.hi)
    }
    fn horizon(&self) -> Option<u64> {
        match self.inner.horizon() {
            Some(h) if h < self.hi => Some(h),
            _ => None,
        }
    }
    fn contains(&self, m: u64) -> bool {
        m >= self.lo && m <= self.hi && self.inner.contains(m)
    }
    fn count(&self, n: u64) -> u64 {
        if n < self.lo {
            return 0;
        }
        self.inner.count(n.min(self.hi)) - self.inner.count(self.lo.saturating_sub(1))
    }
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        self.inner.for_each_in(lo.max(self.lo), hi.min(self.hi), f)
    }
    fn is_analytic(&self) -> bool {
        self.horizon().is_none()
    }
    fn count_big(&self, n: &BigUint) -> Option<BigUint> {
        let n = match n.to_u64() {
            Some(n) => n,
            None => self.hi,
        };
        within(self.horizon(), n).then(|| BigUint::from(self.count(n)))
    }
    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        match m.to_u64() {
            Some(m) => within(self.horizon(), m).then(|| self.contains(m)),
            None => Some(false),
        }
    }
}

/// `A ∩ B`, materialized up to a horizon.
pub struct Meet {
    name: String,
    a: SetHandle,
    b: SetHandle,
    elems: SortedSet,
}

impl Meet {
    pub fn new(a: SetHandle, b: SetHandle, horizon: u64) -> Self {
        let mut v = Vec::new();
        a.for_each_in(1, horizon, &mut |x| {
            if b.contains(x) {
                v.push(x)
            }
        });
        let name = format!("meet({}, {})", a.describe(), b.describe());
        let elems = SortedSet::truncated(name.clone(), v, horizon, None);
        Meet { name, a, b, elems }
    }
}

impl IntegerSet for Meet {
    fn describe(&self) -> String {
        self.name.clone()
    }
    fn horizon(&self) -> Option<u64> {
        self.elems.horizon()
    }
    fn contains(&self, m: u64) -> bool {
        if within(self.horizon(), m) {
            self.elems.contains(m)
        } else {
            self.a.contains(m) && self.b.contains(m)
        }
    }
    fn count(&self, n: u64) -> u64 {
        self.elems.count(n)
    }
    fn nth(&self, i: u64) -> Option<u64> {
        self.elems.nth(i)
    }
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        self.elems.for_each_in(lo, hi, f)
    }
    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        Some(self.a.contains_big(m)? && self.b.contains_big(m)?)
    }
}

fn parse_alpha(alpha: &str) -> Result<(u32, u32)> {
    let r = parse_ratio(alpha)?;
    let p = r.numer().to_u32();
    let q = r.denom().to_u32();
    match (p, q) {
        (Some(p), Some(q)) if p > q => Ok((p, q)),
        _ => Err(Error::InvalidInput(format!("piatetski_shapiro exponent {alpha} must be a rational > 1"))),
    }
}

/// Reads a newline-delimited ascending list of positive integers.
pub fn read_set_file(path: &std::path::Path) -> Result<Vec<u64>> {
    let text = std::fs::read_to_string(path)?;
    let mut v = Vec::new();
    let mut lines = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        let x: u64 = l.parse().map_err(|_| Error::SetFile { line: i + 1, reason: format!("not an integer: {l:?}") })?;
        v.push(x);
        lines.push(i + 1);
    }
    validate(&v, |j, reason| Error::SetFile { line: lines[j], reason: reason.into() })?;
    Ok(v)
}

/// Builds a queryable set; sieved and intersected sets are materialized on `[1, n]`.
pub fn build_set(spec: &SetSpec, n: u64) -> Result<SetHandle> {
    build_set_with(spec, n, &BuildOptions::default())
}

pub fn build_set_with(spec: &SetSpec, n: u64, opts: &BuildOptions) -> Result<SetHandle> {
    if n == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    Ok(match spec {
        SetSpec::Naturals => Arc::new(Naturals),
        SetSpec::Primes => Arc::new(SortedSet::truncated("primes", primes_up_to(n, opts), n, Some(is_prime_u64))),
        SetSpec::P1Primes => Arc::new(SortedSet::truncated("p1_primes", p1_primes_up_to(n, opts), n, None)),
        SetSpec::PiatetskiShapiro { alpha } => {
            let (p, q) = parse_alpha(alpha)?;
            Arc::new(PiatetskiShapiro::new(p, q))
        }
        SetSpec::File { path } => Arc::new(SortedSet::finite(path.display().to_string(), read_set_file(path)?)?),
        SetSpec::ComplementInNaturals { of } => Arc::new(Complement::new(build_set_with(of, n, opts)?)),
        SetSpec::Intersection { of, lo, hi } => {
            if lo > hi {
                return Err(Error::InvalidInput(format!("empty interval [{lo}, {hi}]")));
            }
            Arc::new(Intersection::new(build_set_with(of, n.max(*hi), opts)?, *lo, *hi))
        }
        SetSpec::Explicit { values } => Arc::new(SortedSet::finite("explicit", values.clone())?),
        SetSpec::ResidueClass { modulus, residue } => {
            if *modulus == 0 {
                return Err(Error::InvalidInput("modulus must be positive".into()));
            }
            Arc::new(ResidueClass::new(*modulus, *residue))
        }
        SetSpec::Squares => Arc::new(Squares),
        SetSpec::SquareBlocks => Arc::new(SquareBlocks),
        SetSpec::Meet { a, b } => {
            let a = build_set_with(a, n, opts)?;
            let b = build_set_with(b, n, opts)?;
            Arc::new(Meet::new(a, b, n))
        }
    })
}
