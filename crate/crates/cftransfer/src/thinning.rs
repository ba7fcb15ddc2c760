//! The factorial-block index set `Q = ⋃_{k>=2} {k! + ik : 0 <= i <= k!-1}` and the
//! relatively thin subset `S_* = {a_n : n ∈ Q}` of an increasing set `S = {a_1 < a_2 < ...}`.
//!
//! Block `k` lies in `[k!, (k+1)! - k]`, so `ν(m) = k` for every `m` in it and
//! `m ∈ Q` exactly when `k >= 2` and `k` divides `m - k!`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::intsets::{IntegerSet, SetHandle};

pub fn factorial(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, j| acc * j)
}

/// `k` with `k! <= m < (k+1)!`; `m >= 1`.
pub fn nu_big(m: &BigUint) -> u64 {
    assert!(!m.is_zero(), "ν is defined on [1, ∞)");
    let mut k = 1u64;
    let mut next = BigUint::from(2u32);
    while next <= *m {
        k += 1;
        next *= k + 1;
    }
    k
}

pub fn nu_u64(m: u64) -> u64 {
    assert!(m >= 1, "ν is defined on [1, ∞)");
    let mut k = 1u64;
    let mut next = 2u64;
    while next <= m {
        k += 1;
        match next.checked_mul(k + 1) {
            Some(x) => next = x,
            None => break,
        }
    }
    k
}

/// `ν(ξ)` for real `ξ >= 1`; factorials are integers so `ν(ξ) = ν(⌊ξ⌋)`.
pub fn nu(xi: f64) -> u64 {
    assert!(xi >= 1.0, "ν is defined on [1, ∞)");
    if xi >= u64::MAX as f64 {
        return nu_u64(u64::MAX);
    }
    nu_u64(xi.floor() as u64)
}

pub fn q_contains_big(m: &BigUint) -> bool {
    if m.is_zero() {
        return false;
    }
    let k = nu_big(m);
    k >= 2 && ((m - factorial(k)) % k).is_zero()
}

pub fn q_contains(m: u64) -> bool {
    if m == 0 {
        return false;
    }
    let k = nu_u64(m);
    k >= 2 && (m - factorial(k).to_u64().expect("fits")).is_multiple_of(k)
}

/// `#(Q ∩ [1, n])`.
pub fn q_count_big(n: &BigUint) -> BigUint {
    if n.is_zero() {
        return BigUint::zero();
    }
    let k = nu_big(n);
    if k < 2 {
        return BigUint::zero();
    }
    let mut total = BigUint::zero();
    let mut f = BigUint::from(2u32);
    for j in 2..k {
        total += &f;
        f *= j + 1;
    }
    // f = k! now
    total + (n - &f) / k + 1u32
}

pub fn q_count(n: u64) -> u64 {
    q_count_big(&BigUint::from(n)).to_u64().expect("fits")
}

/// The `i`-th smallest element of `Q`, 1-based.
pub fn q_nth_big(i: &BigUint) -> Option<BigUint> {
    if i.is_zero() {
        return None;
    }
    let mut before = BigUint::zero();
    let mut k = 2u64;
    let mut f = BigUint::from(2u32);
    loop {
        if *i <= &before + &f {
            return Some(&f + (i - &before - 1u32) * k);
        }
        before += &f;
        k += 1;
        f *= k;
    }
}

pub fn q_nth(i: u64) -> Option<u64> {
    q_nth_big(&BigUint::from(i))?.to_u64()
}

/// `Q ∩ [1, bound]`, enumerated block by block.
pub fn q_enumerate(bound: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut k = 2u64;
    let mut f = 2u64;
    while f <= bound {
        let mut x = f;
        let last = f.saturating_mul(k + 1).saturating_sub(k);
        while x <= bound && x <= last {
            out.push(x);
            x += k;
        }
        k += 1;
        f = match f.checked_mul(k) {
            Some(v) => v,
            None => break,
        };
    }
    out
}

/// `S_*` as a lazily queried set: `m ∈ S_*` iff `m ∈ S` and its rank in `S` lies in `Q`.
pub struct ThinSet {
    base: SetHandle,
}

impl ThinSet {
    pub fn new(base: SetHandle) -> Self {
        ThinSet { base }
    }

    pub fn base(&self) -> &SetHandle {
        &self.base
    }
}

impl IntegerSet for ThinSet {
    fn describe(&self) -> String {
        format!("thin({})", self.base.describe())
    }
    fn horizon(&self) -> Option<u64> {
        self.base.horizon()
    }
    fn contains(&self, m: u64) -> bool {
        self.base.contains(m) && q_contains(self.base.count(m))
    }
    fn count(&self, n: u64) -> u64 {
        q_count(self.base.count(n))
    }
    fn nth(&self, i: u64) -> Option<u64> {
        self.base.nth(q_nth(i)?)
    }
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        if lo > hi {
            return;
        }
        let mut rank = self.base.count(lo.saturating_sub(1));
        self.base.for_each_in(lo, hi, &mut |x| {
            rank += 1;
            if q_contains(rank) {
                f(x);
            }
        });
    }
    fn is_analytic(&self) -> bool {
        self.base.is_analytic()
    }
    fn count_big(&self, n: &BigUint) -> Option<BigUint> {
        Some(q_count_big(&self.base.count_big(n)?))
    }
    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        if !self.base.contains_big(m)? {
            return Some(false);
        }
        Some(q_contains_big(&self.base.count_big(m)?))
    }
    fn nth_big(&self, i: &BigUint) -> Option<BigUint> {
        self.base.nth_big(&q_nth_big(i)?)
    }
}

/// The measured range of `ξ` on which `ξ/(2ν(ξ)) <= #(Q ∩ [1, ξ]) <= 3ξ/ν(ξ)` holds.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    /// Every real `ξ` in `[from, checked_to + 1)` satisfies both bounds; `None` if the last interval fails.
    pub from: Option<u64>,
    pub checked_to: u64,
    /// Integers `m` whose interval `[m, m+1)` breaks a bound.
    pub violations: u64,
    pub last_violation: Option<u64>,
}

/// Exhaustive check of the sandwich on `[1, bound + 1)`.
///
/// On `[m, m+1)` both `ν` and the count are constant, so the lower bound holds
/// iff `m + 1 <= 2ν·count` and the upper iff `ν·count <= 3m`.
pub fn sandwich_scan(bound: u64) -> SandwichReport {
    let mut count = 0u64;
    let mut k = 1u64;
    let mut next_fact = 2u64;
    let mut block_start = 1u64;
    let mut violations = 0u64;
    let mut last = None;
    for m in 1..=bound {
        if m == next_fact {
            k += 1;
            block_start = m;
            next_fact = next_fact.saturating_mul(k + 1);
        }
        if k >= 2 && (m - block_start).is_multiple_of(k) && (m - block_start) / k < block_start {
            count += 1;
        }
        let lo_ok = (m as u128 + 1) <= 2 * k as u128 * count as u128;
        let hi_ok = k as u128 * count as u128 <= 3 * m as u128;
        if !(lo_ok && hi_ok) {
            violations += 1;
            last = Some(m);
        }
    }
    let from = match last {
        None => Some(1),
        Some(m) if m < bound => Some(m + 1),
        Some(_) => None,
    };
    SandwichReport { from, checked_to: bound, violations, last_violation: last }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThinningResult {
    pub set: String,
    pub bound: u64,
    pub q_indices: Vec<u64>,
    pub values: Vec<u64>,
    pub sandwich: SandwichReport,
    /// `(k!, k)` for each block start up to the bound.
    pub nu_table: Vec<(u64, u64)>,
    pub q_has_consecutive: bool,
    pub values_have_consecutive: bool,
}

fn has_consecutive(v: &[u64]) -> bool {
    v.windows(2).any(|w| w[1] == w[0] + 1)
}

/// Materializes `Q ∩ [1, bound]` and `{a_n : n ∈ Q, n <= bound}`.
pub fn thin_subset(s: &dyn IntegerSet, bound: u64) -> Result<ThinningResult> {
    if bound == 0 {
        return Err(Error::InvalidInput("bound must be positive".into()));
    }
    let q = q_enumerate(bound);
    let values = match s.nth(bound) {
        Some(_) => q.iter().map(|&n| s.nth(n).expect("rank below bound")).collect::<Vec<_>>(),
        None => {
            let found = s.horizon().map(|h| s.count(h)).unwrap_or(0);
            return Err(Error::TooFewElements { needed: bound, found });
        }
    };
    let mut nu_table = Vec::new();
    let mut k = 1u64;
    let mut f = 1u64;
    while f <= bound {
        nu_table.push((f, k));
        k += 1;
        f = match f.checked_mul(k) {
            Some(v) => v,
            None => break,
        };
    }
    Ok(ThinningResult {
        set: s.describe(),
        bound,
        q_has_consecutive: has_consecutive(&q),
        values_have_consecutive: has_consecutive(&values),
        q_indices: q,
        values,
        sandwich: sandwich_scan(bound),
        nu_table,
    })
}

/// `ν(#(S ∩ [1, n]))`.
pub fn nu_of_count(s: &dyn IntegerSet, n: u64) -> u64 {
    nu_u64(s.count(n).max(1))
}

/// Number of elements of `S_*` in `[lo, hi]` when both ends are analytic.
pub fn thin_count_between(base: &dyn IntegerSet, lo: &BigUint, hi: &BigUint) -> Option<BigUint> {
    if lo > hi {
        return Some(BigUint::zero());
    }
    let a = q_count_big(&base.count_big(&(lo - 1u32))?);
    let b = q_count_big(&base.count_big(hi)?);
    Some(b - a)
}
