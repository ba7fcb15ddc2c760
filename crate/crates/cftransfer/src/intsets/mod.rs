//! Integer sets with counting, rank and membership queries.
//!
//! Analytic sets (naturals, residue classes, squares, Piatetski-Shapiro sets and
//! the sets derived from them) answer queries in closed form at any size,
//! including arbitrary-precision arguments. Sieved and file-backed sets are
//! materialized up to a horizon and answer queries only below it.

mod analytic;
mod fit;
mod sieve;
mod spec;

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

pub use analytic::{Naturals, PiatetskiShapiro, ResidueClass, SquareBlocks, Squares};
pub use fit::{fit_poly_density, PolyDensityParams, FIT_RATIO_LIMIT};
pub use sieve::{is_prime_u64, p1_primes_up_to, primes_up_to, BuildOptions, DEFAULT_SEGMENT};
pub use spec::{build_set, build_set_with, Complement, Intersection, Meet, SetSpec, SortedSet};

/// A subset of the positive integers.
///
/// `count(n)` is `#(S ∩ [1, n])` and `nth(i)` the `i`-th smallest element,
/// 1-based. The `u64` queries require `n <= horizon()` when a horizon is set.
pub trait IntegerSet: Send + Sync {
    fn describe(&self) -> String;

    /// Largest `n` for which the `u64` queries are answered, `None` when unbounded.
    fn horizon(&self) -> Option<u64>;

    fn contains(&self, m: u64) -> bool;

    fn count(&self, n: u64) -> u64;

    fn nth(&self, i: u64) -> Option<u64> {
        if i == 0 {
            return None;
        }
        let hi = self.horizon().unwrap_or(u64::MAX / 4);
        if self.count(hi) < i {
            return None;
        }
        let (mut lo, mut hi) = (1u64, hi);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.count(mid) >= i {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }

    /// Calls `f` on every element of `[lo, hi]` in ascending order.
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        if lo > hi {
            return;
        }
        let c0 = self.count(lo.saturating_sub(1));
        let c1 = self.count(hi);
        for i in c0 + 1..=c1 {
            if let Some(x) = self.nth(i) {
                f(x);
            }
        }
    }

    /// True when the arbitrary-precision queries succeed for every argument.
    fn is_analytic(&self) -> bool {
        false
    }

    fn count_big(&self, n: &BigUint) -> Option<BigUint> {
        let n64 = n.to_u64()?;
        within(self.horizon(), n64).then(|| BigUint::from(self.count(n64)))
    }

    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        let m64 = m.to_u64()?;
        within(self.horizon(), m64).then(|| self.contains(m64))
    }

    fn nth_big(&self, i: &BigUint) -> Option<BigUint> {
        self.nth(i.to_u64()?).map(BigUint::from)
    }

    /// `(c, p)` when every run of `p` consecutive integers holds exactly `c` elements.
    fn period(&self) -> Option<(u64, u64)> {
        None
    }
}

pub type SetHandle = Arc<dyn IntegerSet>;

fn within(h: Option<u64>, n: u64) -> bool {
    h.is_none_or(|h| n <= h)
}

/// Checks that `n` lies inside the answered range of `s`.
pub fn check_horizon(s: &dyn IntegerSet, n: u64) -> crate::Result<()> {
    match s.horizon() {
        Some(h) if n > h => Err(crate::Error::BeyondHorizon { horizon: h, query: n.to_string() }),
        _ => Ok(()),
    }
}

/// Elements of `s` in `[lo, hi]`, ascending.
pub fn elements_in(s: &dyn IntegerSet, lo: u64, hi: u64) -> Vec<u64> {
    let mut v = Vec::new();
    s.for_each_in(lo, hi, &mut |x| v.push(x));
    v
}

/// Smallest `n` in `[lo, hi]` with `count(n) >= i`, by bisection on a monotone count.
pub fn bisect_big(count: impl Fn(&BigUint) -> BigUint, i: &BigUint, lo: BigUint, hi: BigUint) -> BigUint {
    let (mut lo, mut hi) = (lo, hi);
    while lo < hi {
        let mid = (&lo + &hi) >> 1u32;
        if count(&mid) >= *i {
            hi = mid;
        } else {
            lo = mid + 1u32;
        }
    }
    lo
}

/// `⌊n^{p/q}⌋` as the integer `q`-th root of `n^p`.
pub fn ps_value(n: &BigUint, p: u32, q: u32) -> BigUint {
    if q == 1 {
        return n.pow(p);
    }
    n.pow(p).nth_root(q)
}

/// `⌊n^{p/q}⌋` for machine-sized `n`; `None` on overflow.
pub fn ps_value_u64(n: u64, p: u32, q: u32) -> Option<u64> {
    ps_value(&BigUint::from(n), p, q).to_u64()
}

/// `#{n >= 1 : ⌊n^{p/q}⌋ <= N}`, the largest `n` with `n^p <= (N+1)^q - 1`.
pub fn ps_count(big_n: &BigUint, p: u32, q: u32) -> BigUint {
    let lim = (big_n + 1u32).pow(q) - BigUint::one();
    if lim.is_zero() {
        return BigUint::zero();
    }
    lim.nth_root(p)
}
