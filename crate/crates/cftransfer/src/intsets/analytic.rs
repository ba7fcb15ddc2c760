//! Sets with closed-form counting functions.

use num_bigint::BigUint;
use num_integer::{Integer, Roots};
use num_traits::{One, ToPrimitive, Zero};

use super::{bisect_big, ps_count, ps_value, IntegerSet};

#[derive(Clone, Debug, Default)]
pub struct Naturals;

impl IntegerSet for Naturals {
    fn describe(&self) -> String {
        "naturals".into()
    }
    fn horizon(&self) -> Option<u64> {
        None
    }
    fn contains(&self, m: u64) -> bool {
        m >= 1
    }
    fn count(&self, n: u64) -> u64 {
        n
    }
    fn nth(&self, i: u64) -> Option<u64> {
        (i >= 1).then_some(i)
    }
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        for x in lo.max(1)..=hi {
            f(x);
        }
    }
    fn is_analytic(&self) -> bool {
        true
    }
    fn count_big(&self, n: &BigUint) -> Option<BigUint> {
        Some(n.clone())
    }
    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        Some(!m.is_zero())
    }
    fn nth_big(&self, i: &BigUint) -> Option<BigUint> {
        (!i.is_zero()).then(|| i.clone())
    }
    fn period(&self) -> Option<(u64, u64)> {
        Some((1, 1))
    }
}

/// Positive integers congruent to `residue` modulo `modulus`.
#[derive(Clone, Debug)]
pub struct ResidueClass {
    modulus: u64,
    residue: u64,
}

impl ResidueClass {
    pub fn new(modulus: u64, residue: u64) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        ResidueClass { modulus, residue: residue % modulus }
    }

    /// Smallest positive element.
    fn first(&self) -> u64 {
        if self.residue == 0 {
            self.modulus
        } else {
            self.residue
        }
    }
}

impl IntegerSet for ResidueClass {
    fn describe(&self) -> String {
        format!("residue_class({} mod {})", self.residue, self.modulus)
    }
    fn horizon(&self) -> Option<u64> {
        None
    }
    fn contains(&self, m: u64) -> bool {
        m >= 1 && m % self.modulus == self.residue
    }
    fn count(&self, n: u64) -> u64 {
        let f = self.first();
        if n < f {
            0
        } else {
            (n - f) / self.modulus + 1
        }
    }
    fn nth(&self, i: u64) -> Option<u64> {
        if i == 0 {
            return None;
        }
        (i - 1).checked_mul(self.modulus)?.checked_add(self.first())
    }
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        let c0 = self.count(lo.saturating_sub(1));
        let mut x = match self.nth(c0 + 1) {
            Some(x) => x,
            None => return,
        };
        while x <= hi {
            f(x);
            match x.checked_add(self.modulus) {
                Some(y) => x = y,
                None => break,
            }
        }
    }
    fn is_analytic(&self) -> bool {
        true
    }
    fn count_big(&self, n: &BigUint) -> Option<BigUint> {
        let f = BigUint::from(self.first());
        Some(if *n < f { BigUint::zero() } else { (n - &f) / self.modulus + 1u32 })
    }
    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        Some(!m.is_zero() && (m % self.modulus) == BigUint::from(self.residue))
    }
    fn nth_big(&self, i: &BigUint) -> Option<BigUint> {
        if i.is_zero() {
            return None;
        }
        Some((i - 1u32) * self.modulus + self.first())
    }
    fn period(&self) -> Option<(u64, u64)> {
        Some((1, self.modulus))
    }
}

#[derive(Clone, Debug, Default)]
pub struct Squares;

impl IntegerSet for Squares {
    fn describe(&self) -> String {
        "squares".into()
    }
    fn horizon(&self) -> Option<u64> {
        None
    }
    fn contains(&self, m: u64) -> bool {
        m >= 1 && m.sqrt() * m.sqrt() == m
    }
    fn count(&self, n: u64) -> u64 {
        n.sqrt()
    }
    fn nth(&self, i: u64) -> Option<u64> {
        if i == 0 {
            return None;
        }
        i.checked_mul(i)
    }
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        let mut r = self.count(lo.saturating_sub(1)) + 1;
        while let Some(x) = r.checked_mul(r) {
            if x > hi {
                break;
            }
            f(x);
            r += 1;
        }
    }
    fn is_analytic(&self) -> bool {
        true
    }
    fn count_big(&self, n: &BigUint) -> Option<BigUint> {
        Some(n.sqrt())
    }
    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        let r = m.sqrt();
        Some(!m.is_zero() && &r * &r == *m)
    }
    fn nth_big(&self, i: &BigUint) -> Option<BigUint> {
        (!i.is_zero()).then(|| i * i)
    }
}

/// `⋃_{n >= 1} [n², n² + ⌊√n⌋]`, upper Banach density 1 and convergence exponent 3/4.
#[derive(Clone, Debug, Default)]
pub struct SquareBlocks;

/// `Σ_{j=1}^{m} ⌊√j⌋`.
fn sum_isqrt(m: &BigUint) -> BigUint {
    if m.is_zero() {
        return BigUint::zero();
    }
    let s = m.sqrt();
    let s1 = &s - 1u32;
    // Σ_{i=1}^{s-1} i((i+1)² - i²) = 2Σi² + Σi
    let sq = &s1 * &s * (BigUint::from(2u32) * &s - 1u32) / 3u32;
    let lin = &s1 * &s / 2u32;
    sq + lin + &s * (m - &s * &s + 1u32)
}

impl SquareBlocks {
    fn count_generic(n: &BigUint) -> BigUint {
        if n.is_zero() {
            return BigUint::zero();
        }
        let r = n.sqrt();
        let r1 = &r - 1u32;
        let full = &r1 + sum_isqrt(&r1);
        let partial = (n - &r * &r).min(r.sqrt()) + 1u32;
        full + partial
    }

    fn contains_generic(m: &BigUint) -> bool {
        if m.is_zero() {
            return false;
        }
        let r = m.sqrt();
        m - &r * &r <= r.sqrt()
    }
}

impl IntegerSet for SquareBlocks {
    fn describe(&self) -> String {
        "square_blocks".into()
    }
    fn horizon(&self) -> Option<u64> {
        None
    }
    fn contains(&self, m: u64) -> bool {
        if m == 0 {
            return false;
        }
        let r = m.sqrt();
        m - r * r <= r.sqrt()
    }
    fn count(&self, n: u64) -> u64 {
        Self::count_generic(&BigUint::from(n)).to_u64().expect("count fits")
    }
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        if lo > hi {
            return;
        }
        let mut r = lo.max(1).sqrt();
        while let Some(start) = r.checked_mul(r).filter(|s| *s <= hi) {
            let end = start + r.sqrt();
            for x in start.max(lo)..=end.min(hi) {
                f(x);
            }
            r += 1;
        }
    }
    fn is_analytic(&self) -> bool {
        true
    }
    fn count_big(&self, n: &BigUint) -> Option<BigUint> {
        Some(Self::count_generic(n))
    }
    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        Some(Self::contains_generic(m))
    }
    fn nth_big(&self, i: &BigUint) -> Option<BigUint> {
        if i.is_zero() {
            return None;
        }
        // n² <= nth(i) for n ~ (3i/2)^{2/3}, so 4i² bounds it from above.
        let hi = i * i * 4u32 + 4u32;
        Some(bisect_big(Self::count_generic, i, BigUint::one(), hi))
    }
}

/// `PS(p/q) = {⌊n^{p/q}⌋ : n >= 1}` for `p/q > 1`; the values are strictly increasing.
#[derive(Clone, Debug)]
pub struct PiatetskiShapiro {
    p: u32,
    q: u32,
}

impl PiatetskiShapiro {
    pub fn new(p: u32, q: u32) -> Self {
        assert!(q >= 1 && p > q, "exponent must exceed 1");
        let g = p.gcd(&q);
        PiatetskiShapiro { p: p / g, q: q / g }
    }

    pub fn exponent(&self) -> (u32, u32) {
        (self.p, self.q)
    }

    /// The sequence view `n -> ⌊n^α⌋`.
    pub fn value(&self, n: u64) -> Option<u64> {
        ps_value(&BigUint::from(n), self.p, self.q).to_u64()
    }
}

impl IntegerSet for PiatetskiShapiro {
    fn describe(&self) -> String {
        format!("piatetski_shapiro({}/{})", self.p, self.q)
    }
    fn horizon(&self) -> Option<u64> {
        None
    }
    fn contains(&self, m: u64) -> bool {
        if m == 0 {
            return false;
        }
        let n = self.count(m);
        n >= 1 && self.value(n) == Some(m)
    }
    fn count(&self, n: u64) -> u64 {
        ps_count(&BigUint::from(n), self.p, self.q).to_u64().expect("count fits")
    }
    fn nth(&self, i: u64) -> Option<u64> {
        if i == 0 {
            return None;
        }
        self.value(i)
    }
    fn for_each_in(&self, lo: u64, hi: u64, f: &mut dyn FnMut(u64)) {
        if lo > hi {
            return;
        }
        let mut n = self.count(lo.saturating_sub(1)) + 1;
        while let Some(x) = self.value(n) {
            if x > hi {
                break;
            }
            f(x);
            n += 1;
        }
    }
    fn is_analytic(&self) -> bool {
        true
    }
    fn count_big(&self, n: &BigUint) -> Option<BigUint> {
        Some(ps_count(n, self.p, self.q))
    }
    fn contains_big(&self, m: &BigUint) -> Option<bool> {
        if m.is_zero() {
            return Some(false);
        }
        let n = ps_count(m, self.p, self.q);
        Some(!n.is_zero() && ps_value(&n, self.p, self.q) == *m)
    }
    fn nth_big(&self, i: &BigUint) -> Option<BigUint> {
        (!i.is_zero()).then(|| ps_value(i, self.p, self.q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intsets::elements_in;
    use proptest::prelude::*;

    fn brute_square_blocks(n: u64) -> Vec<u64> {
        let mut v = Vec::new();
        let mut k = 1u64;
        while k * k <= n {
            for x in k * k..=k * k + k.sqrt() {
                if x <= n {
                    v.push(x);
                }
            }
            k += 1;
        }
        v
    }

    #[test]
    fn square_blocks_match_brute_force() {
        let b = brute_square_blocks(20_000);
        let s = SquareBlocks;
        assert_eq!(elements_in(&s, 1, 20_000), b);
        for n in 0..20_000u64 {
            let c = b.partition_point(|&x| x <= n) as u64;
            assert_eq!(s.count(n), c, "n = {n}");
            assert_eq!(s.contains(n), b.binary_search(&n).is_ok());
        }
        for (i, &x) in b.iter().enumerate().take(500) {
            assert_eq!(s.nth(i as u64 + 1), Some(x));
            assert_eq!(s.nth_big(&BigUint::from(i as u64 + 1)), Some(BigUint::from(x)));
        }
    }

    #[test]
    fn residue_class_counts() {
        let evens = ResidueClass::new(2, 0);
        assert_eq!(evens.count(10), 5);
        assert_eq!(elements_in(&evens, 3, 9), vec![4, 6, 8]);
        let r = ResidueClass::new(4, 1);
        assert_eq!(elements_in(&r, 1, 14), vec![1, 5, 9, 13]);
        assert_eq!(r.count(13), 4);
        assert_eq!(r.count_big(&BigUint::from(13u32)), Some(BigUint::from(4u32)));
    }

    #[test]
    fn piatetski_shapiro_prefix() {
        let ps = PiatetskiShapiro::new(3, 2);
        assert_eq!(elements_in(&ps, 1, 31), vec![1, 2, 5, 8, 11, 14, 18, 22, 27, 31]);
        assert_eq!(ps.count(31), 10);
        assert_eq!(ps.count(30), 9);
    }

    fn consistent(s: &dyn IntegerSet, n: u64) -> bool {
        let c = s.count(n);
        let below = c == 0 || s.nth(c).is_some_and(|x| x <= n);
        let above = s.nth(c + 1).is_none_or(|x| x > n);
        below && above
    }

    proptest! {
        #[test]
        fn count_nth_contains_agree(n in 1u64..5_000_000) {
            let sets: Vec<Box<dyn IntegerSet>> = vec![
                Box::new(Naturals),
                Box::new(ResidueClass::new(3, 2)),
                Box::new(Squares),
                Box::new(SquareBlocks),
                Box::new(PiatetskiShapiro::new(3, 2)),
                Box::new(PiatetskiShapiro::new(5, 3)),
            ];
            for s in &sets {
                prop_assert!(consistent(s.as_ref(), n), "{}", s.describe());
                let grew = s.count(n) - s.count(n - 1);
                prop_assert_eq!(grew == 1, s.contains(n));
                prop_assert_eq!(s.count_big(&BigUint::from(n)), Some(BigUint::from(s.count(n))));
            }
        }
    }
}
