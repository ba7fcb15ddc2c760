//! Exhaustive searches for arithmetic, polynomial and graph progressions in
//! integer sets, and the location of witness values as digit indices inside
//! the blocks of an insertion plan.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::insertion::{InsertSource, InsertionPlan, PlanKind};
use crate::intsets::{ps_value, ps_value_u64, IntegerSet};
use crate::magnitude::Num;
use crate::serial::{bigint_str, biguint_str, biguint_vec_str};

/// Digits scanned inside a block window when locating a value that is not materialized.
pub const LOCATE_SCAN: u64 = 1_000_000;

/// An integer polynomial vanishing at zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntPolynomial {
    /// Coefficients of `X^0, X^1, …`; the first is always zero.
    coefficients: Vec<i64>,
}

impl IntPolynomial {
    /// From the coefficients of `X^0, X^1, …`; the constant term must be zero and the degree at least one.
    pub fn new(coefficients: Vec<i64>) -> Result<Self> {
        if coefficients.first().copied().unwrap_or(0) != 0 {
            return Err(Error::InvalidInput("polynomials must vanish at 0".into()));
        }
        let mut c = coefficients;
        while c.last() == Some(&0) {
            c.pop();
        }
        if c.len() < 2 {
            return Err(Error::InvalidInput("polynomials must have degree at least 1".into()));
        }
        Ok(IntPolynomial { coefficients: c })
    }

    /// `c·X`.
    pub fn linear(c: i64) -> Result<Self> {
        Self::new(vec![0, c])
    }

    /// `X^d`.
    pub fn monomial(d: usize) -> Result<Self> {
        let mut c = vec![0; d + 1];
        c[d] = 1;
        Self::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    pub fn eval(&self, m: &BigInt) -> BigInt {
        self.coefficients.iter().rev().fold(BigInt::zero(), |acc, &c| acc * m + c)
    }

    /// `h(m)` when it fits in `i128`.
    pub fn eval_i128(&self, m: i128) -> Option<i128> {
        self.coefficients.iter().rev().try_fold(0i128, |acc, &c| acc.checked_mul(m)?.checked_add(c as i128))
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (d, &c) in self.coefficients.iter().enumerate().rev().filter(|(_, &c)| c != 0) {
            let sign = if c < 0 { "-" } else { "+" };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.unsigned_abs();
            if a != 1 {
                write!(f, "{a}")?;
            }
            match d {
                1 => write!(f, "X")?,
                _ => write!(f, "X^{d}")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgressionKind {
    Ap,
    Poly,
    Graph,
}

/// A progression on the graph `{(n, ⌊n^α⌋)}`: `n_j = n_1 + (j−1) m_1` and `⌊n_j^α⌋ = ⌊n_1^α⌋ + (j−1) m_2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphProgression {
    pub alpha_num: u32,
    pub alpha_den: u32,
    pub n_start: u64,
    pub n_step: u64,
    pub value_step: u64,
    pub n_values: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProgressionWitness {
    pub kind: ProgressionKind,
    #[serde(with = "bigint_str")]
    pub k: BigInt,
    #[serde(with = "biguint_str")]
    pub m: BigUint,
    pub length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polys: Option<Vec<IntPolynomial>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphProgression>,
    #[serde(with = "biguint_vec_str")]
    pub values: Vec<BigUint>,
}

impl ProgressionWitness {
    fn ap(k: BigInt, m: BigUint, values: Vec<BigUint>) -> Self {
        ProgressionWitness { kind: ProgressionKind::Ap, k, m, length: values.len(), polys: None, graph: None, values }
    }

    /// The values implied by `k`, `m` and the kind, recomputed from scratch.
    pub fn implied_values(&self) -> Vec<BigInt> {
        let m = BigInt::from(self.m.clone());
        match (&self.kind, &self.polys, &self.graph) {
            (ProgressionKind::Poly, Some(polys), _) => polys.iter().map(|h| &self.k + h.eval(&m)).collect(),
            (ProgressionKind::Graph, _, Some(g)) => g.n_values.iter().map(|&n| BigInt::from(ps_value(&BigUint::from(n), g.alpha_num, g.alpha_den))).collect(),
            _ => (1..=self.length).map(|j| &self.k + &m * j).collect(),
        }
    }

    /// True when the stored values match the definition and every one passes `member`.
    pub fn revalidate(&self, member: impl Fn(&BigUint) -> Option<bool>) -> bool {
        if self.values.len() != self.length || self.length == 0 {
            return false;
        }
        let implied = self.implied_values();
        if implied.len() != self.length || implied.iter().zip(&self.values).any(|(a, b)| *a != BigInt::from(b.clone())) {
            return false;
        }
        if let Some(g) = &self.graph {
            let ok_n = g.n_values.iter().enumerate().all(|(j, &n)| n == g.n_start + j as u64 * g.n_step);
            let step = BigUint::from(g.value_step);
            let ok_v = self.values.windows(2).all(|w| w[1] == &w[0] + &step);
            return ok_n && ok_v && g.n_step > 0 && g.value_step > 0;
        }
        self.values.iter().all(|v| !v.is_zero() && member(v) == Some(true))
    }
}

fn check_range(s: &dyn IntegerSet, max_value: u64, what: &str) -> Result<()> {
    match s.horizon() {
        Some(h) if h < max_value => Err(Error::BeyondHorizon { horizon: h, query: format!("{what} reaches {max_value}") }),
        _ => Ok(()),
    }
}

fn member(s: &dyn IntegerSet, v: i128) -> bool {
    v >= 1 && u64::try_from(v).is_ok_and(|v| s.contains(v))
}

/// Smallest `(m, k)` in lexicographic order with `k + m, …, k + ℓm ∈ S`, `|k| <= k_bound`, `m <= m_bound`.
pub fn find_ap(s: &dyn IntegerSet, len: usize, k_bound: u64, m_bound: u64) -> Result<Option<ProgressionWitness>> {
    if len < 3 || k_bound < 1 || m_bound < 1 {
        return Err(Error::InvalidInput("need length >= 3 and bounds >= 1".into()));
    }
    let top = k_bound.saturating_add((len as u64).saturating_mul(m_bound));
    check_range(s, top, "the progression search")?;
    let kb = k_bound as i128;
    let hit = (1..=m_bound).into_par_iter().find_map_first(|m| {
        let m = m as i128;
        (-kb.min(m - 1)..=kb).find(|&k| (1..=len as i128).all(|j| member(s, k + j * m))).map(|k| (k, m))
    });
    Ok(hit.map(|(k, m)| {
        let values = (1..=len as i128).map(|j| BigUint::from((k + j * m) as u64)).collect();
        ProgressionWitness::ap(BigInt::from(k), BigUint::from(m as u64), values)
    }))
}

/// Smallest `(m, k)` with every `k + h_j(m) ∈ S` and at least 1, `|k| <= k_bound`, `m <= m_bound`.
pub fn find_poly_progression(s: &dyn IntegerSet, polys: &[IntPolynomial], k_bound: u64, m_bound: u64) -> Result<Option<ProgressionWitness>> {
    if polys.is_empty() || k_bound < 1 || m_bound < 1 {
        return Err(Error::InvalidInput("need at least one polynomial and bounds >= 1".into()));
    }
    let kb = k_bound as i128;
    let hit = (1..=m_bound).into_par_iter().find_map_first(|m| {
        let h: Vec<i128> = polys.iter().map(|p| p.eval_i128(m as i128)).collect::<Option<_>>()?;
        let lo = (1 - h.iter().min()?).max(-kb);
        (lo..=kb).find(|&k| h.iter().all(|&v| member(s, k + v))).map(|k| (k, m, h))
    });
    let Some((k, m, h)) = hit else {
        return Ok(None);
    };
    if let Some(hz) = s.horizon() {
        // Values past the horizon were rejected, so a hit is trusted only when none of them was needed.
        let reach = polys.iter().filter_map(|p| p.eval_i128(m_bound as i128)).max().unwrap_or(0) + kb;
        if reach > hz as i128 {
            check_range(s, u64::try_from(reach).unwrap_or(u64::MAX), "the polynomial search")?;
        }
    }
    Ok(Some(ProgressionWitness {
        kind: ProgressionKind::Poly,
        k: BigInt::from(k),
        m: BigUint::from(m),
        length: polys.len(),
        polys: Some(polys.to_vec()),
        graph: None,
        values: h.iter().map(|&v| BigUint::from((k + v) as u64)).collect(),
    }))
}

/// Smallest `(m_1, n_1)` in lexicographic order with `⌊n_j^α⌋` an arithmetic progression for `n_j = n_1 + (j−1) m_1`, `j <= ℓ`, `n_ℓ <= n_bound`.
pub fn find_graph_ap(alpha_num: u32, alpha_den: u32, len: usize, n_bound: u64) -> Result<Option<ProgressionWitness>> {
    if len < 3 || alpha_den == 0 || alpha_num <= alpha_den || alpha_num >= 2 * alpha_den {
        return Err(Error::InvalidInput("need length >= 3 and 1 < alpha < 2".into()));
    }
    let f = |n: u64| ps_value_u64(n, alpha_num, alpha_den);
    let steps = len as u64 - 1;
    let hit = (1..=n_bound / steps.max(1)).into_par_iter().find_map_first(|m1| {
        (1..=n_bound.saturating_sub(steps * m1)).find_map(|n1| {
            let first = f(n1)?;
            let m2 = f(n1 + m1)?.checked_sub(first).filter(|&d| d > 0)?;
            (2..len as u64).all(|j| f(n1 + j * m1) == Some(first + j * m2)).then_some((n1, m1, m2, first))
        })
    });
    Ok(hit.map(|(n1, m1, m2, first)| {
        let n_values: Vec<u64> = (0..len as u64).map(|j| n1 + j * m1).collect();
        ProgressionWitness {
            kind: ProgressionKind::Graph,
            k: BigInt::from(first) - m2,
            m: BigUint::from(m2),
            length: len,
            polys: None,
            graph: Some(GraphProgression { alpha_num, alpha_den, n_start: n1, n_step: m1, value_step: m2, n_values }),
            values: (0..len as u64).map(|j| BigUint::from(first + j * m2)).collect(),
        }
    }))
}

/// Smallest-`(m, k)` progression of length `ℓ` inside the first `per_block` digits of a single block, earliest block first.
pub fn find_block_ap(plan: &InsertionPlan, len: usize, per_block: usize) -> Option<ProgressionWitness> {
    if len < 2 {
        return None;
    }
    for k in 1..=plan.blocks.len() {
        let Some(digits) = plan.block_prefix(k, per_block) else {
            continue;
        };
        let mut best: Option<(BigUint, usize)> = None;
        for i in 0..digits.len() {
            for j in i + 1..digits.len() {
                let m = &digits[j] - &digits[i];
                if best.as_ref().is_some_and(|(bm, _)| &m > bm) {
                    break;
                }
                let full = (2..len).all(|r| digits.binary_search(&(&digits[i] + &m * r)).is_ok());
                let better = match &best {
                    None => true,
                    Some((bm, bi)) => m < *bm || (m == *bm && i < *bi),
                };
                if full && better {
                    best = Some((m, i));
                }
            }
        }
        if let Some((m, i)) = best {
            let values: Vec<BigUint> = (0..len).map(|r| &digits[i] + &m * r).collect();
            let k0 = BigInt::from(values[0].clone()) - BigInt::from(m.clone());
            return Some(ProgressionWitness::ap(k0, m, values));
        }
    }
    None
}

#[derive(Clone, Debug, Serialize)]
pub struct DigitWitness {
    pub witness: ProgressionWitness,
    /// 1-based digit indices, identical in every spliced word of the plan.
    #[serde(with = "biguint_vec_str")]
    pub indices: Vec<BigUint>,
    /// Block holding each value.
    pub blocks: Vec<usize>,
    pub plan_ref: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Located {
    Found(DigitWitness),
    NotLocated { diagnostic: String },
}

impl Located {
    pub fn found(&self) -> Option<&DigitWitness> {
        match self {
            Located::Found(d) => Some(d),
            Located::NotLocated { .. } => None,
        }
    }
}

pub fn plan_ref(plan: &InsertionPlan) -> String {
    let kind = match plan.kind {
        PlanKind::Relative => "relative",
        PlanKind::Banach => "banach",
        PlanKind::Custom => "custom",
    };
    format!("{kind} plan inserting {} into words over {}, {} blocks", plan.insert_source, plan.base, plan.blocks.len())
}

/// Digit indices of the witness values inside the spliced words of `plan`.
pub fn locate_in_digits(plan: &InsertionPlan, w: &ProgressionWitness) -> Result<Located> {
    if w.values.is_empty() {
        return Err(Error::EmptyWitness);
    }
    let mut indices = Vec::with_capacity(w.values.len());
    let mut blocks = Vec::with_capacity(w.values.len());
    for v in &w.values {
        let hit = plan.blocks.iter().find(|b| match &b.window {
            Some((Num::Exact(lo), Num::Exact(hi))) => lo <= v && v <= hi,
            _ => false,
        });
        let Some(b) = hit else {
            return Err(Error::OutsideBlocks { value: v.to_string() });
        };
        match plan.source.contains_big(v) {
            Some(true) => {}
            Some(false) => {
                let why = match &plan.source {
                    InsertSource::Difference { a, thin } if a.contains_big(v) == Some(true) => {
                        format!("it collides with the thin subset {}", thin.describe())
                    }
                    _ => format!("it is not in {}", plan.insert_source),
                };
                return Ok(Located::NotLocated { diagnostic: format!("value {v} lies in I_{} but is not inserted: {why}", b.k) });
            }
            None => return Ok(Located::NotLocated { diagnostic: format!("membership of {v} in {} is unknown", plan.insert_source) }),
        }
        let rank = match &b.elements {
            Some(e) => e.binary_search(v).ok().map(BigUint::from),
            None => scan_rank(plan, b.window.as_ref().and_then(|w| w.0.exact()), v),
        };
        let Some(rank) = rank else {
            return Ok(Located::NotLocated { diagnostic: format!("rank of {v} inside W_{} is beyond the scan budget {LOCATE_SCAN}", b.k) });
        };
        let Some(start) = plan.block_start_index(b.k) else {
            return Ok(Located::NotLocated { diagnostic: format!("start index of W_{} is not exact", b.k) });
        };
        indices.push(start + rank);
        blocks.push(b.k);
    }
    if indices.windows(2).any(|p| p[0] >= p[1]) {
        return Ok(Located::NotLocated { diagnostic: "values do not appear in increasing digit order".into() });
    }
    Ok(Located::Found(DigitWitness { witness: w.clone(), indices, blocks, plan_ref: plan_ref(plan) }))
}

/// 0-based rank of `v` among the inserted digits of the window starting at `lo`.
fn scan_rank(plan: &InsertionPlan, lo: Option<&BigUint>, v: &BigUint) -> Option<BigUint> {
    let lo = lo?;
    if (v - lo).to_u64()? > LOCATE_SCAN {
        return None;
    }
    let mut rank = 0u64;
    let mut x = lo.clone();
    while &x < v {
        if plan.source.contains_big(&x)? {
            rank += 1;
        }
        x += 1u32;
    }
    Some(BigUint::from(rank))
}

/// `|k|` as an unsigned integer, for reports.
pub fn k_abs(w: &ProgressionWitness) -> BigUint {
    w.k.abs().to_biguint().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_traits::One;
    use proptest::prelude::*;

    use super::*;
    use crate::insertion::fixtures::naturals_evens;
    use crate::insertion::{canonical_seed_word, splice};
    use crate::intsets::{build_set, Naturals, SetHandle, SetSpec, SortedSet};

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    fn in_set(s: &SetHandle) -> impl Fn(&BigUint) -> Option<bool> + '_ {
        move |v| s.contains_big(v)
    }

    /// Sequential scan over `(m, k)` without early exits or shared code.
    fn naive_ap(s: &[u64], len: usize, k_bound: i64, m_bound: i64) -> Option<(i64, i64)> {
        for m in 1..=m_bound {
            for k in -k_bound..=k_bound {
                let vals: Vec<i64> = (1..=len as i64).map(|j| k + j * m).collect();
                if vals.iter().all(|&v| v >= 1 && s.contains(&(v as u64))) {
                    return Some((m, k));
                }
            }
        }
        None
    }

    #[test]
    fn evens_have_the_trivial_progression() {
        let s = build_set(&SetSpec::evens(), 1_000).unwrap();
        let w = find_ap(s.as_ref(), 4, 10, 10).unwrap().unwrap();
        assert_eq!((w.k.clone(), w.m.clone()), (BigInt::zero(), BigUint::from(2u32)));
        assert_eq!(w.values, big(&[2, 4, 6, 8]));
        assert!(w.revalidate(in_set(&s)));
    }

    #[test]
    fn primes_five_term_progression_starts_at_five() {
        let s = build_set(&SetSpec::Primes, 10_000).unwrap();
        let w = find_ap(s.as_ref(), 5, 1_000, 1_000).unwrap().unwrap();
        assert_eq!(w.values, big(&[5, 11, 17, 23, 29]));
        assert_eq!(w.m, BigUint::from(6u32));
        assert_eq!(w.k, BigInt::from(-1));
        assert!(w.revalidate(in_set(&s)));
        assert!(w.revalidate(|v| Some(crate::intsets::is_prime_u64(v.to_u64().unwrap()))));
    }

    #[test]
    fn piatetski_shapiro_three_term_progression() {
        let s = build_set(&SetSpec::ps("3/2"), 10_000).unwrap();
        let w = find_ap(s.as_ref(), 3, 100, 100).unwrap().unwrap();
        assert_eq!(w.values, big(&[2, 5, 8]));
        assert_eq!(w.m, BigUint::from(3u32));
        assert!(w.revalidate(|v| {
            let v = v.to_u64()?;
            Some((1..=v).any(|n| ps_value_u64(n, 3, 2) == Some(v)))
        }));
    }

    #[test]
    fn searches_past_the_horizon_are_refused() {
        let s = build_set(&SetSpec::Primes, 100).unwrap();
        assert!(matches!(find_ap(s.as_ref(), 5, 1_000, 1_000), Err(Error::BeyondHorizon { .. })));
    }

    #[test]
    fn polynomial_search_allows_non_positive_shifts() {
        let s: SetHandle = Arc::new(Naturals);
        let polys = vec![IntPolynomial::linear(1).unwrap(), IntPolynomial::monomial(2).unwrap()];
        let w = find_poly_progression(s.as_ref(), &polys, 10, 10).unwrap().unwrap();
        assert_eq!((w.k.clone(), w.m.clone()), (BigInt::zero(), BigUint::one()));
        assert_eq!(w.values, big(&[1, 1]));
        let at = ProgressionWitness { k: BigInt::one(), m: BigUint::from(2u32), values: big(&[3, 5]), ..w };
        assert!(at.revalidate(in_set(&s)));
    }

    #[test]
    fn evens_linear_pair_is_two_four() {
        let s = build_set(&SetSpec::evens(), 1_000).unwrap();
        let polys = vec![IntPolynomial::linear(1).unwrap(), IntPolynomial::linear(2).unwrap()];
        let w = find_poly_progression(s.as_ref(), &polys, 10, 10).unwrap().unwrap();
        assert_eq!((w.k.clone(), w.m.clone()), (BigInt::zero(), BigUint::from(2u32)));
        assert_eq!(w.values, big(&[2, 4]));
        assert!(w.revalidate(in_set(&s)));
    }

    #[test]
    fn primes_linear_pair_exists_and_revalidates() {
        let s = build_set(&SetSpec::Primes, 10_000).unwrap();
        let polys = vec![IntPolynomial::linear(1).unwrap(), IntPolynomial::linear(2).unwrap()];
        let w = find_poly_progression(s.as_ref(), &polys, 1_000, 1_000).unwrap().unwrap();
        assert!(w.revalidate(|v| Some(crate::intsets::is_prime_u64(v.to_u64().unwrap()))));
        assert_eq!(w.values, big(&[2, 3]));
    }

    #[test]
    fn polynomials_reject_constants_and_print_readably() {
        assert!(IntPolynomial::new(vec![1, 1]).is_err());
        assert!(IntPolynomial::new(vec![0, 0]).is_err());
        let h = IntPolynomial::new(vec![0, -1, 0, 3]).unwrap();
        assert_eq!(h.to_string(), "3X^3 - X");
        assert_eq!(h.degree(), 3);
        assert_eq!(h.eval_i128(2), Some(22));
        assert_eq!(h.eval(&BigInt::from(-2)), BigInt::from(-22));
    }

    #[test]
    fn graph_progressions_for_three_halves() {
        let w = find_graph_ap(3, 2, 3, 100).unwrap().unwrap();
        let g = w.graph.clone().unwrap();
        assert_eq!((g.n_start, g.n_step, g.value_step), (2, 1, 3));
        assert_eq!(w.values, big(&[2, 5, 8]));
        assert!(w.revalidate(|_| None));
        let w = find_graph_ap(3, 2, 4, 100).unwrap().unwrap();
        assert_eq!(w.values, big(&[2, 5, 8, 11]));
        assert_eq!(w.graph.unwrap().n_values, vec![2, 3, 4, 5]);
        assert!(find_graph_ap(3, 2, 3, 2).unwrap().is_none());
        assert!(find_graph_ap(2, 1, 3, 100).is_err());
    }

    #[test]
    fn first_block_witness_lands_on_fixed_indices() {
        let plan = naturals_evens();
        let w = ProgressionWitness::ap(BigInt::from(8), BigUint::from(6u32), big(&[14, 20, 26]));
        let found = locate_in_digits(plan, &w).unwrap();
        let d = found.found().unwrap();
        let m1 = plan.blocks[0].position_u64().unwrap();
        assert_eq!(d.indices, big(&[m1 + 1, m1 + 3, m1 + 5]));
        assert_eq!(d.blocks, vec![1, 1, 1]);
        let y = canonical_seed_word(plan, m1 as usize + 1).unwrap();
        let x = splice(plan, &y).unwrap().word;
        for (i, v) in d.indices.iter().zip(&w.values) {
            assert_eq!(&x.digits()[i.to_usize().unwrap() - 1], v);
        }
    }

    #[test]
    fn thin_collisions_are_named() {
        let plan = naturals_evens();
        let w = ProgressionWitness::ap(BigInt::from(12), BigUint::from(2u32), big(&[14, 16, 18]));
        match locate_in_digits(plan, &w).unwrap() {
            Located::NotLocated { diagnostic } => assert!(diagnostic.contains("value 18"), "{diagnostic}"),
            other => panic!("expected a diagnostic, got {other:?}"),
        }
    }

    #[test]
    fn values_outside_blocks_and_empty_witnesses_are_errors() {
        let plan = naturals_evens();
        let w = ProgressionWitness::ap(BigInt::zero(), BigUint::from(2u32), big(&[2, 4, 6, 8]));
        assert!(matches!(locate_in_digits(plan, &w), Err(Error::OutsideBlocks { value }) if value == "2"));
        let empty = ProgressionWitness::ap(BigInt::zero(), BigUint::one(), vec![]);
        assert!(matches!(locate_in_digits(plan, &empty), Err(Error::EmptyWitness)));
    }

    #[test]
    fn block_search_finds_a_second_block_progression() {
        let plan = naturals_evens();
        let w = find_block_ap(plan, 4, 64).unwrap();
        assert!(w.revalidate(|v| plan.source.contains_big(v)));
        let d = locate_in_digits(plan, &w).unwrap();
        let d = d.found().unwrap();
        assert_eq!(d.blocks, vec![2; 4]);
        assert!(d.indices.windows(2).all(|p| p[0] < p[1]));
        let start = plan.block_start_index(2).unwrap();
        assert!(d.indices[0] >= start);
    }

    #[test]
    fn witnesses_serialize_values_as_strings() {
        let w = ProgressionWitness::ap(BigInt::from(-1), BigUint::from(6u32), big(&[5, 11]));
        let j = serde_json::to_value(&w).unwrap();
        assert_eq!(j["kind"], "ap");
        assert_eq!(j["k"], "-1");
        assert_eq!(j["values"][1], "11");
        assert!(j.get("polys").is_none());
    }

    #[test]
    fn search_is_independent_of_worker_count() {
        let s = build_set(&SetSpec::Primes, 100_000).unwrap();
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| find_ap(s.as_ref(), 6, 2_000, 2_000).unwrap())
        };
        let one = run(1);
        assert!(one.is_some());
        assert_eq!(one, run(4));
    }

    proptest! {
        #[test]
        fn ap_search_matches_a_naive_scan(elems in prop::collection::btree_set(1u64..=120, 0..60), len in 3usize..=5) {
            let v: Vec<u64> = elems.iter().copied().collect();
            let s: SetHandle = Arc::new(SortedSet::finite("sample", v.clone()).unwrap());
            let got = find_ap(s.as_ref(), len, 20, 20).unwrap();
            let want = naive_ap(&v, len, 20, 20);
            prop_assert_eq!(got.as_ref().map(|w| (w.m.to_i64().unwrap(), w.k.to_i64().unwrap())), want);
            if let Some(w) = got {
                prop_assert!(w.revalidate(|x| Some(elems.contains(&x.to_u64().unwrap()))));
                if len > 3 {
                    let shorter = find_ap(s.as_ref(), len - 1, 20, 20).unwrap().unwrap();
                    prop_assert!((shorter.m.clone(), shorter.k.clone()) <= (w.m.clone(), w.k.clone()));
                }
            }
        }
    }
}
