//! Exact sampling of `|f(x₁) − f(x₂)| <= C_k |x₁ − x₂|^{1/(1+4ε_k)}` for the
//! elimination map `f`, on pairs of seed words that agree up to a position
//! `n >= M_k`.

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::InsertionPlan;
use crate::cfcore::{ConvergentCursor, DigitWord};
use crate::error::{Error, Result};
use crate::hp::Real;
use crate::serial::ratio_str;

/// Largest `M_k` for which seed words reaching past it are built exactly.
pub const MAX_SAMPLE_DEPTH: u64 = 512;

/// Random seed words per report.
const BASE_WORDS: usize = 8;

/// Branch positions reach at most this far past `M_k`.
const MAX_SPREAD: u64 = 256;

#[derive(Clone, Debug, Serialize)]
pub struct HolderPair {
    /// Index of the base word both seed words extend.
    pub base: usize,
    /// Common prefix length; the words differ at digit `n + 1`.
    pub n: u64,
    pub d1: String,
    pub d2: String,
    pub adjacent: bool,
    /// `log10` of the exact lower bound on `|x₁ − x₂|`.
    pub x_gap_log10: f64,
    /// `log10` of the exact upper bound on `|y₁ − y₂|`.
    pub y_span_log10: f64,
    /// `log C_k + γ log(x gap) − log(y span)`.
    pub margin: f64,
    /// Numerator and denominator factors of the x gap.
    #[serde(skip)]
    pub x_gap: (BigUint, BigUint, BigUint),
    #[serde(skip)]
    pub y_span: (BigUint, BigUint, BigUint),
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderReport {
    pub k: usize,
    #[serde(with = "ratio_str")]
    pub epsilon: num_rational::BigRational,
    /// `1/(1+4ε_k)`.
    pub gamma: f64,
    /// `log D_k` at 128-bit precision.
    pub ln_d_k: String,
    pub d_k_log10: f64,
    /// `C_k = D_k^{-γ}`.
    pub c_k_log10: f64,
    /// Branch positions sampled, `[M_k, n_max]`.
    pub depth_range: (u64, u64),
    pub samples: usize,
    pub pairs: Vec<HolderPair>,
    pub worst_margin: f64,
    pub worst_pair: usize,
    pub pass: bool,
    #[serde(skip)]
    pub base_words: Vec<DigitWord>,
}

/// Random element of `B ∩ [lo, hi]` by rank, with the rank range.
fn window_ranks(plan: &InsertionPlan, n: u64) -> Result<(BigUint, BigUint)> {
    let (lo, hi) = plan.seed.window(n);
    let unknown = || Error::SamplingInfeasible(format!("window {n} of the base set is not countable"));
    let a = plan.base_set.count_big(&(lo - 1u32)).ok_or_else(unknown)?;
    let b = plan.base_set.count_big(&hi).ok_or_else(unknown)?;
    if &b - &a < BigUint::from(2u32) || b < a {
        return Err(Error::SamplingInfeasible(format!("seed window {n} holds fewer than two digits of the base set")));
    }
    Ok((a + 1u32, b))
}

fn nth_digit(plan: &InsertionPlan, rank: &BigUint) -> Result<BigUint> {
    plan.base_set.nth_big(rank).ok_or_else(|| Error::SamplingInfeasible(format!("rank {rank} of the base set is not available")))
}

struct PairSpec {
    slot: usize,
    base: usize,
    n: u64,
    adjacent: bool,
}

/// Samples `samples` pairs branching at positions in `[M_k, min(2M_k, M_k + 256)]` and checks the Hölder bound exactly.
pub fn empirical_holder(plan: &InsertionPlan, k: usize, samples: usize, seed: u64) -> Result<HolderReport> {
    if k == 0 || k > plan.blocks.len() {
        return Err(Error::InvalidInput(format!("block index {k} outside 1..={}", plan.blocks.len())));
    }
    let block = &plan.blocks[k - 1];
    let Some(mk) = block.position_u64().filter(|&m| m <= MAX_SAMPLE_DEPTH) else {
        return Err(Error::SamplingInfeasible(format!(
            "M_{k} = {} exceeds the largest exactly representable sampling depth {MAX_SAMPLE_DEPTH}",
            block.position.to_mag()
        )));
    };
    let n_max = (2 * mk).min(mk + MAX_SPREAD).max(mk);
    for b in &plan.blocks {
        if b.position_u64().is_some_and(|m| m <= n_max) && b.elements.is_none() {
            return Err(Error::SamplingInfeasible(format!("block {} is not materialized", b.k)));
        }
    }
    let eps = block.epsilon.clone();
    let e = Real::from_ratio(&eps);
    let gamma = Real::one() / (Real::one() + Real::from_u64(4) * &e);
    // log D_k = −Σ_{j<=k} 3ε_j (M_j(M_j+1) − M_{j−1}(M_{j−1}+1)) log t.
    let ln_t = Real::from_u64(plan.seed.t).ln();
    let mut ln_d = Real::zero();
    let mut prev = BigUint::zero();
    for b in &plan.blocks[..k] {
        let m = b.position.exact().expect("positions up to M_k are exact").clone();
        let gap = &m * (&m + 1u32) - &prev * (&prev + 1u32);
        ln_d = ln_d - Real::from_u64(3) * Real::from_ratio(&b.epsilon) * Real::from_biguint(&gap) * &ln_t;
        prev = m;
    }
    let ln_c = -(&gamma * &ln_d);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranks: Vec<(BigUint, BigUint)> = (1..=n_max + 1).map(|n| window_ranks(plan, n)).collect::<Result<_>>()?;
    let mut base_words = Vec::with_capacity(BASE_WORDS);
    for _ in 0..BASE_WORDS {
        let mut digits = Vec::with_capacity(n_max as usize);
        for (a, b) in &ranks[..n_max as usize] {
            let r = a + rng.gen_biguint_below(&(b - a + 1u32));
            digits.push(nth_digit(plan, &r)?);
        }
        base_words.push(DigitWord::regular(digits)?);
    }
    let specs: Vec<PairSpec> = (0..samples)
        .map(|slot| {
            let at_mk = slot % 4 == 0;
            PairSpec { slot, base: rng.gen_range(0..BASE_WORDS), n: if at_mk { mk } else { rng.gen_range(mk..=n_max) }, adjacent: at_mk || rng.gen_bool(0.5) }
        })
        .collect();
    // Branch digits are drawn up front so the result does not depend on scheduling.
    let mut digit_pairs = Vec::with_capacity(samples);
    for s in &specs {
        let (a, b) = &ranks[s.n as usize];
        let span = b - a + 1u32;
        let (r1, r2) = if s.adjacent {
            let r = a + rng.gen_biguint_below(&(&span - 1u32));
            (r.clone(), r + 1u32)
        } else {
            let x = rng.gen_biguint_below(&span);
            let mut y = rng.gen_biguint_below(&(&span - 1u32));
            if y >= x {
                y += 1u32;
            }
            (a + x.clone().min(y.clone()), a + x.max(y))
        };
        digit_pairs.push((nth_digit(plan, &r1)?, nth_digit(plan, &r2)?));
    }

    let mut pairs: Vec<Option<HolderPair>> = vec![None; samples];
    let per_base: Vec<Vec<(usize, HolderPair)>> = (0..BASE_WORDS)
        .into_par_iter()
        .map(|g| {
            let mut mine: Vec<&PairSpec> = specs.iter().filter(|s| s.base == g).collect();
            mine.sort_by_key(|s| (s.n, s.slot));
            let word = base_words[g].digits();
            let mut y = ConvergentCursor::new();
            let mut x = ConvergentCursor::new();
            let mut out = Vec::with_capacity(mine.len());
            let mut idx = 0;
            for n in 0..=n_max {
                if n > 0 {
                    let d = &word[n as usize - 1];
                    y.push(d);
                    x.push(d);
                    for b in plan.blocks.iter().filter(|b| b.position_u64() == Some(n)) {
                        x.extend(b.elements.as_ref().expect("checked above"));
                    }
                }
                while idx < mine.len() && mine[idx].n == n {
                    let s = mine[idx];
                    let (d1, d2) = &digit_pairs[s.slot];
                    out.push((s.slot, evaluate(s, &y, &x, d1, d2, &gamma, &ln_c)));
                    idx += 1;
                }
            }
            out
        })
        .collect();
    for list in per_base {
        for (slot, p) in list {
            pairs[slot] = Some(p);
        }
    }
    let pairs: Vec<HolderPair> = pairs.into_iter().map(|p| p.expect("every slot sampled")).collect();
    let (worst_pair, worst_margin) = pairs.iter().enumerate().map(|(i, p)| (i, p.margin)).fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let ln10 = Real::from_u64(10).ln();
    Ok(HolderReport {
        k,
        epsilon: eps,
        gamma: gamma.to_f64(),
        ln_d_k: ln_d.to_decimal(),
        d_k_log10: (&ln_d / &ln10).to_f64(),
        c_k_log10: (&ln_c / &ln10).to_f64(),
        depth_range: (mk, n_max),
        samples,
        pass: samples > 0 && worst_margin >= 0.0,
        worst_margin: if samples == 0 { 0.0 } else { worst_margin },
        worst_pair,
        pairs,
        base_words,
    })
}

/// `(q r + q')` for the cursor's last two denominators.
fn denom(c: &ConvergentCursor, r: &BigUint) -> BigUint {
    &c.q * r + &c.q_prev
}

fn evaluate(s: &PairSpec, y: &ConvergentCursor, x: &ConvergentCursor, d1: &BigUint, d2: &BigUint, gamma: &Real, ln_c: &Real) -> HolderPair {
    // The x-points are separated by the digits strictly between d1 and d2.
    let gap_num = d2 - d1 - 1u32;
    let gx = (gap_num.clone(), denom(x, &(d1 + 1u32)), denom(x, d2));
    // The y-points lie in the hull of the digits d1..=d2.
    let span_num = d2 + 1u32 - d1;
    let sy = (span_num, denom(y, d1), denom(y, &(d2 + 1u32)));
    let ln = |t: &(BigUint, BigUint, BigUint)| Real::ln_biguint(&t.0) - Real::ln_biguint(&t.1) - Real::ln_biguint(&t.2);
    let ln10 = Real::from_u64(10).ln();
    let ln_sy = ln(&sy);
    let (x_log10, margin) = if gap_num.is_zero() {
        (f64::NEG_INFINITY, f64::NEG_INFINITY)
    } else {
        let ln_gx = ln(&gx);
        ((&ln_gx / &ln10).to_f64(), (ln_c + gamma * &ln_gx - &ln_sy).to_f64())
    };
    HolderPair {
        base: s.base,
        n: s.n,
        d1: d1.to_string(),
        d2: d2.to_string(),
        adjacent: s.adjacent,
        x_gap_log10: x_log10,
        y_span_log10: (&ln_sy / &ln10).to_f64(),
        margin,
        x_gap: gx,
        y_span: sy,
    }
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::cfcore::DigitWord;
    use std::sync::Arc;

    use crate::insertion::fixtures::{frac, naturals_evens, seed};
    use crate::insertion::{splice, InsertionPlan};
    use crate::intsets::{ResidueClass, SetHandle};

    fn length(h: (BigRational, BigRational)) -> BigRational {
        h.1 - h.0
    }

    fn exact(t: &(BigUint, BigUint, BigUint)) -> BigRational {
        BigRational::new(t.0.clone().into(), (&t.1 * &t.2).into())
    }

    #[test]
    fn first_block_bound_holds_on_sampled_pairs() {
        let r = empirical_holder(naturals_evens(), 1, 400, 7).unwrap();
        assert!(r.pass, "worst margin {} at {:?}", r.worst_margin, r.pairs[r.worst_pair]);
        assert_eq!(r.depth_range, (196, 392));
        assert_eq!(r.pairs.len(), 400);
        assert!(r.pairs.iter().step_by(4).all(|p| p.n == 196 && p.adjacent));
        assert!((r.gamma - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.c_k_log10 > 0.0 && r.d_k_log10 < 0.0);
    }

    /// Odd seed digits with `t = 3`, `L = 2` and even blocks after positions 20 and 30.
    fn odd_plan() -> InsertionPlan {
        let odd: SetHandle = Arc::new(ResidueClass::new(2, 1));
        let eps = [frac(1, 2), frac(1, 2)];
        InsertionPlan::custom(seed(3, frac(2, 1)), odd, &eps, &[20, 30], vec![vec![4, 8], vec![2]]).unwrap()
    }

    #[test]
    fn gaps_match_fundamental_interval_hulls() {
        let plan = &odd_plan();
        let r = empirical_holder(plan, 1, 200, 11).unwrap();
        assert_eq!(r.depth_range, (20, 40));
        for p in &r.pairs {
            let prefix = DigitWord::regular(r.base_words[p.base].digits()[..p.n as usize].to_vec()).unwrap();
            let x = splice(plan, &prefix).unwrap().word;
            let (d1, d2): (BigUint, BigUint) = (p.d1.parse().unwrap(), p.d2.parse().unwrap());
            let mut xc = ConvergentCursor::new();
            xc.extend(x.digits());
            let mut yc = ConvergentCursor::new();
            yc.extend(prefix.digits());
            assert_eq!(exact(&p.y_span), length(yc.hull_of_next(&d1, &d2)));
            if d2 > &d1 + 1u32 {
                assert_eq!(exact(&p.x_gap), length(xc.hull_of_next(&(&d1 + 1u32), &(&d2 - 1u32))));
            } else {
                assert!(p.x_gap.0.is_zero());
            }
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let a = empirical_holder(naturals_evens(), 1, 64, 3).unwrap();
        let b = empirical_holder(naturals_evens(), 1, 64, 3).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn second_block_is_too_deep_to_sample() {
        assert!(matches!(empirical_holder(naturals_evens(), 2, 10, 1), Err(Error::SamplingInfeasible(_))));
        assert!(matches!(empirical_holder(naturals_evens(), 9, 10, 1), Err(Error::InvalidInput(_))));
    }
}
