//! Independent recomputation of every per-block condition, and the Moran
//! echo comparing the spliced family's mass estimate with the seed's.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::conditions::{self as cond, Check, CheckStatus};
use super::planner::{block_product_check, disjoint_check, exact_prev, monotone_checks, scaled_geometry, ExactBase, Geometry};
use super::{Block, InsertionPlan, PlanKind};
use crate::error::{Error, Result};
use crate::hp::Real;
use crate::magnitude::{Mag, Num};
use crate::moran::{mass_dimension_estimate, max_seed_depth, seed_moran_levels, MoranLevels};

/// Allowed gap between the spliced and the seed mass estimates.
pub const ECHO_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct BlockLedger {
    pub k: usize,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionLedger {
    pub blocks: Vec<BlockLedger>,
    /// No check failed and none is marginal.
    pub pass: bool,
    pub failures: Vec<String>,
    pub marginal: Vec<String>,
}

pub fn verify_plan(plan: &InsertionPlan) -> ConditionLedger {
    let all = recompute_all(plan);
    let mut failures = Vec::new();
    let mut marginal = Vec::new();
    let blocks: Vec<BlockLedger> = plan
        .blocks
        .iter()
        .zip(all)
        .map(|(b, checks)| {
            for c in &checks {
                match c.status {
                    CheckStatus::Fail => failures.push(format!("block {}: {} (margin {:e})", b.k, c.name, c.margin)),
                    CheckStatus::Marginal => marginal.push(format!("block {}: {} (margin {:e})", b.k, c.name, c.margin)),
                    CheckStatus::Pass => {}
                }
            }
            BlockLedger { k: b.k, checks }
        })
        .collect();
    ConditionLedger { pass: failures.is_empty() && marginal.is_empty(), blocks, failures, marginal }
}

fn ln_t(plan: &InsertionPlan) -> Mag {
    Mag::from_real(Real::from_u64(plan.seed.t).ln())
}

/// Window geometry rebuilt from the stored position and window size.
fn geometry(plan: &InsertionPlan, prev: &Num, b: &Block, lt: &Mag) -> Option<Geometry> {
    match (b.window_scale, exact_prev(&plan.seed, prev), &b.window_len) {
        (Some(sigma), _, _) => Some(scaled_geometry(&plan.seed, prev, sigma, lt)),
        (None, Some(mp), Num::Exact(s)) => Some(ExactBase::new(&plan.seed, mp, &b.epsilon).geometry(s)),
        _ => None,
    }
}

fn missing(name: &'static str, note: &str) -> Check {
    Check { name, status: CheckStatus::Fail, margin: -1.0, lhs: String::new(), rhs: String::new(), note: note.into() }
}

fn digit_cost(b: &Block) -> Mag {
    match (&b.elements, &b.window) {
        (Some(e), _) => cond::digit_cost(e),
        (None, Some((_, hi))) => b.w_count.1.to_mag().mul(&Mag::from_u64(2)).mul(&hi.to_mag().add(&Mag::from_u64(1)).ln_abs()),
        (None, None) => Mag::zero(),
    }
}

pub(crate) fn recompute_all(plan: &InsertionPlan) -> Vec<Vec<Check>> {
    let lt = ln_t(plan);
    let mut out = Vec::with_capacity(plan.blocks.len());
    for (i, b) in plan.blocks.iter().enumerate() {
        let prev = plan.position(i);
        let m = &b.position;
        let eps = &b.epsilon;
        let mut checks = Vec::new();
        let eps_f = eps.to_f64().unwrap_or(0.0);
        match plan.kind {
            PlanKind::Relative => {
                match geometry(plan, &prev, b, &lt) {
                    Some(g) => {
                        checks.extend(monotone_checks(eps, &prev, &g, m, &lt));
                        checks.push(block_product_check(eps, &prev, &g, m, &digit_cost(b), &lt));
                    }
                    None => checks.push(missing("window_geometry", "window size is neither exact nor stored as a scale")),
                }
                checks.extend(b.checks.iter().filter(|c| c.name == "prefix_ratio").cloned());
                if b.k >= 2 {
                    if let Some(r) = b.ratio {
                        checks.push(cond::within("inserted_ratio", r, plan.reference_density, eps_f, "#W_k / #(S ∩ I_k) against the reference density"));
                    }
                }
            }
            PlanKind::Banach | PlanKind::Custom => {
                checks.push(cond::tail_separation(eps, m, &lt));
                checks.push(cond::holder_tail(eps, m, &lt));
                checks.push(cond::block_product(eps, &prev, m, &digit_cost(b), &lt));
                if plan.kind == PlanKind::Banach {
                    let prev_len = if i == 0 { 0 } else { plan.blocks[i - 1].banach_len.unwrap_or(0) };
                    checks.push(cond::window_cost(eps, &prev, prev_len, m, &lt));
                    if let Some(r) = b.ratio {
                        checks.push(cond::at_least(
                            "window_ratio",
                            r,
                            plan.reference_density - eps_f,
                            "#W_k / #(ℕ ∩ I_k) against the Banach estimate minus eps",
                        ));
                    }
                }
            }
        }
        let prev_hi = plan.blocks[..i].iter().rev().find_map(|p| p.window.as_ref().map(|w| w.1.clone()));
        if let (Some(ph), Some((lo, _))) = (prev_hi, &b.window) {
            checks.push(disjoint_check(&ph, lo));
        }
        out.push(checks);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EchoReport {
    /// Seed levels used.
    pub depth: u64,
    /// Single-child levels added for inserted digits.
    pub forced_levels: u64,
    pub seed_tail: f64,
    pub seed_last: f64,
    pub spliced_tail: f64,
    pub spliced_last: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Moran levels of the spliced family: seed children at seed positions and one forced child per inserted digit.
pub fn spliced_levels(plan: &InsertionPlan, seed: &MoranLevels) -> Result<MoranLevels> {
    let mut parts = Vec::with_capacity(seed.levels.len());
    let mut cost = Real::zero();
    let two = Real::from_u64(2);
    for lv in &seed.levels {
        parts.push((lv.r.clone(), &lv.ln_delta - &cost));
        for b in plan.blocks.iter().filter(|b| b.position_u64() == Some(lv.n)) {
            let e = b.elements.as_ref().ok_or_else(|| Error::InvalidInput(format!("block {} is not materialized", b.k)))?;
            for d in e {
                cost = cost + &two * Real::ln_biguint(&(d + 1u32));
                parts.push((BigUint::from(1u32), &lv.ln_delta - &cost));
            }
        }
    }
    Ok(MoranLevels::from_parts(parts))
}

/// Compares the mass estimate tails of the seed family and the spliced family at the same seed depth.
pub fn dimension_echo(plan: &InsertionPlan, depth: u64) -> Result<EchoReport> {
    let usable = max_seed_depth(plan.base_set.as_ref(), &plan.seed, depth);
    if usable == 0 {
        return Err(Error::BeyondHorizon { horizon: plan.base_set.horizon().unwrap_or(0), query: "level 1 seed window".into() });
    }
    let seed = seed_moran_levels(plan.base_set.as_ref(), &plan.seed, usable)?;
    let spliced = spliced_levels(plan, &seed)?;
    let a = mass_dimension_estimate(&seed);
    let b = mass_dimension_estimate(&spliced);
    let difference = (a.tail_min - b.tail_min).abs().max((a.last - b.last).abs());
    Ok(EchoReport {
        depth: usable,
        forced_levels: spliced.depth - seed.depth,
        seed_tail: a.tail_min,
        seed_last: a.last,
        spliced_tail: b.tail_min,
        spliced_last: b.last,
        difference,
        tolerance: ECHO_TOLERANCE,
        pass: difference <= ECHO_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::insertion::fixtures::{frac, naturals_evens, seed};
    use crate::intsets::{SetHandle, SortedSet};

    fn toy_base() -> SetHandle {
        Arc::new(SortedSet::finite("toy", vec![3, 10, 30]).unwrap())
    }

    fn custom(positions: &[u64], blocks: Vec<Vec<u64>>) -> InsertionPlan {
        let eps = vec![frac(1, 2); positions.len()];
        InsertionPlan::custom(seed(3, frac(6, 5)), toy_base(), &eps, positions, blocks).unwrap()
    }

    #[test]
    fn small_block_late_position_passes() {
        let ledger = verify_plan(&custom(&[200], vec![vec![7]]));
        assert!(ledger.pass, "{:?}", ledger.failures);
        let names: Vec<_> = ledger.blocks[0].checks.iter().map(|c| c.name).collect();
        assert_eq!(names, ["tail_separation", "holder_tail", "block_product"]);
    }

    #[test]
    fn huge_digit_early_position_fails() {
        let ledger = verify_plan(&custom(&[2], vec![vec![1_000_000_000_000]]));
        assert!(!ledger.pass);
        assert!(ledger.failures.iter().any(|f| f.contains("tail_separation")));
        assert!(ledger.failures.iter().any(|f| f.contains("block_product")));
    }

    #[test]
    fn empty_blocks_pass() {
        let ledger = verify_plan(&custom(&[200, 400], vec![vec![], vec![]]));
        assert!(ledger.pass, "{:?}", ledger.failures);
    }

    #[test]
    fn overlapping_custom_blocks_are_rejected() {
        let eps = vec![frac(1, 2); 2];
        assert!(InsertionPlan::custom(seed(3, frac(6, 5)), toy_base(), &eps, &[200, 400], vec![vec![7], vec![7, 9]]).is_err());
        assert!(InsertionPlan::custom(seed(3, frac(6, 5)), toy_base(), &eps, &[200, 100], vec![vec![7], vec![9]]).is_err());
        assert!(InsertionPlan::custom(seed(3, frac(6, 5)), toy_base(), &eps[..1], &[200], vec![vec![10]]).is_err());
    }

    #[test]
    fn relative_plan_recomputes_to_the_planner_ledger() {
        let plan = naturals_evens();
        let ledger = verify_plan(plan);
        assert!(ledger.pass, "{:?} {:?}", ledger.failures, ledger.marginal);
        for (b, l) in plan.blocks.iter().zip(&ledger.blocks) {
            let mut planned: Vec<_> = b.checks.iter().map(|c| (c.name, c.status)).collect();
            let mut recomputed: Vec<_> = l.checks.iter().map(|c| (c.name, c.status)).collect();
            planned.sort_by_key(|c| c.0);
            recomputed.sort_by_key(|c| c.0);
            assert_eq!(planned, recomputed, "block {}", b.k);
        }
    }

    #[test]
    fn spliced_levels_add_one_forced_level_per_digit() {
        let plan = naturals_evens();
        let seed_levels = seed_moran_levels(plan.base_set.as_ref(), &plan.seed, 200).unwrap();
        let spliced = spliced_levels(plan, &seed_levels).unwrap();
        let w1 = plan.blocks[0].elements.as_ref().unwrap();
        assert_eq!(spliced.depth, seed_levels.depth + w1.len() as u64);
        let forced = &spliced.levels[196..196 + w1.len()];
        assert!(forced.iter().all(|lv| lv.r == BigUint::from(1u32)));
        let cost: f64 = w1.iter().map(|d| 2.0 * (d.to_f64().unwrap() + 1.0).ln()).sum();
        let last = spliced.levels.last().unwrap().ln_delta.to_f64();
        let seed_last = seed_levels.levels.last().unwrap().ln_delta.to_f64();
        assert!((seed_last - cost - last).abs() < 1e-12 * seed_last.abs());
    }

    #[test]
    fn dimension_echo_stays_within_tolerance() {
        let echo = dimension_echo(naturals_evens(), 300).unwrap();
        assert!(echo.pass, "{echo:?}");
        assert_eq!(echo.forced_levels, 5);
    }
}
