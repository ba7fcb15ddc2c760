//! Shared plans for the insertion tests.

use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{default_epsilons, plan_relative, InsertionPlan, PlanOptions};
use crate::intsets::{build_set, Naturals, PolyDensityParams, SetHandle, SetSpec, SortedSet};
use crate::moran::SeedParams;

pub fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn naturals_fit() -> PolyDensityParams {
    PolyDensityParams::exact(frac(1, 1), frac(0, 1), frac(1, 1), frac(1, 1))
}

/// Seed parameters without a fitted `λ`.
pub fn seed(t: u64, l: BigRational) -> SeedParams {
    SeedParams {
        l,
        l_exact: true,
        t,
        alpha: frac(1, 1),
        beta: frac(0, 1),
        c1: frac(1, 1),
        c2: frac(1, 1),
        lambda: 1.0,
        rho: 1.0,
        nu_count_t: 0,
        bracket_levels: 0,
        lambda_levels: 0,
    }
}

/// `t = 3`, `L = 6/5`, base set `{3, 10, 30}`, one block after position 2.
pub fn toy_plan(block: Vec<u64>) -> InsertionPlan {
    let base: SetHandle = Arc::new(SortedSet::finite("toy", vec![3, 10, 30]).unwrap());
    InsertionPlan::custom(seed(3, frac(6, 5)), base, &[frac(1, 2)], &[2], vec![block]).unwrap()
}

/// The relative plan for `A` = evens inside `S = ℕ` with four blocks.
pub fn naturals_evens() -> &'static InsertionPlan {
    static PLAN: OnceLock<InsertionPlan> = OnceLock::new();
    PLAN.get_or_init(|| {
        let s: SetHandle = Arc::new(Naturals);
        let a = build_set(&SetSpec::evens(), 1_000_000).unwrap();
        plan_relative(&s, &a, &naturals_fit(), &default_epsilons(4), 4, &PlanOptions::default()).unwrap()
    })
}
