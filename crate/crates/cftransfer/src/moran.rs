//! Seed sets `R_{t,L}(K)`: choice of `(L, t, λ)`, the level windows
//! `[tⁿ, Ltⁿ]` with their child counts and gap bounds, and the finite-depth
//! Moran dimension estimates built from them.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{convergence_exponent_est, DensityEstimate};
use crate::error::{Error, Result};
use crate::hp::Real;
use crate::intsets::{IntegerSet, PolyDensityParams, SetHandle};
use crate::serial::{biguint_str, ratio_str, ratio_to_string};
use crate::thinning::{nu_big, ThinSet};

/// Candidate exponents `λ` in `ν(tⁿ) <= (n log t)^λ`, smallest first.
pub const LAMBDA_GRID: [f64; 5] = [1.01, 1.1, 1.25, 1.5, 2.0];

/// Largest `t` tried by the parameter search.
pub const T_CEILING: u64 = 100_000;

/// Levels checked for the count bracket and for `λ` when the set is analytic.
pub const DEFAULT_CHECK_LEVELS: u64 = 64;

/// Relative guard band for comparisons against irrational bounds.
pub const GUARD: f64 = 1e-9;

/// Allowed excess of the mass lower bound over `τ/2`.
pub const DIMENSION_TOLERANCE: f64 = 0.02;

/// Gap bounds are kept as exact rationals while their size stays below this many bits.
const EXACT_DELTA_BITS: f64 = 16_384.0;

/// Decimals kept when `L` is irrational; the value is rounded up.
const L_DECIMALS: u32 = 6;

#[derive(Clone, Debug, Serialize)]
pub struct SeedParams {
    #[serde(rename = "L", with = "ratio_str")]
    pub l: BigRational,
    /// False when `L` was rounded up from an irrational value.
    pub l_exact: bool,
    pub t: u64,
    #[serde(with = "ratio_str")]
    pub alpha: BigRational,
    #[serde(with = "ratio_str")]
    pub beta: BigRational,
    #[serde(with = "ratio_str")]
    pub c1: BigRational,
    #[serde(with = "ratio_str")]
    pub c2: BigRational,
    pub lambda: f64,
    pub rho: f64,
    /// `ν(#(S ∩ [1, t]))`.
    pub nu_count_t: u64,
    /// Levels `1..=bracket_levels` on which the count bracket was confirmed.
    pub bracket_levels: u64,
    pub lambda_levels: u64,
}

impl SeedParams {
    /// Parameters supplied directly; `λ` is still fitted on the grid.
    pub fn manual(l: BigRational, t: u64, fit: &PolyDensityParams, lambda_levels: u64) -> Result<Self> {
        if BigRational::from_integer(BigInt::from(t)) <= l || t <= 2 || l <= BigRational::one() {
            return Err(Error::InvalidInput(format!("need t > L > 1 and t > 2, got t = {t}, L = {}", ratio_to_string(&l))));
        }
        let lambda = fit_lambda(t, lambda_levels)?;
        Ok(SeedParams {
            l,
            l_exact: true,
            t,
            alpha: fit.alpha.clone(),
            beta: fit.beta.clone(),
            c1: fit.c1.clone(),
            c2: fit.c2.clone(),
            lambda,
            rho: fit.beta_f64() + lambda,
            nu_count_t: 0,
            bracket_levels: 0,
            lambda_levels,
        })
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha.to_f64().unwrap_or(f64::NAN)
    }

    pub fn l_f64(&self) -> f64 {
        self.l.to_f64().unwrap_or(f64::NAN)
    }

    pub fn l_real(&self) -> Real {
        Real::from_ratio(&self.l)
    }

    /// `tⁿ`.
    pub fn t_pow(&self, n: u64) -> BigUint {
        BigUint::from(self.t).pow(n as u32)
    }

    /// `⌊L·m⌋`.
    pub fn l_times(&self, m: &BigUint) -> BigUint {
        let v = &self.l * BigRational::from_integer(BigInt::from(m.clone()));
        v.floor().to_integer().to_biguint().expect("positive")
    }

    /// `[tⁿ, ⌊Ltⁿ⌋]`.
    pub fn window(&self, n: u64) -> (BigUint, BigUint) {
        let lo = self.t_pow(n);
        let hi = self.l_times(&lo);
        (lo, hi)
    }
}

/// `L = (12 C1⁻¹ C2 2^β)^α`, exact when `α` and `β` are integers and rounded up otherwise.
pub fn seed_l(fit: &PolyDensityParams) -> (BigRational, bool) {
    let twelve = BigRational::from_integer(BigInt::from(12));
    if fit.alpha.is_integer() && fit.beta.is_integer() {
        let (a, b) = (fit.alpha.to_integer(), fit.beta.to_integer());
        if let (Some(a), Some(b)) = (a.to_i32(), b.to_i32()) {
            let base = twelve * &fit.c2 / &fit.c1 * BigRational::from_integer(BigInt::from(2)).pow(b);
            return (base.pow(a), true);
        }
    }
    let base = Real::from_ratio(&(twelve * &fit.c2 / &fit.c1)) * Real::from_u64(2).powf(&Real::from_ratio(&fit.beta));
    let l = base.powf(&Real::from_ratio(&fit.alpha));
    let scale = 10u64.pow(L_DECIMALS);
    let scaled = (l * Real::from_u64(scale)).to_f64();
    let mut num = scaled.ceil();
    if num - scaled < 1e-6 {
        num += 1.0;
    }
    (BigRational::new(BigInt::from(num as u64), BigInt::from(scale)), false)
}

fn count_at(s: &dyn IntegerSet, n: &BigUint) -> Option<BigUint> {
    s.count_big(n)
}

fn fit_lambda(t: u64, levels: u64) -> Result<f64> {
    let ln_t = (t as f64).ln();
    let nus: Vec<(u64, u64)> = (1..=levels).map(|n| (n, nu_big(&BigUint::from(t).pow(n as u32)))).collect();
    LAMBDA_GRID
        .iter()
        .copied()
        .find(|&lam| nus.iter().all(|&(n, v)| (v as f64) <= (n as f64 * ln_t).powf(lam) * (1.0 + GUARD)))
        .ok_or_else(|| Error::ParameterSearch(format!("no λ in {LAMBDA_GRID:?} bounds ν(tⁿ) for t = {t}")))
}

/// Smallest integer `t > max{L, 3}` with `ν(#(S ∩ [1, t])) >= 2` and the count bracket on every checkable level.
pub fn choose_seed_params(fit: &PolyDensityParams, s: &dyn IntegerSet, n_max: u64) -> Result<SeedParams> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be positive".into()));
    }
    let (l, l_exact) = seed_l(fit);
    let l_real = Real::from_ratio(&l);
    let inv_a = Real::one() / Real::from_ratio(&fit.alpha);
    let two_b = Real::from_u64(2).powf(&Real::from_ratio(&fit.beta));
    let c = Real::from_ratio(&fit.c1) / Real::from_ratio(&fit.c2);
    let l_pow = l_real.powf(&(-&inv_a));
    let lo_b = &c / &two_b * &l_pow * Real::from_f64(1.0 - GUARD);
    let hi_b = &two_b / &c * &l_pow * Real::from_f64(1.0 + GUARD);
    let t0 = (l.floor().to_integer().to_u64().unwrap_or(u64::MAX).saturating_add(1)).max(4);
    let mut last_reason = String::from("ceiling below the starting point");
    for t in t0..=T_CEILING {
        let Some(ct) = count_at(s, &BigUint::from(t)) else {
            return Err(Error::BeyondHorizon { horizon: s.horizon().unwrap_or(0), query: t.to_string() });
        };
        let nu_t = nu_big(&ct.clone().max(BigUint::one()));
        if ct.is_zero() || nu_t < 2 {
            last_reason = format!("t = {t}: ν(#(S ∩ [1, t])) = {}", if ct.is_zero() { 0 } else { nu_t });
            continue;
        }
        let trial = SeedParams {
            l: l.clone(),
            l_exact,
            t,
            alpha: fit.alpha.clone(),
            beta: fit.beta.clone(),
            c1: fit.c1.clone(),
            c2: fit.c2.clone(),
            lambda: 0.0,
            rho: 0.0,
            nu_count_t: nu_t,
            bracket_levels: 0,
            lambda_levels: n_max,
        };
        let mut checked = 0;
        let mut ok = true;
        for n in 1..=n_max {
            let (a, b) = trial.window(n);
            let (Some(ca), Some(cb)) = (count_at(s, &a), count_at(s, &b)) else {
                break;
            };
            if cb.is_zero() {
                ok = false;
                last_reason = format!("t = {t}: S misses [1, L·t^{n}]");
                break;
            }
            let r = Real::from_biguint(&ca) / Real::from_biguint(&cb);
            if r < lo_b || r > hi_b {
                ok = false;
                last_reason = format!("t = {t}: count ratio {} leaves the bracket at n = {n}", r.to_f64());
                break;
            }
            checked = n;
        }
        if !ok {
            continue;
        }
        if checked == 0 {
            return Err(Error::ParameterSearch(format!("t = {t}: no level of the bracket lies inside the set horizon")));
        }
        let lambda = fit_lambda(t, n_max)?;
        return Ok(SeedParams { lambda, rho: fit.beta_f64() + lambda, bracket_levels: checked, ..trial });
    }
    Err(Error::ParameterSearch(format!("no admissible t up to {T_CEILING}; last rejection: {last_reason}")))
}

/// Per-level data of a Moran construction.
#[derive(Clone, Debug, Serialize)]
pub struct MoranLevel {
    pub n: u64,
    /// `[tⁿ, ⌊Ltⁿ⌋]` for seed levels.
    pub window: Option<(String, String)>,
    #[serde(with = "biguint_str")]
    pub r: BigUint,
    /// `δ_n` as an exact rational while it stays small enough to print.
    pub delta: Option<String>,
    pub delta_log10: f64,
    /// Whether `r_n >= ⌊t^{n/α}/(n log t)^ρ⌋`.
    pub low_estimate: Option<bool>,
    #[serde(skip)]
    pub ln_r: Real,
    #[serde(skip)]
    pub ln_delta: Real,
}

#[derive(Clone, Debug, Serialize)]
pub struct MoranLevels {
    pub depth: u64,
    pub levels: Vec<MoranLevel>,
    /// First level from which every later level satisfies the lower estimate.
    pub low_estimate_from: Option<u64>,
}

impl MoranLevels {
    /// Levels built from `(r_n, ln δ_n)` pairs.
    pub fn from_parts(parts: Vec<(BigUint, Real)>) -> Self {
        let ln10 = Real::from_u64(10).ln();
        let levels: Vec<MoranLevel> = parts
            .into_iter()
            .enumerate()
            .map(|(i, (r, ln_delta))| MoranLevel {
                n: i as u64 + 1,
                window: None,
                ln_r: Real::ln_biguint(&r),
                r,
                delta: None,
                delta_log10: (&ln_delta / &ln10).to_f64(),
                low_estimate: None,
                ln_delta,
            })
            .collect();
        MoranLevels { depth: levels.len() as u64, levels, low_estimate_from: None }
    }

    /// `r_n = r` and `δ_n = base^{-n}` for `n = 1..=depth`.
    pub fn geometric(r: u64, base: u64, depth: u64) -> Self {
        let ln_b = Real::from_u64(base).ln();
        let parts = (1..=depth).map(|n| (BigUint::from(r), -(&ln_b * Real::from_u64(n)))).collect();
        let mut lv = Self::from_parts(parts);
        for l in lv.levels.iter_mut() {
            if (l.n as f64) * (base as f64).log2() < EXACT_DELTA_BITS {
                let d = BigRational::new(BigInt::one(), BigInt::from(BigUint::from(base).pow(l.n as u32)));
                l.delta = Some(ratio_to_string(&d));
            }
        }
        lv
    }
}

/// `δ_n = (1/2) ∏_{i=1..n} (L t^{i+1})⁻² = 1 / (2 L^{2n} t^{n(n+3)})`.
pub fn seed_gap_exact(l: &BigRational, t: u64, n: u64) -> BigRational {
    let lp = l.pow(2 * n as i32);
    let tp = BigInt::from(BigUint::from(t).pow((n * (n + 3)) as u32));
    BigRational::new(BigInt::one(), BigInt::from(2) * tp) / lp
}

/// `ln δ_n` for the seed gap bound.
pub fn seed_gap_ln(l: &Real, ln_t: &Real, n: u64) -> Real {
    -(Real::ln2() + Real::from_u64(2 * n) * l.ln() + Real::from_u64(n * (n + 3)) * ln_t)
}

fn count_between(k: &dyn IntegerSet, lo: &BigUint, hi: &BigUint) -> Option<BigUint> {
    let a = k.count_big(&(lo - 1u32))?;
    let b = k.count_big(hi)?;
    Some(b - a)
}

/// Largest `n <= depth` whose window is countable in `k`.
pub fn max_seed_depth(k: &dyn IntegerSet, params: &SeedParams, depth: u64) -> u64 {
    (1..=depth).take_while(|&n| k.count_big(&params.window(n).1).is_some()).last().unwrap_or(0)
}

/// Windows, exact child counts `r_n = #(K ∩ [tⁿ, Ltⁿ])` and gap bounds for `n = 1..=depth`.
pub fn seed_moran_levels(k: &dyn IntegerSet, params: &SeedParams, depth: u64) -> Result<MoranLevels> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let l = params.l_real();
    let ln_t = Real::from_u64(params.t).ln();
    let ln10 = Real::from_u64(10).ln();
    let inv_a = 1.0 / params.alpha_f64();
    let bits_per = (params.t as f64).log2();
    let l_bits = (params.l.numer().bits() + params.l.denom().bits()) as f64;
    let levels: Vec<MoranLevel> = (1..=depth)
        .into_par_iter()
        .map(|n| {
            let (lo, hi) = params.window(n);
            let r = count_between(k, &lo, &hi)
                .ok_or_else(|| Error::BeyondHorizon { horizon: k.horizon().unwrap_or(0), query: format!("level {n} window end {hi}") })?;
            if r < BigUint::from(2u32) {
                return Err(Error::ThinWindow { level: n as usize, count: r.to_string() });
            }
            let ln_r = Real::ln_biguint(&r);
            let ln_delta = seed_gap_ln(&l, &ln_t, n);
            let exact_bits = (n * (n + 3)) as f64 * bits_per + 2.0 * n as f64 * l_bits;
            let delta = (exact_bits < EXACT_DELTA_BITS).then(|| ratio_to_string(&seed_gap_exact(&params.l, params.t, n)));
            // r_n >= ⌊x⌋ iff r_n + 1 > x for integer r_n.
            let nf = Real::from_u64(n);
            let ln_x = Real::from_f64(n as f64 * inv_a) * &ln_t - Real::from_f64(params.rho) * (&nf * &ln_t).ln();
            let low = Real::ln_biguint(&(&r + 1u32)) > ln_x;
            Ok(MoranLevel {
                n,
                window: Some((lo.to_string(), hi.to_string())),
                r,
                delta,
                delta_log10: (&ln_delta / &ln10).to_f64(),
                low_estimate: Some(low),
                ln_r,
                ln_delta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let low_estimate_from = match levels.iter().rposition(|l| l.low_estimate == Some(false)) {
        None => Some(1),
        Some(i) if i + 1 < levels.len() => Some(levels[i + 1].n),
        Some(_) => None,
    };
    Ok(MoranLevels { depth, levels, low_estimate_from })
}

#[derive(Clone, Debug, Serialize)]
pub struct MassPoint {
    pub n: u64,
    pub d: f64,
    pub decimal: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MassEstimate {
    pub points: Vec<MassPoint>,
    /// Minimum of `d_n` over `n ∈ [⌈depth/2⌉, depth]`.
    pub tail_min: f64,
    pub last: f64,
}

impl MassEstimate {
    /// `d_n` for `n` in `from..=to`.
    pub fn range(&self, from: u64, to: u64) -> impl Iterator<Item = &MassPoint> {
        self.points.iter().filter(move |p| p.n >= from && p.n <= to)
    }

    /// True when `d_n` strictly increases over the last `k` levels.
    pub fn increasing_over_last(&self, k: usize) -> bool {
        let n = self.points.len();
        if n < 2 {
            return true;
        }
        self.points[n.saturating_sub(k)..].windows(2).all(|w| w[1].d > w[0].d)
    }
}

/// `d_n = log(r_1⋯r_{n−1}) / (−log(r_n δ_n))`; levels with `r_n δ_n >= 1` give no bound and report 0.
pub fn mass_dimension_estimate(levels: &MoranLevels) -> MassEstimate {
    let mut acc = Real::zero();
    let mut points = Vec::with_capacity(levels.levels.len());
    for lv in &levels.levels {
        let den = -(&lv.ln_r + &lv.ln_delta);
        let d = if den.is_positive() { (&acc / &den).to_f64() } else { 0.0 };
        points.push(MassPoint { n: lv.n, d, decimal: format!("{d:.12}") });
        acc = acc + &lv.ln_r;
    }
    let depth = points.len() as u64;
    let from = depth.div_ceil(2).max(1);
    let tail_min = points.iter().filter(|p| p.n >= from).map(|p| p.d).fold(f64::INFINITY, f64::min);
    let last = points.last().map(|p| p.d).unwrap_or(0.0);
    MassEstimate { points, tail_min: if depth == 0 { 0.0 } else { tail_min }, last }
}

/// Level-wise outcome of `0 <= ν(#(S ∩ [1, Ltⁿ])) − ν(#(S ∩ [1, tⁿ])) <= 1`.
#[derive(Clone, Debug, Serialize)]
pub struct NuStepReport {
    pub checked_to: u64,
    pub failures: Vec<u64>,
    /// First level from which every checked level passes.
    pub from: Option<u64>,
}

pub fn nu_step_report(s: &dyn IntegerSet, params: &SeedParams, depth: u64) -> NuStepReport {
    let mut failures = Vec::new();
    let mut checked_to = 0;
    for n in 1..=depth {
        let (a, b) = params.window(n);
        let (Some(ca), Some(cb)) = (s.count_big(&a), s.count_big(&b)) else {
            break;
        };
        let (va, vb) = (nu_big(&ca.max(BigUint::one())), nu_big(&cb.max(BigUint::one())));
        if vb < va || vb - va > 1 {
            failures.push(n);
        }
        checked_to = n;
    }
    let from = match failures.last() {
        None if checked_to > 0 => Some(1),
        Some(&f) if f < checked_to => Some(f + 1),
        _ => None,
    };
    NuStepReport { checked_to, failures, from }
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionReport {
    pub set: String,
    pub params: SeedParams,
    pub depth_requested: u64,
    pub depth: u64,
    pub lower: MassEstimate,
    pub upper: f64,
    pub upper_decimal: String,
    /// `1/(2α)`.
    pub target: f64,
    pub tau: DensityEstimate,
    pub nu_step: NuStepReport,
    pub low_estimate_from: Option<u64>,
    pub tolerance: f64,
    /// Lower-bound tail at most `τ/2` plus the tolerance.
    pub consistent: bool,
}

/// Mass lower bounds on the seed levels of `S_*` next to the upper bound `τ_est/2`.
pub fn dimension_report(s: &SetHandle, params: &SeedParams, depth: u64, tau_horizon: u64) -> Result<DimensionReport> {
    let k = ThinSet::new(s.clone());
    let usable = max_seed_depth(&k, params, depth);
    if usable == 0 {
        return Err(Error::BeyondHorizon { horizon: s.horizon().unwrap_or(0), query: "level 1 seed window".into() });
    }
    let levels = seed_moran_levels(&k, params, usable)?;
    let lower = mass_dimension_estimate(&levels);
    let tau = convergence_exponent_est(s.as_ref(), tau_horizon)?;
    let upper = tau.value / 2.0;
    let consistent = lower.tail_min <= upper + DIMENSION_TOLERANCE && lower.last <= upper + DIMENSION_TOLERANCE;
    Ok(DimensionReport {
        set: s.describe(),
        params: params.clone(),
        depth_requested: depth,
        depth: usable,
        upper,
        upper_decimal: format!("{upper:.12}"),
        target: 1.0 / (2.0 * params.alpha_f64()),
        nu_step: nu_step_report(s.as_ref(), params, usable),
        low_estimate_from: levels.low_estimate_from,
        lower,
        tau,
        tolerance: DIMENSION_TOLERANCE,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intsets::{build_set, fit_poly_density, Naturals, SetSpec};
    use crate::thinning::q_enumerate;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn frac(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn naturals_fit() -> PolyDensityParams {
        PolyDensityParams::exact(frac(1, 1), frac(0, 1), frac(1, 1), frac(1, 1))
    }

    #[test]
    fn naturals_seed_parameters() {
        let p = choose_seed_params(&naturals_fit(), &Naturals, DEFAULT_CHECK_LEVELS).unwrap();
        assert_eq!(p.l, frac(12, 1));
        assert!(p.l_exact);
        assert_eq!(p.t, 13);
        assert_eq!(p.nu_count_t, 3);
        assert_eq!(p.bracket_levels, DEFAULT_CHECK_LEVELS);
        // ν(13) = 3 > (log 13)^{1.1} ≈ 2.82, while (log 13)^{1.25} ≈ 3.25.
        assert_eq!(p.lambda, 1.25);
        assert_eq!(p.rho, 1.25);
    }

    #[test]
    fn piatetski_shapiro_l() {
        let fit = PolyDensityParams::exact(frac(3, 2), frac(0, 1), frac(1, 1), frac(1, 1));
        let (l, exact) = seed_l(&fit);
        assert!(!exact);
        let v = l.to_f64().unwrap();
        assert!(v >= 12f64.powf(1.5) && v - 12f64.powf(1.5) < 2e-6, "{v}");
    }

    #[test]
    fn piatetski_shapiro_search_with_fitted_constants() {
        let s = build_set(&SetSpec::ps("3/2"), 1_000_000).unwrap();
        let fit = fit_poly_density(s.as_ref(), &frac(3, 2), &frac(0, 1), (100, 1_000_000)).unwrap();
        let p = choose_seed_params(&fit, s.as_ref(), 40).unwrap();
        assert!(BigRational::from_integer(BigInt::from(p.t)) > p.l);
        assert!(p.t as f64 <= p.l_f64() + 10.0, "t = {}", p.t);
        assert_eq!(p.bracket_levels, 40);
    }

    #[test]
    fn primes_search_is_limited_by_the_horizon() {
        let s = build_set(&SetSpec::Primes, 10_000_000).unwrap();
        let fit = fit_poly_density(s.as_ref(), &frac(1, 1), &frac(1, 1), (1_000, 10_000_000)).unwrap();
        let p = choose_seed_params(&fit, s.as_ref(), 20).unwrap();
        assert!(p.bracket_levels >= 2 && p.bracket_levels < 20, "{}", p.bracket_levels);
    }

    #[test]
    fn naturals_first_level() {
        let p = choose_seed_params(&naturals_fit(), &Naturals, 8).unwrap();
        let lv = seed_moran_levels(&Naturals, &p, 3).unwrap();
        assert_eq!(lv.levels[0].window, Some(("13".into(), "156".into())));
        assert_eq!(lv.levels[0].r, BigUint::from(144u32));
        assert_eq!(lv.levels[0].delta.as_deref(), Some(ratio_to_string(&frac(1, 2 * 2028 * 2028)).as_str()));
    }

    #[test]
    fn thin_first_level_matches_enumeration() {
        let p = choose_seed_params(&naturals_fit(), &Naturals, 8).unwrap();
        let k = ThinSet::new(Arc::new(Naturals));
        let lv = seed_moran_levels(&k, &p, 2).unwrap();
        let oracle = q_enumerate(156).into_iter().filter(|&q| q >= 13).count();
        assert_eq!(lv.levels[0].r, BigUint::from(oracle));
    }

    #[test]
    fn gap_bounds_decrease_exactly() {
        let l = frac(83, 2);
        let mut prev = frac(1, 2);
        for n in 1..40 {
            let d = seed_gap_exact(&l, 42, n);
            assert!(d < prev && d > BigRational::zero());
            let prod = (1..=n).fold(frac(1, 2), |acc, i| {
                let f = &l * BigRational::from_integer(BigInt::from(BigUint::from(42u32).pow(i as u32 + 1)));
                acc / (&f * &f)
            });
            assert_eq!(d, prod);
            prev = d;
        }
    }

    #[test]
    fn gap_log_matches_exact() {
        let l = frac(12, 1);
        for n in [1u64, 5, 17] {
            let exact = Real::ln_ratio(&seed_gap_exact(&l, 13, n));
            let closed = seed_gap_ln(&Real::from_u64(12), &Real::from_u64(13).ln(), n);
            assert!((exact - closed).abs().to_f64() < 1e-25);
        }
    }

    #[test]
    fn cantor_oracles() {
        let third = mass_dimension_estimate(&MoranLevels::geometric(2, 3, 10_000));
        assert!((third.last - 2f64.ln() / 3f64.ln()).abs() < 1e-3);
        let quarter = mass_dimension_estimate(&MoranLevels::geometric(2, 4, 10_000));
        assert!((quarter.last - 0.5).abs() < 1e-3);
        // (n−1) log 2 / (2n log 2 − log 2) = (n−1)/(2n−1).
        for p in quarter.range(2, 50) {
            assert!((p.d - (p.n - 1) as f64 / (2 * p.n - 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn naturals_dimension_trend() {
        let s: SetHandle = Arc::new(Naturals);
        let p = choose_seed_params(&naturals_fit(), &Naturals, DEFAULT_CHECK_LEVELS).unwrap();
        let k = ThinSet::new(s.clone());
        let m = mass_dimension_estimate(&seed_moran_levels(&k, &p, 300).unwrap());
        assert!((0.45..=0.5).contains(&m.last), "{}", m.last);
        assert!(m.increasing_over_last(100));
    }

    #[test]
    fn naturals_low_estimate_regime() {
        let p = choose_seed_params(&naturals_fit(), &Naturals, DEFAULT_CHECK_LEVELS).unwrap();
        let k = ThinSet::new(Arc::new(Naturals));
        let lv = seed_moran_levels(&k, &p, 60).unwrap();
        let from = lv.low_estimate_from.unwrap();
        assert!(lv.levels.iter().filter(|l| l.n >= from).all(|l| l.low_estimate == Some(true)));
        assert_eq!(from, 1);
    }

    #[test]
    fn empty_window_is_an_error() {
        let p = choose_seed_params(&naturals_fit(), &Naturals, 8).unwrap();
        let k = build_set(&SetSpec::Explicit { values: vec![13, 14, 200] }, 10_000).unwrap();
        assert!(seed_moran_levels(k.as_ref(), &p, 1).is_ok());
        assert!(matches!(seed_moran_levels(k.as_ref(), &p, 2), Err(Error::ThinWindow { level: 2, .. })));
    }

    #[test]
    fn naturals_report() {
        let s = build_set(&SetSpec::Naturals, 1_000_000).unwrap();
        let p = choose_seed_params(&naturals_fit(), s.as_ref(), DEFAULT_CHECK_LEVELS).unwrap();
        let r = dimension_report(&s, &p, 100, 1_000_000).unwrap();
        assert!((r.upper - 0.5).abs() < 0.01);
        assert!(r.consistent);
        assert_eq!(r.depth, 100);
        // ν(13) = 3 and ν(156) = 5 break the unit step at level 1 only.
        assert_eq!(r.nu_step.failures, vec![1]);
        assert_eq!(r.nu_step.from, Some(2));
    }

    #[test]
    fn primes_report_depth_is_truncated() {
        let s = build_set(&SetSpec::Primes, 10_000_000).unwrap();
        let fit = fit_poly_density(s.as_ref(), &frac(1, 1), &frac(1, 1), (1_000, 10_000_000)).unwrap();
        let p = choose_seed_params(&fit, s.as_ref(), 20).unwrap();
        let r = dimension_report(&s, &p, 20, 10_000_000).unwrap();
        assert!(r.depth < 20);
        // log π(N) / log N approaches 1 only like 1 − log log N / log N.
        let oracle = (s.count(10_000_000) as f64).ln() / 1e7f64.ln() / 2.0;
        assert!(r.upper >= oracle && r.upper < 0.45, "{} {oracle}", r.upper);
        assert!(r.consistent);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn geometric_estimates_match_closed_form(r in 2u64..6, extra in 1u64..6, n in 2u64..200) {
            let base = r + extra;
            let m = mass_dimension_estimate(&MoranLevels::geometric(r, base, n));
            let (lr, lb) = ((r as f64).ln(), (base as f64).ln());
            let want = (n - 1) as f64 * lr / (n as f64 * lb - lr);
            prop_assert!((m.last - want).abs() < 1e-12);
        }

        #[test]
        fn exact_gap_is_strictly_decreasing(num in 5i64..200, t_extra in 1u64..20, n in 1u64..12) {
            let l = frac(num, 4);
            let t = (num as u64) / 4 + t_extra + 2;
            prop_assert!(seed_gap_exact(&l, t, n + 1) < seed_gap_exact(&l, t, n));
        }
    }
}
