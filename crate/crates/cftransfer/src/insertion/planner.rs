//! Greedy-minimal placement of the blocks for the relative construction
//! (`W_k = (A ∖ S_*) ∩ I_k` inserted into seed words over `S_*`) and the
//! Banach construction (`W_k = S ∩ I_k` over `(ℕ ∖ S)_*`).

use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::conditions::{self as cond, Check};
use super::{Block, InsertSource, InsertionPlan, PlanKind};
use crate::density::{banach_density_est, relative_density_est, upper_density_est, BANACH_CONVENTION, TAIL_CONVENTION};
use crate::error::{Error, Result};
use crate::hp::Real;
use crate::intsets::{elements_in, fit_poly_density, Complement, IntegerSet, PolyDensityParams, SetHandle};
use crate::magnitude::{Mag, Num};
use crate::moran::{choose_seed_params, SeedParams, DEFAULT_CHECK_LEVELS};
use crate::thinning::ThinSet;

/// Positions are kept exact while `t^{M_{k-1}}` has at most this many bits.
const EXACT_POWER_BITS: f64 = (1u64 << 22) as f64;

/// Doublings tried when no admissible window size is found.
const MAX_DOUBLINGS: u32 = 4096;

#[derive(Clone, Debug)]
pub struct PlanOptions {
    /// Horizon for the reference density estimates and fits.
    pub density_horizon: u64,
    /// Lower end of the fit window for the Banach complement.
    pub fit_from: u64,
    /// Levels used by the seed parameter search.
    pub seed_levels: u64,
    /// Blocks whose window holds at most this many integers are enumerated.
    pub materialize_limit: u64,
    /// Extra window sizes tried for the prefix-ratio proxy.
    pub scan_budget: u64,
    pub banach_widths: Vec<u64>,
    /// Largest position scanned by the Banach planner.
    pub banach_scan_limit: u64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            density_horizon: 1_000_000,
            fit_from: 100,
            seed_levels: DEFAULT_CHECK_LEVELS,
            materialize_limit: 100_000,
            scan_budget: 10_000,
            banach_widths: vec![8, 16, 32],
            banach_scan_limit: 10_000_000,
        }
    }
}

/// `ε_k = 1/(k+1)` for `k = 1..=n`.
pub fn default_epsilons(n: usize) -> Vec<BigRational> {
    (1..=n).map(|k| BigRational::new(BigInt::one(), BigInt::from(k + 1))).collect()
}

fn check_epsilons(eps: &[BigRational], need: usize) -> Result<()> {
    if eps.len() < need {
        return Err(Error::InvalidInput(format!("need {need} epsilons, got {}", eps.len())));
    }
    if eps.iter().any(|e| !e.is_positive()) || eps.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidInput("epsilons must be positive and non-increasing".into()));
    }
    Ok(())
}

fn horizon_cap(s: &dyn IntegerSet, n: u64) -> u64 {
    s.horizon().map_or(n, |h| h.min(n))
}

fn big(x: &BigUint) -> BigInt {
    BigInt::from(x.clone())
}

fn ratio_int(x: &BigUint) -> BigRational {
    BigRational::from_integer(big(x))
}

fn to_uint(x: &BigInt) -> BigUint {
    x.to_biguint().unwrap_or_default()
}

fn count_in(s: &dyn IntegerSet, lo: &BigUint, hi: &BigUint) -> Option<BigUint> {
    if lo > hi {
        return Some(BigUint::zero());
    }
    let a = s.count_big(&(lo - 1u32))?;
    Some(s.count_big(hi)? - a)
}

struct RelCtx<'a> {
    seed: &'a SeedParams,
    s: &'a SetHandle,
    a: &'a SetHandle,
    thin: SetHandle,
    same: bool,
    d_ref: f64,
    ln_t: Mag,
    opts: &'a PlanOptions,
}

/// Counts of `A ∖ S_*` and `S` on a range, as brackets.
struct RangeCounts {
    w: (Num, Num),
    s: (Num, Num),
    elements: Option<Vec<BigUint>>,
    /// Bracket on `#(A ∖ S_*) / #S` over the range.
    ratio: (f64, f64),
}

impl RangeCounts {
    fn from_exact(w: (BigUint, BigUint), s: BigUint, elements: Option<Vec<BigUint>>) -> Self {
        let den = Real::from_biguint(&s.clone().max(BigUint::one()));
        let ratio = ((Real::from_biguint(&w.0) / &den).to_f64(), (Real::from_biguint(&w.1) / &den).to_f64());
        RangeCounts { w: (Num::Exact(w.0), Num::Exact(w.1)), s: (Num::Exact(s.clone()), Num::Exact(s)), elements, ratio }
    }
}

impl RelCtx<'_> {
    /// Exact counts on `[lo, hi]`, enumerating when the range is small.
    fn exact_counts(&self, lo: &BigUint, hi: &BigUint) -> Option<RangeCounts> {
        let len = if hi >= lo { hi - lo + 1u32 } else { BigUint::zero() };
        let s_cnt = count_in(self.s.as_ref(), lo, hi)?;
        let small = len <= BigUint::from(self.opts.materialize_limit);
        if let (true, Some(lo64), Some(hi64)) = (small, lo.to_u64(), hi.to_u64()) {
            let in_range = |x: &SetHandle| x.horizon().is_none_or(|h| hi64 <= h);
            if in_range(self.a) && in_range(self.s) {
                let thin = elements_in(self.thin.as_ref(), lo64, hi64);
                let elems: Vec<BigUint> =
                    elements_in(self.a.as_ref(), lo64, hi64).into_iter().filter(|x| thin.binary_search(x).is_err()).map(BigUint::from).collect();
                let n = BigUint::from(elems.len());
                return Some(RangeCounts::from_exact((n.clone(), n), s_cnt, Some(elems)));
            }
        }
        let th = count_in(self.thin.as_ref(), lo, hi)?;
        let w = if self.same {
            let v = &s_cnt - &th;
            (v.clone(), v)
        } else {
            let a_cnt = count_in(self.a.as_ref(), lo, hi)?;
            (&a_cnt - th.min(a_cnt.clone()), a_cnt)
        };
        Some(RangeCounts::from_exact(w, s_cnt, None))
    }

    /// Count brackets on a range of length `s = e^{ln_len}` ending at `end_over_len · s`, from the periods of `A` and `S`.
    ///
    /// Every count is kept relative to `s`, so the ratio stays accurate when `s` is far beyond `f64`.
    fn scaled_counts(&self, ln_len: &Mag, end_over_len: f64) -> Option<RangeCounts> {
        let inv = ln_len.neg().exp().to_f64();
        let rel = |set: &SetHandle| -> Option<(f64, f64)> {
            let (c, p) = set.period()?;
            let mid = c as f64 / p as f64;
            Some(((mid - c as f64 * inv).max(0.0), mid + c as f64 * inv))
        };
        let s_br = rel(self.s)?;
        let a_br = if self.same { s_br } else { rel(self.a)? };
        // #S_* ∩ [1, x] <= 3x/ν(x) with ν(x) >= log x / log log x − 2, for x >= #S ∩ [1, end].
        let total_rel = end_over_len * s_br.1 + 1.0;
        let ln_total = ln_len.add(&Mag::from_f64(total_rel.ln()));
        if ln_total.cmp_mag(&Mag::from_u64(64)).is_lt() {
            return None;
        }
        let nu = ln_total.div(&ln_total.ln_abs()).sub(&Mag::from_u64(2));
        let thin_rel = Mag::from_f64(3.0 * total_rel).div(&nu).to_f64();
        let w_rel = ((a_br.0 - thin_rel).max(0.0), a_br.1);
        let ratio = (w_rel.0 / s_br.1, w_rel.1 / s_br.0);
        let len = ln_len.exp();
        let abs = |r: f64| Num::Approx(len.mul(&Mag::from_f64(r)));
        Some(RangeCounts { w: (abs(w_rel.0), abs(w_rel.1)), s: (abs(s_br.0), abs(s_br.1)), elements: None, ratio })
    }
}

enum Step {
    Block(Box<Block>),
    Stop(String),
}

pub fn plan_relative(
    s: &SetHandle,
    a: &SetHandle,
    fit: &PolyDensityParams,
    epsilons: &[BigRational],
    k_max: usize,
    opts: &PlanOptions,
) -> Result<InsertionPlan> {
    check_epsilons(epsilons, k_max)?;
    let seed = choose_seed_params(fit, s.as_ref(), opts.seed_levels)?;
    plan_relative_seeded(s, a, seed, epsilons, k_max, opts)
}

/// `plan_relative` with seed parameters chosen by the caller.
pub fn plan_relative_seeded(
    s: &SetHandle,
    a: &SetHandle,
    seed: SeedParams,
    epsilons: &[BigRational],
    k_max: usize,
    opts: &PlanOptions,
) -> Result<InsertionPlan> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    check_epsilons(epsilons, k_max)?;
    let n = horizon_cap(s.as_ref(), horizon_cap(a.as_ref(), opts.density_horizon));
    let rel = relative_density_est(a.as_ref(), s.as_ref(), n)?;
    if rel.value <= 0.0 {
        return Err(Error::InvalidInput(format!("relative density estimate of A in S is zero at horizon {n}")));
    }
    let thin: SetHandle = Arc::new(ThinSet::new(s.clone()));
    let ctx = RelCtx {
        seed: &seed,
        s,
        a,
        thin: thin.clone(),
        same: Arc::ptr_eq(s, a) || s.describe() == a.describe(),
        d_ref: rel.value,
        ln_t: Mag::from_real(Real::from_u64(seed.t).ln()),
        opts,
    };
    let mut blocks: Vec<Block> = Vec::new();
    let mut truncated = None;
    for k in 1..=k_max {
        let prev = blocks.last().map_or(Num::Exact(BigUint::zero()), |b| b.position.clone());
        let prev_hi = blocks.last().and_then(|b| b.window.as_ref().map(|w| w.1.clone()));
        match relative_block(&ctx, k, &epsilons[k - 1], &prev, prev_hi.as_ref())? {
            Step::Block(b) => blocks.push(*b),
            Step::Stop(reason) => {
                truncated = Some(reason);
                break;
            }
        }
    }
    Ok(InsertionPlan {
        kind: PlanKind::Relative,
        set: s.describe(),
        insert_source: format!("{} minus {}", a.describe(), thin.describe()),
        base: thin.describe(),
        reference_density: rel.value,
        reference_convention: TAIL_CONVENTION.into(),
        seed: seed.clone(),
        k_max,
        blocks,
        truncated,
        advisory: None,
        base_set: thin.clone(),
        source: InsertSource::Difference { a: a.clone(), thin },
    })
}

/// Window geometry for one candidate `s = ⌊√M⌋`.
pub(crate) struct Geometry {
    pub s: Num,
    pub lo: Num,
    pub hi: Num,
    /// `log(c + s)` and `log(c + s + 1)` with `c = L t^{M'}`.
    pub ln_end: Mag,
    pub ln_end1: Mag,
    /// `log(t^{M'} / s^{1/α})`.
    pub ln_growth: Mag,
    /// Upper bound on `min I / max I`.
    pub pos_ratio: Mag,
    pub ln_s: Mag,
    /// `s / c` when the window is only known through it.
    pub scale: Option<f64>,
    /// Exact growth and position-ratio checks when the window is exact.
    pub exact: Option<(Check, Check)>,
}

/// The checks that only depend on the position and the window size, all monotone in both.
pub(crate) fn monotone_checks(eps: &BigRational, prev: &Num, g: &Geometry, m: &Num, ln_t: &Mag) -> Vec<Check> {
    let s = g.s.to_mag();
    let (order, cost) = match g.scale {
        // M = s²: log(c+s) / (M log t) and 2s log(c+s+1) / (2ε M² log t) as powers of s.
        Some(_) => {
            let lnln_t = ln_t.ln_abs();
            (
                cond::le_scaled("window_order", 2, &g.ln_s, &g.ln_end.ln_abs().sub(&lnln_t), "log(L t^M' + s) < M log t, with M = s^2"),
                cond::le_scaled(
                    "block_cost_window",
                    3,
                    &g.ln_s,
                    &g.ln_end1.ln_abs().sub(&cond::ratio_mag(eps).ln_abs()).sub(&lnln_t),
                    "2 s log(L t^M' + s + 1) <= 2 eps M^2 log t, with M = s^2",
                ),
            )
        }
        None => (cond::window_order(&g.ln_end, m, ln_t), cond::block_cost_window(eps, &s, &g.ln_end1, m, ln_t)),
    };
    vec![
        order,
        cost,
        cond::block_cost_positions(prev, m),
        cond::tail_separation(eps, m, ln_t),
        cond::holder_tail(eps, m, ln_t),
        match &g.exact {
            Some((growth, _)) => growth.clone(),
            None => cond::window_growth(eps, &g.ln_growth),
        },
        match &g.exact {
            Some((_, pos)) => pos.clone(),
            None => cond::window_position_ratio(eps, &g.pos_ratio),
        },
    ]
}

fn all_pass(c: &[Check]) -> bool {
    c.iter().all(Check::passed)
}

/// Whether `t^{M'}` is small enough to build exactly.
pub(crate) fn exact_prev(seed: &SeedParams, prev: &Num) -> Option<u32> {
    let m = prev.exact()?.to_u32()?;
    (m as f64 * (seed.t as f64).log2() <= EXACT_POWER_BITS).then_some(m)
}

/// Exact window data: `c = L t^{M'}`, `lo = ⌈c⌉ + 1`, `hi = ⌊c⌋ + s`.
pub(crate) struct ExactBase {
    c: BigRational,
    c_floor: BigUint,
    lo: BigUint,
    ln_tp: Real,
    inv_alpha: Real,
    eps: BigRational,
    /// `t^{M'}/s^{1/α} <= ε` iff `s^q · growth.1 >= growth.0` for `α = p/q`.
    growth: (BigUint, BigUint, u32),
}

impl ExactBase {
    pub(crate) fn new(seed: &SeedParams, prev: u32, eps: &BigRational) -> Self {
        let tp = BigUint::from(seed.t).pow(prev);
        let c = &seed.l * ratio_int(&tp);
        let c_floor = to_uint(&c.floor().to_integer());
        let lo = to_uint(&c.ceil().to_integer()) + 1u32;
        let ln_tp = Real::from_u64(prev as u64) * Real::from_u64(seed.t).ln();
        let inv_alpha = Real::from_ratio(&(BigRational::one() / &seed.alpha));
        let (p, q) = (seed.alpha.numer().to_u32().unwrap_or(1), seed.alpha.denom().to_u32().unwrap_or(1));
        let growth = ((&tp * to_uint(eps.denom())).pow(p), to_uint(eps.numer()).pow(p), q);
        ExactBase { c, c_floor, lo, ln_tp, inv_alpha, eps: eps.clone(), growth }
    }

    /// Smallest `s` passing the growth check.
    fn growth_floor(&self) -> BigUint {
        let (num, den, q) = &self.growth;
        let mut s = Integer::div_ceil(num, den).nth_root(*q);
        while s.pow(*q) * den < *num {
            s += 1u32;
        }
        s
    }

    pub(crate) fn geometry(&self, s: &BigUint) -> Geometry {
        let hi = &self.c_floor + s;
        let end = &self.c + ratio_int(s);
        let end1 = &end + BigRational::one();
        let pos = BigRational::new(big(&self.lo), big(&hi).max(BigInt::one()));
        let ln_growth = Mag::from_real(&self.ln_tp - &self.inv_alpha * Real::ln_biguint(&s.clone().max(BigUint::one())));
        let e = cond::ratio_mag(&self.eps);
        let rel = |x: &Mag| e.sub(x).div(&e).to_f64();
        let (num, den, q) = &self.growth;
        let growth = cond::exact(
            "window_growth",
            s.pow(*q) * den >= *num,
            rel(&ln_growth.exp()),
            ln_growth.exp().to_string(),
            e.to_string(),
            "t^M' / s^(1/alpha) <= eps",
        );
        let position = cond::exact(
            "window_position_ratio",
            pos <= self.eps,
            rel(&Mag::from_ratio(&pos)),
            format!("{}/{}", self.lo, hi),
            e.to_string(),
            "min I_k / max I_k <= eps",
        );
        Geometry {
            s: Num::Exact(s.clone()),
            lo: Num::Exact(self.lo.clone()),
            hi: Num::Exact(hi),
            ln_end: Mag::from_real(Real::ln_ratio(&end)),
            ln_end1: Mag::from_real(Real::ln_ratio(&end1)),
            ln_s: Mag::from_real(Real::ln_biguint(&s.clone().max(BigUint::one()))),
            ln_growth,
            pos_ratio: Mag::from_ratio(&pos),
            scale: None,
            exact: Some((growth, position)),
        }
    }
}

/// Geometry for `s = σ c` with `c = L t^{M'}` too large to build, assuming `α = 1`.
pub(crate) fn scaled_geometry(seed: &SeedParams, prev: &Num, sigma: f64, ln_t: &Mag) -> Geometry {
    let ln_l = Mag::from_real(Real::ln_ratio(&seed.l));
    let ln_c = ln_l.add(&prev.to_mag().mul(ln_t));
    let ln_sigma = Mag::from_f64(sigma.ln());
    let ln_s = ln_c.add(&ln_sigma);
    let ln_hi = ln_c.add(&Mag::from_f64(sigma.ln_1p()));
    let c = ln_c.exp();
    let inv_c = ln_c.neg().exp();
    Geometry {
        s: Num::Approx(ln_s.exp()),
        ln_s: ln_s.clone(),
        lo: Num::Approx(c.add(&Mag::from_u64(1))),
        hi: Num::Approx(ln_hi.exp()),
        ln_end: ln_hi.clone(),
        ln_end1: ln_hi,
        // t^{M'} / s = 1 / (σ L).
        ln_growth: ln_sigma.add(&ln_l).neg(),
        // (c + 1) / (c + s) <= (1 + 1/c) / (1 + σ).
        pos_ratio: Mag::from_u64(1).add(&inv_c).div(&Mag::from_f64(1.0 + sigma)),
        scale: Some(sigma),
        exact: None,
    }
}

/// `Σ_{i ∈ W} 2 log(i+1) <= 3ε (M(M+1) − M'(M'+1)) log t`.
///
/// For scaled windows the cost is bounded by `2s log(c + s + 1)` and `M = s²`,
/// so the ratio is `s^-3` times `2 log(c+s+1) / (3ε (1 + 1/M − q² − q/M) log t)` with `q = M'/M`.
pub(crate) fn block_product_check(eps: &BigRational, prev: &Num, g: &Geometry, m: &Num, cost: &Mag, ln_t: &Mag) -> Check {
    if g.scale.is_none() {
        return cond::block_product(eps, prev, m, cost, ln_t);
    }
    let one = Mag::from_u64(1);
    let ln_m = g.ln_s.mul(&Mag::from_u64(2));
    let inv = ln_m.neg().exp();
    let q = if prev.to_mag().is_zero() { Mag::zero() } else { prev.to_mag().ln_abs().sub(&ln_m).exp() };
    let factor = one.add(&inv).sub(&q.mul(&q)).sub(&q.mul(&inv));
    let rest = Mag::from_u64(2).mul(&g.ln_end1).ln_abs().sub(&Mag::from_u64(3).mul(&cond::ratio_mag(eps)).mul(&factor).mul(ln_t).ln_abs());
    cond::le_scaled(
        "block_product",
        3,
        &g.ln_s,
        &rest,
        "sum of 2 log(i+1) over the block, at most 2 s log(L t^M' + s + 1), against 3 eps (M(M+1) - M'(M'+1)) log t",
    )
}

/// Relative bump applied to the smallest window scale so the window checks clear the guard band.
const SCALE_BUMP: f64 = 1e-6;

fn relative_block(ctx: &RelCtx, k: usize, eps: &BigRational, prev: &Num, prev_hi: Option<&Num>) -> Result<Step> {
    let ln_t = &ctx.ln_t;
    let (geo, m, counts) = match exact_prev(ctx.seed, prev) {
        Some(mp) => {
            let base = ExactBase::new(ctx.seed, mp, eps);
            // lo/hi <= ε  iff  hi >= lo/ε.
            let need_hi = (ratio_int(&base.lo) / eps).ceil().to_integer();
            let s_il = to_uint(&(need_hi - big(&base.c_floor)));
            let s_mk = base.growth_floor();
            let s_inc = BigUint::from(mp).sqrt() + 1u32;
            let mut s = s_il.max(s_mk).max(s_inc).max(BigUint::from(2u32));
            let top = |s: &BigUint| Num::Exact((s + 1u32) * (s + 1u32) - 1u32);
            let ok = |s: &BigUint| all_pass(&monotone_checks(eps, prev, &base.geometry(s), &top(s), ln_t));
            if !ok(&s) {
                let mut lo_s = s.clone();
                let mut hi_s = &s * 2u32;
                let mut tries = 0;
                while !ok(&hi_s) {
                    tries += 1;
                    if tries > MAX_DOUBLINGS {
                        return Err(Error::NoAdmissiblePosition { k, reason: format!("no window size up to 2^{MAX_DOUBLINGS} times {s}") });
                    }
                    lo_s = hi_s.clone();
                    hi_s *= 2u32;
                }
                while &lo_s + 1u32 < hi_s {
                    let mid: BigUint = (&lo_s + &hi_s) >> 1u32;
                    if ok(&mid) {
                        hi_s = mid;
                    } else {
                        lo_s = mid;
                    }
                }
                s = hi_s;
            }
            // The prefix proxy is not monotone in s; scan upward from the smallest admissible size.
            let mut scanned = 0;
            let (g, prefix) = loop {
                let Some(pc) = ctx.exact_counts(&BigUint::one(), &s) else {
                    return Ok(Step::Stop(format!("block {k}: counts on [1, {s}] lie beyond the horizon of the sets")));
                };
                if cond::within("prefix_ratio", pc.ratio, ctx.d_ref, eps_f(eps), "").passed() {
                    break (base.geometry(&s), pc);
                }
                scanned += 1;
                if scanned > ctx.opts.scan_budget {
                    return Err(Error::NoAdmissiblePosition {
                        k,
                        reason: format!("prefix ratio stays farther than eps from {} for {} window sizes", ctx.d_ref, ctx.opts.scan_budget),
                    });
                }
                s += 1u32;
            };
            // Smallest M with ⌊√M⌋ = s passing the position checks.
            let (mut lo_m, mut hi_m) = (&s * &s, (&s + 1u32) * (&s + 1u32) - 1u32);
            let okm = |m: &BigUint| all_pass(&monotone_checks(eps, prev, &g, &Num::Exact(m.clone()), ln_t));
            if okm(&lo_m) {
                hi_m = lo_m.clone();
            }
            while lo_m < hi_m {
                let mid: BigUint = (&lo_m + &hi_m) >> 1u32;
                if okm(&mid) {
                    hi_m = mid;
                } else {
                    lo_m = mid + 1u32;
                }
            }
            (g, Num::Exact(hi_m), Some(prefix))
        }
        None => {
            if !ctx.seed.alpha.is_one() {
                return Ok(Step::Stop(format!("block {k}: positions beyond exact range are only planned for alpha = 1")));
            }
            let e = eps_f(eps);
            let l = ctx.seed.l.to_f64().unwrap_or(1.0);
            // lo/hi <= ε needs σ >= 1/ε − 1; t^{M'}/s <= ε needs σ >= 1/(εL).
            let mut sigma = (1.0 / e - 1.0).max(1.0 / (e * l)) * (1.0 + SCALE_BUMP);
            let position = |g: &Geometry| Num::Approx(g.s.to_mag().mul(&g.s.to_mag()));
            let mut tries = 0;
            let g = loop {
                let g = scaled_geometry(ctx.seed, prev, sigma, ln_t);
                if all_pass(&monotone_checks(eps, prev, &g, &position(&g), ln_t)) {
                    break g;
                }
                tries += 1;
                if tries > 64 {
                    return Err(Error::NoAdmissiblePosition { k, reason: format!("no window scale up to {sigma:e} times L t^M'") });
                }
                sigma *= 2.0;
            };
            let m = position(&g);
            (g, m, None)
        }
    };
    let e = eps_f(eps);
    let mut checks = monotone_checks(eps, prev, &geo, &m, ln_t);
    let ln_s = geo.s.to_mag().ln_abs();
    let end_over_len = geo.scale.map_or(1.0, |sigma| 1.0 + 1.0 / sigma);
    let prefix = match counts {
        Some(pc) => Some(pc),
        None => ctx.scaled_counts(&ln_s, 1.0),
    };
    let Some(prefix) = prefix else {
        return Ok(Step::Stop(format!("block {k}: set counts near {} need closed forms the sets do not provide", geo.s)));
    };
    checks.push(cond::within("prefix_ratio", prefix.ratio, ctx.d_ref, e, "#((A minus S_*) ∩ [1, s]) / #(S ∩ [1, s]) against the reference density"));
    let window = match (&geo.lo, &geo.hi) {
        (Num::Exact(lo), Num::Exact(hi)) => ctx.exact_counts(lo, hi),
        _ => ctx.scaled_counts(&ln_s, end_over_len),
    };
    let Some(window) = window else {
        return Ok(Step::Stop(format!("block {k}: counts on I_{k} = [{}, {}] are not available", geo.lo, geo.hi)));
    };
    let cost = match &window.elements {
        Some(el) => cond::digit_cost(el),
        None => window.w.1.to_mag().mul(&Mag::from_u64(2)).mul(&geo.ln_end1),
    };
    checks.push(block_product_check(eps, prev, &geo, &m, &cost, ln_t));
    if let Some(ph) = prev_hi {
        checks.push(disjoint_check(ph, &geo.lo));
    }
    let ratio = window.ratio;
    if k >= 2 {
        checks.push(cond::within("inserted_ratio", ratio, ctx.d_ref, e, "#W_k / #(S ∩ I_k) against the reference density"));
    }
    let materialized = window.elements.is_some();
    Ok(Step::Block(Box::new(Block {
        k,
        epsilon: eps.clone(),
        position: m,
        window: Some((geo.lo, geo.hi)),
        window_len: geo.s,
        window_scale: geo.scale,
        reference_count: Some(window.s),
        w_count: window.w,
        ratio: Some(ratio),
        materialized,
        elements: window.elements,
        banach_len: None,
        checks,
    })))
}

pub(crate) fn disjoint_check(prev_hi: &Num, lo: &Num) -> Check {
    let note = "max I_{k-1} < min I_k";
    match (prev_hi, lo) {
        (Num::Exact(a), Num::Exact(b)) => cond::exact("blocks_disjoint", a < b, 1.0, a.to_string(), b.to_string(), note),
        _ => cond::le("blocks_disjoint", &prev_hi.to_mag(), &lo.to_mag(), note),
    }
}

/// Banach plan: `I_k = [M_{k−1}, M_{k−1} + N_{k−1}]` with `N_0 = 0`, `N_k = N_{k−1} + 1`, and `W_k = S ∩ I_k`.
pub fn plan_banach(s: &SetHandle, epsilons: &[BigRational], k_max: usize, opts: &PlanOptions) -> Result<InsertionPlan> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    check_epsilons(epsilons, k_max)?;
    let n = horizon_cap(s.as_ref(), opts.density_horizon);
    let bd = banach_density_est(s.as_ref(), n, &opts.banach_widths)?;
    if bd.value <= 0.0 {
        return Err(Error::InvalidInput(format!("Banach density estimate is zero at horizon {n}")));
    }
    let ud = upper_density_est(s.as_ref(), n)?;
    let advisory = (ud.value >= bd.value / 2.0)
        .then(|| format!("upper density estimate {:.6} is comparable to the Banach estimate {:.6}; the relative construction applies", ud.value, bd.value));
    let comp: SetHandle = Arc::new(Complement::new(s.clone()));
    let one = BigRational::one();
    let fit = fit_poly_density(comp.as_ref(), &one, &BigRational::zero(), (opts.fit_from.min(n), n))?;
    let seed = choose_seed_params(&fit, comp.as_ref(), opts.seed_levels)?;
    let base: SetHandle = Arc::new(ThinSet::new(comp));
    let ln_t = Mag::from_real(Real::from_u64(seed.t).ln());
    let scan_to = horizon_cap(s.as_ref(), opts.banach_scan_limit);

    let mut blocks: Vec<Block> = Vec::new();
    let (mut prev_m, mut prev_n) = (0u64, 0u64);
    let mut prev_hi: Option<u64> = None;
    for k in 1..=k_max {
        let eps = &epsilons[k - 1];
        let next = (k < k_max).then(|| (prev_n + 1, eps_f(&epsilons[k])));
        let pn = Num::Exact(BigUint::from(prev_m));
        let admissible = |m: u64| {
            let mn = Num::Exact(BigUint::from(m));
            if !cond::tail_separation(eps, &mn, &ln_t).passed() || !cond::window_cost(eps, &pn, prev_n, &mn, &ln_t).passed() {
                return false;
            }
            match next {
                Some((len, tol)) => {
                    let c = s.count(m + len) - s.count(m - 1);
                    c as f64 / (len + 1) as f64 >= bd.value - tol
                }
                None => true,
            }
        };
        let start = prev_m + prev_n + 1;
        let Some(m) = (start.max(2)..=scan_to.saturating_sub(prev_n + 1)).find(|&m| admissible(m)) else {
            return Err(Error::NoAdmissiblePosition {
                k,
                reason: format!("no position in [{start}, {scan_to}] satisfies the tail, window-cost and window-ratio conditions"),
            });
        };
        // I_k = [M_{k−1}, M_{k−1} + N_{k−1}] holds only positive integers.
        let (wlo, whi) = (prev_m.max(1), prev_m + prev_n);
        let (elems, window) = if prev_m == 0 && prev_n == 0 { (Vec::new(), None) } else { (elements_in(s.as_ref(), wlo, whi), Some((wlo, whi))) };
        let mn = Num::Exact(BigUint::from(m));
        let digits: Vec<BigUint> = elems.iter().map(|&x| BigUint::from(x)).collect();
        let len = window.map_or(0, |(a, b)| b - a + 1);
        let mut checks = vec![
            cond::tail_separation(eps, &mn, &ln_t),
            cond::holder_tail(eps, &mn, &ln_t),
            cond::window_cost(eps, &pn, prev_n, &mn, &ln_t),
            cond::block_product(eps, &pn, &mn, &cond::digit_cost(&digits), &ln_t),
        ];
        let ratio = window.map(|_| {
            let r = elems.len() as f64 / len as f64;
            (r, r)
        });
        if let Some(r) = ratio {
            checks.push(cond::at_least("window_ratio", r, bd.value - eps_f(eps), "#W_k / #(ℕ ∩ I_k) against the Banach estimate minus eps"));
        }
        if let (Some(ph), Some((lo, _))) = (prev_hi, window) {
            checks.push(disjoint_check(&Num::Exact(ph.into()), &Num::Exact(lo.into())));
        }
        let cnt = Num::Exact(BigUint::from(elems.len()));
        blocks.push(Block {
            k,
            epsilon: eps.clone(),
            position: mn,
            window: window.map(|(a, b)| (Num::Exact(a.into()), Num::Exact(b.into()))),
            window_len: Num::Exact(BigUint::from(len)),
            window_scale: None,
            reference_count: Some((Num::Exact(BigUint::from(len)), Num::Exact(BigUint::from(len)))),
            w_count: (cnt.clone(), cnt),
            ratio,
            materialized: true,
            elements: Some(digits),
            banach_len: Some(prev_n + 1),
            checks,
        });
        if let Some((_, hi)) = window {
            prev_hi = Some(hi);
        }
        prev_m = m;
        prev_n += 1;
    }
    Ok(InsertionPlan {
        kind: PlanKind::Banach,
        set: s.describe(),
        insert_source: s.describe(),
        base: base.describe(),
        seed,
        reference_density: bd.value,
        reference_convention: BANACH_CONVENTION.into(),
        k_max,
        blocks,
        truncated: None,
        advisory,
        base_set: base,
        source: InsertSource::Whole(s.clone()),
    })
}

fn eps_f(e: &BigRational) -> f64 {
    e.to_f64().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::insertion::fixtures::{frac, naturals_evens};
    use crate::intsets::{build_set, ResidueClass, SetSpec, SquareBlocks};

    fn digits(b: &Block) -> Vec<u64> {
        b.elements.as_ref().unwrap().iter().map(|d| d.to_u64().unwrap()).collect()
    }

    #[test]
    fn first_relative_block_for_evens_in_naturals() {
        let plan = naturals_evens();
        assert_eq!(plan.seed.t, 13);
        assert_eq!(plan.seed.l, frac(12, 1));
        let b = &plan.blocks[0];
        assert_eq!(b.position_u64(), Some(196));
        let (lo, hi) = b.window.as_ref().unwrap();
        assert_eq!((lo.exact().unwrap(), hi.exact().unwrap()), (&13u32.into(), &26u32.into()));
        assert_eq!(digits(b), [14, 16, 20, 22, 26]);
        assert!(b.checks.iter().all(Check::passed));
    }

    #[test]
    fn second_relative_block_is_exact() {
        let plan = naturals_evens();
        let s = BigUint::from(13u32).pow(196) * 24u32 + 3u32;
        let b = &plan.blocks[1];
        assert_eq!(b.window_len.exact(), Some(&s));
        assert_eq!(b.position.exact(), Some(&(&s * &s)));
        assert!(!b.materialized);
        let (lo, hi) = b.ratio.unwrap();
        assert!(lo <= 0.5 && hi >= 0.5 - 1e-12 && hi - lo < 0.01);
    }

    #[test]
    fn inserted_ratios_approach_one_half() {
        let plan = naturals_evens();
        assert_eq!(plan.blocks.len(), 4);
        assert!(plan.truncated.is_none());
        for b in &plan.blocks[1..] {
            let (lo, hi) = b.ratio.unwrap();
            assert!((lo - 0.5).abs() <= 0.05 && (hi - 0.5).abs() <= 0.05, "block {}: [{lo}, {hi}]", b.k);
        }
        assert!(plan.blocks[2].window_scale.is_some() && plan.blocks[3].window_scale.is_some());
    }

    #[test]
    fn epsilons_must_be_positive_and_non_increasing() {
        let s: SetHandle = Arc::new(ResidueClass::new(1, 0));
        let eps = [frac(1, 3), frac(1, 2)];
        let p = plan_relative_seeded(&s, &s, naturals_evens().seed.clone(), &eps, 2, &PlanOptions::default());
        assert!(matches!(p, Err(Error::InvalidInput(_))));
        let p = plan_relative_seeded(&s, &s, naturals_evens().seed.clone(), &[frac(1, 2)], 2, &PlanOptions::default());
        assert!(matches!(p, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn sieved_sets_truncate_beyond_their_horizon() {
        let primes = build_set(&SetSpec::Primes, 1_000_000).unwrap();
        let fit = fit_poly_density(primes.as_ref(), &frac(1, 1), &frac(1, 1), (1_000, 1_000_000)).unwrap();
        let plan = plan_relative(&primes, &primes, &fit, &default_epsilons(3), 3, &PlanOptions::default()).unwrap();
        assert!(!plan.blocks.is_empty());
        assert!(plan.truncated.as_deref().is_some_and(|r| r.contains("block")));
        assert!(plan.blocks.iter().all(|b| b.checks.iter().all(Check::passed)));
    }

    #[test]
    fn banach_plan_on_square_blocks_hits_full_windows() {
        let s: SetHandle = Arc::new(SquareBlocks);
        let plan = plan_banach(&s, &default_epsilons(4), 4, &PlanOptions::default()).unwrap();
        assert!(plan.advisory.is_none());
        assert_eq!(plan.reference_density, 1.0);
        let pos: Vec<u64> = plan.blocks.iter().map(|b| b.position_u64().unwrap()).collect();
        assert_eq!(pos[..3], [16, 25, 81]);
        assert!(plan.blocks[0].window.is_none() && plan.blocks[0].is_empty());
        assert_eq!(digits(&plan.blocks[1]), [16, 17]);
        assert_eq!(digits(&plan.blocks[2]), [25, 26, 27]);
        for b in &plan.blocks[1..] {
            assert_eq!(b.ratio, Some((1.0, 1.0)));
            assert!(b.checks.iter().all(Check::passed), "block {}", b.k);
        }
    }

    #[test]
    fn banach_plan_flags_sets_with_positive_upper_density() {
        let evens: SetHandle = Arc::new(ResidueClass::new(2, 0));
        let plan = plan_banach(&evens, &default_epsilons(2), 2, &PlanOptions::default()).unwrap();
        assert!(plan.advisory.is_some());
    }
}
