//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use cftransfer::cfcore::{fundamental_interval, DigitWord};
use cftransfer::density::{banach_density_est, convergence_exponent_est, relative_density_est};
use cftransfer::insertion::{
    default_epsilons, eliminate, empirical_holder, plan_banach, plan_relative, splice, verify_plan, CheckStatus, InsertionPlan, PlanOptions,
};
use cftransfer::intsets::{build_set, fit_poly_density, Naturals, PolyDensityParams, ResidueClass, SetHandle, SetSpec};
use cftransfer::moran::{choose_seed_params, dimension_report, mass_dimension_estimate, MoranLevels, SeedParams, DEFAULT_CHECK_LEVELS};
use cftransfer::progressions::{find_ap, find_graph_ap};
use cftransfer::thinning::{nu_u64, sandwich_scan, ThinSet};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS_1: usize = 10_000;
const MAX_LEN_1: usize = 12;
const MAX_DIGIT_1: u64 = 1_000;
const TIME_1: Duration = Duration::from_secs(10);

const MASS_DEPTH: u64 = 10_000;
const MASS_TOL: f64 = 1e-3;

const SEED_DEPTH: u64 = 300;
const NATURALS_BAND: (f64, f64) = (0.45, 0.50);
const MONOTONE_LEVELS: usize = 100;
const PS_LOWER_TOL: f64 = 0.07;
const UPPER_TOL: f64 = 0.02;
const TAU_HORIZON: u64 = 100_000_000;
const TIME_3: Duration = Duration::from_secs(60);

const SANDWICH_FROM: u64 = 24;
const SANDWICH_TO: u64 = 10_000_000;
const TIME_4: Duration = Duration::from_secs(30);
const THIN_HORIZON: u64 = 1_000_000;

const BANACH_HORIZON: u64 = 1_000_000;
const BANACH_WIDTHS: [u64; 2] = [31, 32];
const TAU_BAND_5: (f64, f64) = (0.70, 0.80);

const PLANS_6: usize = 100;
const WORDS_PER_PLAN_6: usize = 10;

const HOLDER_SAMPLES: usize = 1_000;
const HOLDER_SEED: u64 = 7;

const RATIO_TARGET: f64 = 0.5;
const RATIO_TOL: f64 = 0.05;

const P1_ORACLE_TO: u64 = 100_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn naturals_fit() -> PolyDensityParams {
    PolyDensityParams::exact(frac(1, 1), frac(0, 1), frac(1, 1), frac(1, 1))
}

fn naturals_evens_plan() -> &'static InsertionPlan {
    static PLAN: OnceLock<InsertionPlan> = OnceLock::new();
    PLAN.get_or_init(|| {
        let s: SetHandle = Arc::new(Naturals);
        let a = build_set(&SetSpec::evens(), 1_000_000).unwrap();
        plan_relative(&s, &a, &naturals_fit(), &default_epsilons(4), 4, &PlanOptions::default()).unwrap()
    })
}

fn is_prime_trial(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn isqrt(n: u128) -> u128 {
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

fn fundamental_intervals_are_exact() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut violations = 0;
    for _ in 0..WORDS_1 {
        let len = rng.gen_range(1..=MAX_LEN_1);
        let d: Vec<u64> = (0..len).map(|_| rng.gen_range(1..=MAX_DIGIT_1)).collect();
        let iv = fundamental_interval(&DigitWord::from_u64s(&d).unwrap()).unwrap();
        let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
        let (mut lower, mut upper) = (BigRational::new(BigInt::one(), BigInt::from(2)), BigRational::one());
        for &a in &d {
            let q2 = &q1 * a + &q0;
            q0 = std::mem::replace(&mut q1, q2);
            lower /= BigRational::from_integer(BigInt::from((a + 1) * (a + 1)));
            upper /= BigRational::from_integer(BigInt::from(a * a));
        }
        let diam = BigRational::new(BigInt::one(), BigInt::from(&q1 * (&q1 + &q0)));
        let d_lib = iv.diameter();
        let lib_sandwich = iv.sandwich.as_ref().is_some_and(|s| s.holds);
        if d_lib != diam || d_lib < lower || d_lib > upper || !lib_sandwich {
            violations += 1;
        }
    }
    let t = start.elapsed();
    outcome(violations == 0 && t < TIME_1, format!("{violations} violations over {WORDS_1} words in {:.2} s (limit {} s)", t.as_secs_f64(), TIME_1.as_secs()))
}

fn mass_distribution_matches_geometric_oracles() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (base, target) in [(3u64, 2f64.ln() / 3f64.ln()), (4, 0.5)] {
        let est = mass_dimension_estimate(&MoranLevels::geometric(2, base, MASS_DEPTH));
        let err = (est.last - target).abs();
        ok &= err <= MASS_TOL;
        parts.push(format!("delta_n = {base}^-n: d = {:.6}, error {err:.2e}", est.last));
    }
    outcome(ok, format!("{} (tolerance {MASS_TOL:e} at depth {MASS_DEPTH})", parts.join("; ")))
}

fn seed_dimension_trends_toward_inverse_two_alpha() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();

    let start = Instant::now();
    let s: SetHandle = Arc::new(Naturals);
    let p = choose_seed_params(&naturals_fit(), s.as_ref(), DEFAULT_CHECK_LEVELS).unwrap();
    let r = dimension_report(&s, &p, SEED_DEPTH, TAU_HORIZON).unwrap();
    let t = start.elapsed();
    let in_band = (NATURALS_BAND.0..=NATURALS_BAND.1).contains(&r.lower.last);
    let mono = r.lower.increasing_over_last(MONOTONE_LEVELS);
    let upper_ok = (r.upper - 0.5).abs() <= UPPER_TOL;
    ok &= r.depth == SEED_DEPTH && in_band && mono && upper_ok && t < TIME_3;
    parts.push(format!(
        "naturals: d_{} = {:.4} (band {:?}), increasing over last {MONOTONE_LEVELS}: {mono}, tau/2 = {:.4}, {:.1} s",
        r.depth,
        r.lower.last,
        NATURALS_BAND,
        r.upper,
        t.as_secs_f64()
    ));

    let start = Instant::now();
    let ps = build_set(&SetSpec::ps("3/2"), TAU_HORIZON).unwrap();
    let fit = fit_poly_density(ps.as_ref(), &frac(3, 2), &frac(0, 1), (100, 1_000_000)).unwrap();
    let p = choose_seed_params(&fit, ps.as_ref(), DEFAULT_CHECK_LEVELS).unwrap();
    let r = dimension_report(&ps, &p, SEED_DEPTH, TAU_HORIZON).unwrap();
    let t = start.elapsed();
    let third = 1.0 / 3.0;
    let lower_ok = (r.lower.last - third).abs() <= PS_LOWER_TOL;
    let upper_ok = (r.upper - third).abs() <= UPPER_TOL;
    ok &= r.depth == SEED_DEPTH && lower_ok && upper_ok && t < TIME_3;
    parts.push(format!("PS(3/2): d_{} = {:.4}, tau/2 = {:.4}, {:.1} s", r.depth, r.lower.last, r.upper, t.as_secs_f64()));
    outcome(ok, parts.join("; "))
}

fn thinning_sandwich_and_zero_relative_density() -> Outcome {
    let start = Instant::now();
    let rep = sandwich_scan(SANDWICH_TO);
    let t = start.elapsed();
    let scan_ok = rep.from.is_some_and(|f| f <= SANDWICH_FROM) && rep.checked_to == SANDWICH_TO && t < TIME_4;
    let mut ok = scan_ok;
    let from = rep.from.map_or("nowhere".to_string(), |f| f.to_string());
    let mut parts = vec![format!("sandwich holds on [{from}, {SANDWICH_TO}] in {:.2} s (required from {SANDWICH_FROM})", t.as_secs_f64())];
    for spec in [SetSpec::Naturals, SetSpec::Primes] {
        let s = build_set(&spec, THIN_HORIZON).unwrap();
        let thin = ThinSet::new(s.clone());
        let r = relative_density_est(&thin, s.as_ref(), THIN_HORIZON).unwrap();
        let bound = 3.0 / nu_u64(s.count(THIN_HORIZON)) as f64;
        ok &= r.value < bound;
        parts.push(format!("{}: {:.5} < {:.5}", s.describe(), r.value, bound));
    }
    outcome(ok, parts.join("; "))
}

fn square_blocks_have_full_banach_density() -> Outcome {
    let a = build_set(&SetSpec::SquareBlocks, TAU_HORIZON).unwrap();
    let b = banach_density_est(a.as_ref(), BANACH_HORIZON, &BANACH_WIDTHS).unwrap();
    let full = b.windows.iter().find(|w| w.count == w.width);
    let tau = convergence_exponent_est(a.as_ref(), TAU_HORIZON).unwrap().value;
    let ok = full.is_some() && b.value == 1.0 && (TAU_BAND_5.0..=TAU_BAND_5.1).contains(&tau);
    let window = full.map_or("none".to_string(), |w| format!("{} of {} at offset {}", w.count, w.width, w.offset));
    outcome(ok, format!("Banach estimate {} (full window: {window}); tau = {tau:.4} (band {:?})", b.value, TAU_BAND_5))
}

fn splice_then_eliminate_roundtrips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let odd: SetHandle = Arc::new(ResidueClass::new(2, 1));
    let seed = SeedParams {
        l: frac(2, 1),
        l_exact: true,
        t: 3,
        alpha: frac(1, 1),
        beta: frac(0, 1),
        c1: frac(1, 1),
        c2: frac(1, 1),
        lambda: 1.0,
        rho: 1.0,
        nu_count_t: 0,
        bracket_levels: 0,
        lambda_levels: 0,
    };
    let (mut words, mut failures, mut repeats) = (0, 0, 0);
    for _ in 0..PLANS_6 {
        let k = rng.gen_range(1..=4);
        let mut pos: Vec<u64> = rand::seq::index::sample(&mut rng, 8, k).into_iter().map(|p| p as u64 + 1).collect();
        pos.sort_unstable();
        let n_evens = rng.gen_range(0..12);
        let mut evens: Vec<u64> = rand::seq::index::sample(&mut rng, 200, n_evens).into_iter().map(|e| 2 * (e as u64 + 1)).collect();
        let mut blocks = Vec::new();
        for j in 0..k {
            let take = if j + 1 == k { evens.len() } else { rng.gen_range(0..=evens.len()) };
            let mut b: Vec<u64> = evens.drain(..take).collect();
            b.sort_unstable();
            blocks.push(b);
        }
        let eps = vec![frac(1, 2); k];
        let plan = InsertionPlan::custom(seed.clone(), odd.clone(), &eps, &pos, blocks).unwrap();
        for _ in 0..WORDS_PER_PLAN_6 {
            let len = rng.gen_range(1..=10u32);
            let y: Vec<u64> = (1..=len).map(|n| 2 * rng.gen_range(3u64.pow(n) / 2..3u64.pow(n)) + 1).collect();
            let y = DigitWord::from_u64s(&y).unwrap();
            let x = splice(&plan, &y).unwrap();
            words += 1;
            if eliminate(&plan, &x.word).ok().as_ref() != Some(&y) {
                failures += 1;
            }
            let mut d = x.word.digits().to_vec();
            d.sort();
            if d.windows(2).any(|w| w[0] == w[1]) {
                repeats += 1;
            }
        }
    }
    outcome(failures == 0 && repeats == 0, format!("{words} words over {PLANS_6} plans: {failures} roundtrip failures, {repeats} words with repeated digits"))
}

fn holder_bound_certified_at_block_two() -> Outcome {
    let plan = naturals_evens_plan();
    let ledger = verify_plan(plan);
    let mut bad = Vec::new();
    for b in ledger.blocks.iter().filter(|b| b.k <= 2) {
        for c in &b.checks {
            if c.status != CheckStatus::Pass || c.margin <= 0.0 {
                bad.push(format!("block {} {}", b.k, c.name));
            }
        }
    }
    let checks = ledger.blocks.iter().filter(|b| b.k <= 2).map(|b| b.checks.len()).sum::<usize>();
    let ledger_part = format!("{checks} conditions on blocks 1..=2, {} not positive", bad.len());
    let k1 = match empirical_holder(plan, 1, HOLDER_SAMPLES, HOLDER_SEED) {
        Ok(r) => format!("k = 1 supplement: {} pairs, worst margin {:.3}, pass {}", r.samples, r.worst_margin, r.pass),
        Err(e) => format!("k = 1 supplement failed: {e}"),
    };
    match empirical_holder(plan, 2, HOLDER_SAMPLES, HOLDER_SEED) {
        Ok(r) => {
            let pass = bad.is_empty() && r.samples == HOLDER_SAMPLES && r.worst_margin >= 0.0;
            outcome(pass, format!("{ledger_part}; k = 2: {} pairs, worst margin {:.3}; {k1}", r.samples, r.worst_margin))
        }
        Err(e) => outcome(false, format!("{ledger_part}; k = 2 not sampled: {e}; {k1}")),
    }
}

fn inserted_density_converges() -> Outcome {
    let plan = naturals_evens_plan();
    let mut ok = plan.blocks.len() >= 4;
    let mut parts = Vec::new();
    for k in 2..=4 {
        match plan.blocks.get(k - 1).and_then(|b| b.ratio) {
            Some((lo, hi)) => {
                let dev = (lo - RATIO_TARGET).abs().max((hi - RATIO_TARGET).abs());
                ok &= dev <= RATIO_TOL;
                parts.push(format!("k = {k}: [{lo:.6}, {hi:.6}]"));
            }
            None => {
                ok = false;
                parts.push(format!("k = {k}: no ratio"));
            }
        }
    }
    let blocks = build_set(&SetSpec::SquareBlocks, 10_000_000).unwrap();
    let b = plan_banach(&blocks, &default_epsilons(3), 3, &PlanOptions::default()).unwrap();
    let mut full = Vec::new();
    for blk in &b.blocks {
        let n = blk.window_len.exact().and_then(|n| n.to_u64()).unwrap_or(0);
        let w = blk.elements.as_ref().map_or(0, |e| e.len() as u64);
        if n > 0 {
            ok &= w == n;
            full.push(format!("k = {}: {w}/{n}", blk.k));
        } else {
            full.push(format!("k = {}: empty window", blk.k));
        }
    }
    ok &= b.blocks.len() == 3 && b.blocks.iter().filter(|blk| blk.window.is_some()).count() >= 2;
    outcome(ok, format!("relative ratios {} (target {RATIO_TARGET} +/- {RATIO_TOL}); Banach windows {}", parts.join(", "), full.join(", ")))
}

fn witnesses_match_independent_oracles() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let primes = build_set(&SetSpec::Primes, 10_000).unwrap();
    let w = find_ap(primes.as_ref(), 5, 1_000, 1_000).unwrap();
    let got: Option<Vec<u64>> = w.as_ref().map(|w| w.values.iter().map(|v| v.to_u64().unwrap()).collect());
    let reval = w.as_ref().is_some_and(|w| w.revalidate(|v| Some(is_prime_trial(v.to_u64()?))));
    ok &= got.as_deref() == Some(&[5, 11, 17, 23, 29][..]) && reval;
    parts.push(format!("primes AP {got:?}"));

    let g = find_graph_ap(3, 2, 4, 100).unwrap();
    let gv: Option<Vec<u64>> = g.as_ref().map(|w| w.values.iter().map(|v| v.to_u64().unwrap()).collect());
    let floors_ok = g
        .as_ref()
        .and_then(|w| w.graph.as_ref())
        .is_some_and(|gr| gr.n_values.iter().zip(gv.as_ref().unwrap()).all(|(&n, &v)| isqrt((n as u128).pow(3)) == v as u128));
    ok &= gv.as_deref() == Some(&[2, 5, 8, 11][..]) && floors_ok && g.as_ref().is_some_and(|w| w.revalidate(|_| None));
    parts.push(format!("graph AP {gv:?}"));

    let p1 = build_set(&SetSpec::P1Primes, P1_ORACLE_TO).unwrap();
    let mut lib = Vec::new();
    p1.for_each_in(1, P1_ORACLE_TO, &mut |x| lib.push(x));
    let mut sieve = vec![true; P1_ORACLE_TO as usize + 1];
    sieve[0] = false;
    sieve[1] = false;
    for i in 2..=P1_ORACLE_TO as usize {
        if sieve[i] {
            for j in (i * i..=P1_ORACLE_TO as usize).step_by(i) {
                sieve[j] = false;
            }
        }
    }
    let mut sums = vec![false; P1_ORACLE_TO as usize + 1];
    for x in 1..=P1_ORACLE_TO {
        for y in x..=P1_ORACLE_TO {
            let v = x * x + y * y + 1;
            if v > P1_ORACLE_TO {
                break;
            }
            sums[v as usize] = true;
        }
    }
    let oracle: Vec<u64> = (1..=P1_ORACLE_TO).filter(|&p| sieve[p as usize] && sums[p as usize]).collect();
    ok &= lib == oracle;
    parts.push(format!("P(1) up to {P1_ORACLE_TO}: {} elements, oracle {}", lib.len(), oracle.len()));
    outcome(ok, parts.join("; "))
}

fn transfer_certificates_are_byte_identical() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_cftransfer");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("naturals_evens.json");
    std::fs::write(&cfg, r#"{"S": {"kind": "naturals"}, "A": {"kind": "residue_class", "params": {"modulus": 2, "residue": 0}}, "length": 4}"#).unwrap();
    let mut certs = Vec::new();
    let mut codes = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(exe).arg("transfer").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
        codes.push(status.status.code());
        certs.push(std::fs::read(out.join("certificate.json")).unwrap_or_default());
    }
    let same = !certs[0].is_empty() && certs[0] == certs[1];
    outcome(same && codes.iter().all(|c| *c == Some(0)), format!("exit codes {codes:?}; certificates identical: {same} ({} bytes)", certs[0].len()))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "fundamental interval exactness", fundamental_intervals_are_exact),
        (2, "mass distribution geometric oracles", mass_distribution_matches_geometric_oracles),
        (3, "seed dimension trend", seed_dimension_trends_toward_inverse_two_alpha),
        (4, "thinning sandwich and relative density", thinning_sandwich_and_zero_relative_density),
        (5, "square blocks Banach density and exponent", square_blocks_have_full_banach_density),
        (6, "splice and eliminate roundtrip", splice_then_eliminate_roundtrips),
        (7, "Hoelder certification at block 2", holder_bound_certified_at_block_two),
        (8, "inserted density convergence", inserted_density_converges),
        (9, "witness suite", witnesses_match_independent_oracles),
        (10, "end-to-end determinism", transfer_certificates_are_byte_identical),
    ];
    let mut failed = Vec::new();
    for (n, name, check) in criteria {
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {name}: {verdict} [{:.1} s] {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(n);
        }
    }
    println!("acceptance: {} of 10 criteria pass; failing: {failed:?}", 10 - failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
