//! Finite-horizon proxies for upper, lower, upper Banach and relative density
//! and for the convergence exponent `τ(S) = limsup log n / log a_n`.
//!
//! Counts are exact. Density ratios are compared exactly by cross-multiplication
//! and reported as `p/q`; logarithms for `τ` are refined at 128-bit precision.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hp::Real;
use crate::intsets::{check_horizon, IntegerSet};

pub const TAIL_CONVENTION: &str = "limsup proxy: extremum over the tail n in [ceil(N/2), N]";
pub const BANACH_CONVENTION: &str = "windows {M, ..., M+w-1} of w integers inside [1, N]; value is the maximum over the widths w >= w_max/2 and the initial segments [1, n] of the upper-density tail";
pub const TAU_CONVENTION: &str = "limsup proxy: maximum of log i / log a_i over indices i in [ceil(c/2), c], c = #(S ∩ [1, N])";

const PROFILE_POINTS: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Upper,
    Lower,
    Banach,
    Relative,
    ConvergenceExponent,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowDensity {
    pub width: u64,
    /// Smallest offset `M` attaining the maximum.
    pub offset: u64,
    pub count: u64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityEstimate {
    pub kind: DensityKind,
    pub horizon: u64,
    pub value: f64,
    /// The value at 128-bit precision.
    pub value_decimal: String,
    /// The value as an exact ratio `num/den` when it is one.
    pub ratio: Option<(u64, u64)>,
    /// Where the extremum is attained (`n`, offset `M`, or index `i`).
    pub argmax: u64,
    pub convention: &'static str,
    pub profile: Vec<(u64, f64)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub windows: Vec<WindowDensity>,
}

impl DensityEstimate {
    fn from_ratio(kind: DensityKind, horizon: u64, num: u64, den: u64, argmax: u64, convention: &'static str) -> Self {
        let r = Real::from_u64(num) / Real::from_u64(den);
        DensityEstimate {
            kind,
            horizon,
            value: r.to_f64(),
            value_decimal: r.to_decimal(),
            ratio: Some((num, den)),
            argmax,
            convention,
            profile: Vec::new(),
            windows: Vec::new(),
        }
    }
}

/// `a/b > c/d` for positive denominators.
fn gt(a: u64, b: u64, c: u64, d: u64) -> bool {
    (a as u128) * (d as u128) > (c as u128) * (b as u128)
}

fn lt(a: u64, b: u64, c: u64, d: u64) -> bool {
    gt(c, d, a, b)
}

fn tail_start(n: u64) -> u64 {
    n.div_ceil(2)
}

fn profile(n: u64, f: impl Fn(u64) -> f64) -> Vec<(u64, f64)> {
    let step = (n / PROFILE_POINTS).max(1);
    let mut pts: Vec<u64> = (1..=PROFILE_POINTS).map(|j| (j * step).min(n)).collect();
    pts.dedup();
    pts.into_iter().map(|x| (x, f(x))).collect()
}

fn check_n(s: &dyn IntegerSet, n: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("horizon {n} must be at least 2")));
    }
    check_horizon(s, n)
}

pub fn upper_density_est(s: &dyn IntegerSet, n: u64) -> Result<DensityEstimate> {
    check_n(s, n)?;
    let start = tail_start(n);
    let mut c = s.count(start);
    let mut best = (c, start);
    s.for_each_in(start + 1, n, &mut |e| {
        c += 1;
        if gt(c, e, best.0, best.1) {
            best = (c, e);
        }
    });
    let mut est = DensityEstimate::from_ratio(DensityKind::Upper, n, best.0, best.1, best.1, TAIL_CONVENTION);
    est.profile = profile(n, |x| s.count(x) as f64 / x as f64);
    Ok(est)
}

pub fn lower_density_est(s: &dyn IntegerSet, n: u64) -> Result<DensityEstimate> {
    check_n(s, n)?;
    let start = tail_start(n);
    let mut c = s.count(start);
    let mut best = (c, start);
    s.for_each_in(start + 1, n, &mut |e| {
        if e - 1 > start && lt(c, e - 1, best.0, best.1) {
            best = (c, e - 1);
        }
        c += 1;
    });
    if lt(c, n, best.0, best.1) {
        best = (c, n);
    }
    let mut est = DensityEstimate::from_ratio(DensityKind::Lower, n, best.0, best.1, best.1, TAIL_CONVENTION);
    est.profile = profile(n, |x| s.count(x) as f64 / x as f64);
    Ok(est)
}

struct Bits(Vec<u64>);

impl Bits {
    fn of(s: &dyn IntegerSet, n: u64) -> Self {
        let mut v = vec![0u64; (n as usize >> 6) + 2];
        s.for_each_in(1, n, &mut |x| v[x as usize >> 6] |= 1 << (x & 63));
        Bits(v)
    }

    fn get(&self, x: u64) -> u64 {
        self.0[x as usize >> 6] >> (x & 63) & 1
    }
}

/// Densest window of `w` consecutive integers inside `[1, n]`, smallest offset on ties.
fn best_window(s: &dyn IntegerSet, bits: &Bits, n: u64, w: u64) -> WindowDensity {
    const CHUNK: u64 = 1 << 16;
    let last = n - w + 1;
    let starts: Vec<u64> = (1..=last).step_by(CHUNK as usize).collect();
    let best = starts
        .par_iter()
        .map(|&m0| {
            let m1 = (m0 + CHUNK - 1).min(last);
            let mut c = s.count(m0 + w - 1) - s.count(m0 - 1);
            let mut best = (c, m0);
            for m in m0 + 1..=m1 {
                c = c + bits.get(m + w - 1) - bits.get(m - 1);
                if c > best.0 {
                    best = (c, m);
                }
            }
            best
        })
        .reduce(|| (0, u64::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    WindowDensity { width: w, offset: best.1, count: best.0, value: best.0 as f64 / w as f64 }
}

pub fn banach_density_est(s: &dyn IntegerSet, n: u64, widths: &[u64]) -> Result<DensityEstimate> {
    check_n(s, n)?;
    if widths.is_empty() {
        return Err(Error::InvalidInput("no window widths".into()));
    }
    if let Some(w) = widths.iter().find(|&&w| w == 0 || w > n) {
        return Err(Error::InvalidInput(format!("window width {w} outside [1, {n}]")));
    }
    let bits = Bits::of(s, n);
    let windows: Vec<WindowDensity> = widths.iter().map(|&w| best_window(s, &bits, n, w)).collect();
    let w_max = *widths.iter().max().expect("nonempty");
    let upper = upper_density_est(s, n)?;
    let (mut num, mut den) = upper.ratio.expect("ratio");
    let mut arg = 1;
    for win in windows.iter().filter(|x| 2 * x.width >= w_max) {
        if gt(win.count, win.width, num, den) {
            num = win.count;
            den = win.width;
            arg = win.offset;
        }
    }
    let mut est = DensityEstimate::from_ratio(DensityKind::Banach, n, num, den, arg, BANACH_CONVENTION);
    est.windows = windows;
    est.profile = upper.profile;
    Ok(est)
}

/// `max #(A ∩ [1, n]) / #(S ∩ [1, n])` over the tail; `A ⊆ S` is checked on `[1, N]`.
pub fn relative_density_est(a: &dyn IntegerSet, s: &dyn IntegerSet, n: u64) -> Result<DensityEstimate> {
    check_n(a, n)?;
    check_n(s, n)?;
    let mut bad = None;
    a.for_each_in(1, n, &mut |x| {
        if bad.is_none() && !s.contains(x) {
            bad = Some(x);
        }
    });
    if let Some(value) = bad {
        return Err(Error::Containment { value });
    }
    if s.count(n) == 0 {
        return Err(Error::InvalidInput(format!("S has no elements in [1, {n}]")));
    }
    let start = tail_start(n);
    let mut ca = a.count(start);
    let cs0 = s.count(start);
    let mut best: Option<(u64, u64, u64)> = (cs0 > 0).then_some((ca, cs0, start));
    a.for_each_in(start + 1, n, &mut |e| {
        ca += 1;
        let cs = s.count(e);
        if best.is_none_or(|(bn, bd, _)| gt(ca, cs, bn, bd)) {
            best = Some((ca, cs, e));
        }
    });
    let (num, den, arg) = match best {
        Some(b) => b,
        None => (0, s.count(n), n),
    };
    let mut est = DensityEstimate::from_ratio(DensityKind::Relative, n, num, den, arg, TAIL_CONVENTION);
    est.profile = profile(n, |x| {
        let d = s.count(x);
        if d == 0 {
            0.0
        } else {
            a.count(x) as f64 / d as f64
        }
    });
    Ok(est)
}

/// Near-ties at the f64 maximum re-ranked in 128-bit precision.
const REFINE_CANDIDATES: usize = 32;

pub fn convergence_exponent_est(s: &dyn IntegerSet, n: u64) -> Result<DensityEstimate> {
    check_n(s, n)?;
    let c = s.count(n);
    if c < 10 {
        return Err(Error::TooFewElements { needed: 10, found: c });
    }
    let i0 = c.div_ceil(2);
    let a0 = s.nth(i0).expect("index below count");
    let mut i = i0 - 1;
    let mut vals: Vec<(u64, u64, f64)> = Vec::with_capacity((c - i0 + 1) as usize);
    s.for_each_in(a0, n, &mut |a| {
        i += 1;
        vals.push((i, a, (i as f64).ln() / (a as f64).ln()));
    });
    let top = vals.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
    let mut near: Vec<&(u64, u64, f64)> = vals.iter().filter(|v| v.2 >= top - 1e-12 * top.abs()).collect();
    near.sort_by(|x, y| y.2.total_cmp(&x.2));
    near.truncate(REFINE_CANDIDATES);
    let mut best: Option<(Real, u64)> = None;
    for &&(i, a, _) in &near {
        let r = Real::from_u64(i).ln() / Real::from_u64(a).ln();
        if best.as_ref().is_none_or(|(b, _)| r > *b) {
            best = Some((r, i));
        }
    }
    let (r, arg) = best.expect("nonempty tail");
    let step = (vals.len() as u64 / PROFILE_POINTS).max(1) as usize;
    Ok(DensityEstimate {
        kind: DensityKind::ConvergenceExponent,
        horizon: n,
        value: r.to_f64(),
        value_decimal: r.to_decimal(),
        ratio: None,
        argmax: arg,
        convention: TAU_CONVENTION,
        profile: vals.iter().step_by(step).map(|v| (v.0, v.2)).collect(),
        windows: Vec::new(),
    })
}
