//! Observed constants of the polynomial-density sandwich
//! `C1 N^{1/α} / (log N)^β <= #(S ∩ [1, N]) <= C2 N^{1/α} / (log N)^β`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_horizon, IntegerSet};
use crate::error::{Error, Result};
use crate::serial::ratio_str;

/// `C2/C1` above this marks the fit as evidence of a wrong `α` or `β`.
pub const FIT_RATIO_LIMIT: f64 = 2.0;

/// Reported constants are rounded outward to this many decimals.
const DECIMALS: u32 = 6;

#[derive(Clone, Debug, Serialize)]
pub struct PolyDensityParams {
    #[serde(with = "ratio_str")]
    pub alpha: BigRational,
    #[serde(with = "ratio_str")]
    pub beta: BigRational,
    #[serde(with = "ratio_str")]
    pub c1: BigRational,
    #[serde(with = "ratio_str")]
    pub c2: BigRational,
    pub window: (u64, u64),
    /// Where the smallest and largest normalized counts occur.
    pub argmin: u64,
    pub argmax: u64,
    pub spread: f64,
    pub violation: bool,
}

impl PolyDensityParams {
    /// Constants supplied directly rather than fitted.
    pub fn exact(alpha: BigRational, beta: BigRational, c1: BigRational, c2: BigRational) -> Self {
        let spread = (&c2 / &c1).to_f64().unwrap_or(f64::INFINITY);
        PolyDensityParams { alpha, beta, c1, c2, window: (0, 0), argmin: 0, argmax: 0, spread, violation: false }
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha.to_f64().unwrap_or(f64::NAN)
    }

    pub fn beta_f64(&self) -> f64 {
        self.beta.to_f64().unwrap_or(f64::NAN)
    }
}

fn outward(x: f64, up: bool) -> BigRational {
    let scale = 10f64.powi(DECIMALS as i32);
    let v = if up { (x * scale).ceil() } else { (x * scale).floor() };
    BigRational::new(BigInt::from(v as i64), BigInt::from(10i64.pow(DECIMALS)))
}

/// Tightest `(C1, C2)` over every `N` in the window, rounded outward.
pub fn fit_poly_density(s: &dyn IntegerSet, alpha: &BigRational, beta: &BigRational, window: (u64, u64)) -> Result<PolyDensityParams> {
    let (lo, hi) = window;
    if lo < 2 || lo > hi {
        return Err(Error::InvalidInput(format!("fit window [{lo}, {hi}] must satisfy 2 <= lo <= hi")));
    }
    check_horizon(s, hi)?;
    if s.count(hi) == s.count(lo - 1) && s.count(lo) == 0 {
        return Err(Error::InvalidInput("set is empty on the fit window".into()));
    }
    let inv_a = 1.0 / alpha.to_f64().unwrap_or(f64::NAN);
    let b = beta.to_f64().unwrap_or(f64::NAN);
    let norm = |n: u64| {
        let x = n as f64;
        x.powf(inv_a) / x.ln().powf(b)
    };
    const CHUNK: u64 = 1 << 16;
    let chunks: Vec<(u64, u64)> = (lo..=hi).step_by(CHUNK as usize).map(|a| (a, (a + CHUNK - 1).min(hi))).collect();
    let parts: Vec<((f64, u64), (f64, u64))> = chunks
        .par_iter()
        .map(|&(a, b_)| {
            let mut c = s.count(a - 1);
            let mut mn = (f64::INFINITY, a);
            let mut mx = (f64::NEG_INFINITY, a);
            for n in a..=b_ {
                if s.contains(n) {
                    c += 1;
                }
                let r = c as f64 / norm(n);
                if r < mn.0 {
                    mn = (r, n);
                }
                if r > mx.0 {
                    mx = (r, n);
                }
            }
            (mn, mx)
        })
        .collect();
    let mut mn = (f64::INFINITY, lo);
    let mut mx = (f64::NEG_INFINITY, lo);
    for (a, b_) in parts {
        if a.0 < mn.0 {
            mn = a;
        }
        if b_.0 > mx.0 {
            mx = b_;
        }
    }
    if mn.0 <= 0.0 {
        return Err(Error::InvalidInput(format!("set is empty up to {} inside the fit window", mn.1)));
    }
    let spread = mx.0 / mn.0;
    Ok(PolyDensityParams {
        alpha: alpha.clone(),
        beta: beta.clone(),
        c1: outward(mn.0, false),
        c2: outward(mx.0, true),
        window,
        argmin: mn.1,
        argmax: mx.1,
        spread,
        violation: spread > FIT_RATIO_LIMIT,
    })
}
