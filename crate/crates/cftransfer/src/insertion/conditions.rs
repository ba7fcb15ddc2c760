//! Named inequality checks with relative margins, and the log-domain forms of
//! the per-block conditions shared by the planners and the verifier.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::Serialize;

use crate::hp::Real;
use crate::magnitude::{Mag, Num};
use crate::moran::GUARD;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    /// Holds or fails only inside the guard band.
    Marginal,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Relative slack, positive when the inequality holds.
    pub margin: f64,
    pub lhs: String,
    pub rhs: String,
    pub note: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

fn status(margin: f64) -> CheckStatus {
    if margin > GUARD {
        CheckStatus::Pass
    } else if margin < -GUARD {
        CheckStatus::Fail
    } else {
        CheckStatus::Marginal
    }
}

/// `lhs <= rhs` with margin `(rhs − lhs) / max(|lhs|, |rhs|)`.
pub(crate) fn le(name: &'static str, lhs: &Mag, rhs: &Mag, note: &str) -> Check {
    let scale = if lhs.abs().cmp_mag(&rhs.abs()) == Ordering::Greater { lhs.abs() } else { rhs.abs() };
    let margin = if scale.is_zero() { 0.0 } else { rhs.sub(lhs).div(&scale).to_f64() };
    Check { name, status: status(margin), margin, lhs: lhs.to_string(), rhs: rhs.to_string(), note: note.into() }
}

/// `lhs <= rhs` given `log(lhs / rhs) = rest − power · log s`.
///
/// The power of `s` is applied as an integer coefficient, so it survives when
/// `log s` is too large for `log s` and `power · log s` to be told apart.
pub(crate) fn le_scaled(name: &'static str, power: u64, ln_s: &Mag, rest: &Mag, note: &str) -> Check {
    let ln_ratio = rest.sub(&ln_s.mul(&Mag::from_u64(power)));
    let margin = Mag::from_u64(1).sub(&ln_ratio.exp()).to_f64();
    let lhs = format!("s^-{power} exp({rest})");
    Check { name, status: status(margin), margin, lhs, rhs: "1".into(), note: note.into() }
}

/// Exact comparison of integers or rationals; never marginal.
pub(crate) fn exact(name: &'static str, ok: bool, margin: f64, lhs: String, rhs: String, note: &str) -> Check {
    let margin = if ok { margin.abs().max(f64::MIN_POSITIVE) } else { -margin.abs().max(f64::MIN_POSITIVE) };
    Check { name, status: if ok { CheckStatus::Pass } else { CheckStatus::Fail }, margin, lhs, rhs, note: note.into() }
}

/// Every value of `bracket` within `tol` of `target`; margin `(tol − deviation) / tol`.
pub(crate) fn within(name: &'static str, bracket: (f64, f64), target: f64, tol: f64, note: &str) -> Check {
    let dev = (bracket.0 - target).abs().max((bracket.1 - target).abs());
    let margin = (tol - dev) / tol;
    Check {
        name,
        status: status(margin),
        margin,
        lhs: format!("[{:.9}, {:.9}]", bracket.0, bracket.1),
        rhs: format!("{target:.9} ± {tol:.9}"),
        note: note.into(),
    }
}

/// Every value of `bracket` at least `floor`; margin `(low − floor) / floor`.
pub(crate) fn at_least(name: &'static str, bracket: (f64, f64), floor: f64, note: &str) -> Check {
    let margin = if floor > 0.0 { (bracket.0 - floor) / floor } else { bracket.0 - floor };
    Check { name, status: status(margin), margin, lhs: format!("[{:.9}, {:.9}]", bracket.0, bracket.1), rhs: format!(">= {floor:.9}"), note: note.into() }
}

pub(crate) fn mag(n: &Num) -> Mag {
    n.to_mag()
}

pub(crate) fn ratio_mag(r: &BigRational) -> Mag {
    Mag::from_ratio(r)
}

pub(crate) fn ln2() -> Mag {
    Mag::from_real(Real::ln2())
}

/// `M(M+1) − M'(M'+1)`, exact when both positions are.
pub(crate) fn position_gap(prev: &Num, m: &Num) -> Mag {
    match (prev, m) {
        (Num::Exact(a), Num::Exact(b)) if b >= a => Mag::from_biguint(&(b * (b + 1u32) - a * (a + 1u32))),
        _ => {
            let (a, b) = (prev.to_mag(), m.to_mag());
            let one = Mag::from_u64(1);
            b.mul(&b.add(&one)).sub(&a.mul(&a.add(&one)))
        }
    }
}

/// Tail separation `(M+1)(εM − 6) log t >= log 2`, the infimum over `n >= M` of the tail product bound.
pub(crate) fn tail_separation(eps: &BigRational, m: &Num, ln_t: &Mag) -> Check {
    let m = mag(m);
    let one = Mag::from_u64(1);
    let rhs = m.add(&one).mul(&ratio_mag(eps).mul(&m).sub(&Mag::from_u64(6))).mul(ln_t);
    le("tail_separation", &ln2(), &rhs, "log 2 <= (M+1)(eps M - 6) log t")
}

/// `log 2 + (M+1)(M+6) log t + 3ε M(M+1) log t <= (1+4ε) M(M+1) log t` at `n = M`.
///
/// The margin is taken after dividing both sides by `M(M+1) log t`, which keeps it
/// exact when `M` is too large for the sides to be told apart directly.
pub(crate) fn holder_tail(eps: &BigRational, m: &Num, ln_t: &Mag) -> Check {
    let mm = mag(m);
    let e = ratio_mag(eps);
    let one = Mag::from_u64(1);
    let prod = mm.mul(&mm.add(&one)).mul(ln_t);
    let lhs = ln2().add(&mm.add(&one).mul(&mm.add(&Mag::from_u64(6))).mul(ln_t)).add(&Mag::from_u64(3).mul(&e).mul(&prod));
    let den = one.add(&Mag::from_u64(4).mul(&e));
    let rhs = den.mul(&prod);
    // (rhs − lhs) / rhs = ((ε − 6/M) − log 2 / (M(M+1) log t)) / (1 + 4ε).
    let inner = e.sub(&Mag::from_u64(6).div(&mm)).sub(&ln2().div(&prod));
    let margin = inner.div(&den).to_f64();
    let note = "tail product with exponent 3 eps against exponent 1 + 4 eps, at n = M";
    Check { name: "holder_tail", status: status(margin), margin, lhs: lhs.to_string(), rhs: rhs.to_string(), note: note.into() }
}

/// `Σ_{i ∈ W} 2 log(i+1) <= 3ε (M(M+1) − M'(M'+1)) log t`.
pub(crate) fn block_product(eps: &BigRational, prev: &Num, m: &Num, digit_cost: &Mag, ln_t: &Mag) -> Check {
    let rhs = Mag::from_u64(3).mul(&ratio_mag(eps)).mul(&position_gap(prev, m)).mul(ln_t);
    le("block_product", digit_cost, &rhs, "sum of 2 log(i+1) over the block against 3 eps times the seed cost of positions M'+1..M")
}

/// `2 s log(c + s + 1) <= 2ε M² log t` with `c = L t^{M'}` and `s = ⌊√M⌋`.
pub(crate) fn block_cost_window(eps: &BigRational, s: &Mag, ln_end: &Mag, m: &Num, ln_t: &Mag) -> Check {
    let m = mag(m);
    let two = Mag::from_u64(2);
    let lhs = two.mul(s).mul(ln_end);
    let rhs = two.mul(&ratio_mag(eps)).mul(&m).mul(&m).mul(ln_t);
    le("block_cost_window", &lhs, &rhs, "2 s log(L t^M' + s + 1) <= 2 eps M^2 log t")
}

/// `2M² <= 3(M(M+1) − M'(M'+1))`.
pub(crate) fn block_cost_positions(prev: &Num, m: &Num) -> Check {
    let note = "2 M^2 <= 3 (M(M+1) - M'(M'+1))";
    if let (Num::Exact(a), Num::Exact(b)) = (prev, m) {
        if b >= a {
            let lhs: BigUint = b * b * 2u32;
            let rhs: BigUint = (b * (b + 1u32) - a * (a + 1u32)) * 3u32;
            let margin = 1.0 - (Real::from_biguint(&lhs) / Real::from_biguint(&rhs.clone().max(BigUint::from(1u32)))).to_f64();
            return exact("block_cost_positions", lhs <= rhs, margin, lhs.to_string(), rhs.to_string(), note);
        }
    }
    // Divided by M²: 2 <= 3(1 + 1/M − q² − q/M) with q = M'/M.
    let (a, b) = (mag(prev), mag(m));
    let one = Mag::from_u64(1);
    let q = a.div(&b);
    let inv = one.div(&b);
    let scaled = Mag::from_u64(3).mul(&one.add(&inv).sub(&q.mul(&q)).sub(&q.mul(&inv)));
    let margin = one.sub(&Mag::from_u64(2).div(&scaled)).to_f64();
    let lhs = Mag::from_u64(2).mul(&b).mul(&b);
    let rhs = Mag::from_u64(3).mul(&position_gap(prev, m));
    Check { name: "block_cost_positions", status: status(margin), margin, lhs: lhs.to_string(), rhs: rhs.to_string(), note: note.into() }
}

/// `L t^{M'} + s < t^M`, compared through logarithms.
pub(crate) fn window_order(ln_end: &Mag, m: &Num, ln_t: &Mag) -> Check {
    let rhs = mag(m).mul(ln_t);
    le("window_order", ln_end, &rhs, "log(L t^M' + s) < M log t")
}

/// `t^{M'} / s^{1/α} <= ε`, from the logarithm of the left side.
pub(crate) fn window_growth(eps: &BigRational, ln_lhs: &Mag) -> Check {
    le("window_growth", &ln_lhs.exp(), &ratio_mag(eps), "t^M' / s^(1/alpha) <= eps")
}

/// `min I / max I <= ε`, from an upper bound on the ratio.
pub(crate) fn window_position_ratio(eps: &BigRational, ratio: &Mag) -> Check {
    le("window_position_ratio", ratio, &ratio_mag(eps), "min I_k / max I_k <= eps")
}

/// `2N' log(M'+N'+1) <= 3ε (M(M+1) − M'(M'+1)) log t`.
pub(crate) fn window_cost(eps: &BigRational, prev: &Num, prev_len: u64, m: &Num, ln_t: &Mag) -> Check {
    let end = mag(prev).add(&Mag::from_u64(prev_len + 1));
    let lhs = Mag::from_u64(2 * prev_len).mul(&end.ln_abs());
    let rhs = Mag::from_u64(3).mul(&ratio_mag(eps)).mul(&position_gap(prev, m)).mul(ln_t);
    le("window_cost", &lhs, &rhs, "2 N' log(M' + N' + 1) <= 3 eps (M(M+1) - M'(M'+1)) log t")
}

/// `Σ 2 log(i+1)` over explicit digits.
pub(crate) fn digit_cost(elems: &[BigUint]) -> Mag {
    let mut acc = Real::zero();
    for v in elems {
        acc = acc + Real::ln_biguint(&(v + 1u32));
    }
    Mag::from_real(acc * Real::from_u64(2))
}
