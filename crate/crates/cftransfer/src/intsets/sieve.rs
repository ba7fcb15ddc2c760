//! Segmented sieve of Eratosthenes, deterministic 64-bit Miller-Rabin, and the
//! P(1) primes `p = x² + y² + 1` with positive `x, y`.

use num_integer::Roots;
use rayon::prelude::*;

pub const DEFAULT_SEGMENT: usize = 1 << 22;

#[derive(Clone, Debug)]
pub struct BuildOptions {
    /// Sieve segment length in integers.
    pub segment: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { segment: DEFAULT_SEGMENT }
    }
}

fn simple_sieve(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut comp = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !comp[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                comp[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primes in `[1, n]`, ascending; segments are sieved in parallel and concatenated in range order.
pub fn primes_up_to(n: u64, opts: &BuildOptions) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let base = simple_sieve(n.sqrt());
    let seg = opts.segment.max(1024) as u64;
    let nseg = n.div_ceil(seg);
    let parts: Vec<Vec<u64>> = (0..nseg)
        .into_par_iter()
        .map(|s| {
            let lo = (s * seg).max(2);
            let hi = ((s + 1) * seg).min(n + 1);
            if lo >= hi {
                return Vec::new();
            }
            let mut comp = vec![false; (hi - lo) as usize];
            for &p in &base {
                if p * p >= hi {
                    break;
                }
                let mut j = (p * p).max(lo.div_ceil(p) * p);
                while j < hi {
                    comp[(j - lo) as usize] = true;
                    j += p;
                }
            }
            comp.iter().enumerate().filter(|(_, c)| !**c).map(|(i, _)| lo + i as u64).collect()
        })
        .collect();
    parts.concat()
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for all 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'outer: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Primes `p <= n` with `p - 1 = x² + y²` for some `x, y >= 1`.
pub fn p1_primes_up_to(n: u64, opts: &BuildOptions) -> Vec<u64> {
    let primes = primes_up_to(n, opts);
    if n < 3 {
        return Vec::new();
    }
    let lim = n - 1;
    let mut two_sq = vec![0u64; (lim as usize >> 6) + 1];
    let mut x = 1u64;
    while x * x < lim {
        let mut y = x;
        while x * x + y * y <= lim {
            let v = (x * x + y * y) as usize;
            two_sq[v >> 6] |= 1 << (v & 63);
            y += 1;
        }
        x += 1;
    }
    primes
        .into_iter()
        .filter(|&p| {
            let v = (p - 1) as usize;
            v >= 2 && two_sq[v >> 6] >> (v & 63) & 1 == 1
        })
        .collect()
}
