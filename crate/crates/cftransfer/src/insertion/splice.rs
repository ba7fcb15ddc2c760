//! The splice map (insert `W_k` after seed position `M_k`) and its inverse,
//! the elimination map.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::InsertionPlan;
use crate::cfcore::DigitWord;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Spliced {
    pub word: DigitWord,
    /// Number of blocks inserted.
    pub inserted: usize,
    pub warning: Option<String>,
}

/// Checks that digit `n` of `y` lies in `B ∩ [tⁿ, Ltⁿ]` for every `n`.
pub fn check_seed_word(plan: &InsertionPlan, y: &DigitWord) -> Result<()> {
    if !y.is_regular() {
        return Err(Error::InvalidInput("seed words are regular continued fraction words".into()));
    }
    let t = BigUint::from(plan.seed.t);
    let mut lo = BigUint::from(1u32);
    for (i, d) in y.digits().iter().enumerate() {
        let n = i + 1;
        lo *= &t;
        let hi = plan.seed.l_times(&lo);
        if *d < lo || *d > hi {
            return Err(Error::SeedViolation { position: n, reason: format!("digit {d} outside [{lo}, {hi}]") });
        }
        match plan.base_set.contains_big(d) {
            Some(true) => {}
            Some(false) => return Err(Error::SeedViolation { position: n, reason: format!("digit {d} is not in {}", plan.base) }),
            None => return Err(Error::SeedViolation { position: n, reason: format!("membership of {d} in {} is unknown", plan.base) }),
        }
    }
    Ok(())
}

/// Blocks whose position is at most `len`, as `(M_k, W_k)`.
fn active_blocks(plan: &InsertionPlan, len: usize) -> Result<Vec<(usize, &[BigUint])>> {
    let mut out = Vec::new();
    for b in &plan.blocks {
        let Some(m) = b.position_u64().and_then(|m| m.to_usize()).filter(|&m| m <= len) else {
            break;
        };
        let Some(e) = &b.elements else {
            return Err(Error::InvalidInput(format!("block {} is not materialized", b.k)));
        };
        out.push((m, e.as_slice()));
    }
    Ok(out)
}

/// Inserts each `W_k`, ascending, right after seed position `M_k`.
pub fn splice(plan: &InsertionPlan, y: &DigitWord) -> Result<Spliced> {
    check_seed_word(plan, y)?;
    let blocks = active_blocks(plan, y.len())?;
    let warning = match (blocks.is_empty(), plan.blocks.first()) {
        (true, Some(b)) => Some(format!("word of length {} is shorter than M_1 = {}; returned unchanged", y.len(), b.position)),
        _ => None,
    };
    let mut digits = Vec::with_capacity(y.len() + blocks.iter().map(|b| b.1.len()).sum::<usize>());
    let mut next = blocks.iter().peekable();
    for (i, d) in y.digits().iter().enumerate() {
        digits.push(d.clone());
        while let Some((_, w)) = next.next_if(|(m, _)| *m == i + 1) {
            digits.extend(w.iter().cloned());
        }
    }
    Ok(Spliced { word: DigitWord::regular(digits)?, inserted: blocks.len(), warning })
}

/// Removes the inserted blocks from a spliced word; fails at the first digit that breaks the block structure.
pub fn eliminate(plan: &InsertionPlan, x: &DigitWord) -> Result<DigitWord> {
    if !x.is_regular() {
        return Err(Error::InvalidInput("spliced words are regular continued fraction words".into()));
    }
    let xs = x.digits();
    let blocks = active_blocks(plan, xs.len())?;
    let mut next = blocks.iter().peekable();
    let mut y = Vec::with_capacity(xs.len());
    let mut j = 0;
    while j < xs.len() {
        y.push(xs[j].clone());
        j += 1;
        while let Some((_, w)) = next.next_if(|(m, _)| *m == y.len()) {
            let k = plan.blocks.iter().position(|b| b.position_u64() == Some(y.len() as u64)).map_or(0, |i| i + 1);
            for e in w.iter() {
                match xs.get(j) {
                    None => return Err(Error::NotInImage { position: j + 1, reason: format!("word ends inside block {k}, expected {e}") }),
                    Some(d) if d != e => return Err(Error::NotInImage { position: j + 1, reason: format!("expected digit {e} of block {k}, found {d}") }),
                    Some(_) => j += 1,
                }
            }
        }
    }
    DigitWord::regular(y)
}

/// The seed word of length `len` whose `n`-th digit is the smallest element of `B ∩ [tⁿ, Ltⁿ]`.
pub fn canonical_seed_word(plan: &InsertionPlan, len: usize) -> Result<DigitWord> {
    let mut digits = Vec::with_capacity(len);
    for n in 1..=len as u64 {
        let (lo, hi) = plan.seed.window(n);
        let d = smallest_in(plan, &lo, &hi).ok_or_else(|| Error::ThinWindow { level: n as usize, count: "0".into() })?;
        digits.push(d);
    }
    DigitWord::regular(digits)
}

fn smallest_in(plan: &InsertionPlan, lo: &BigUint, hi: &BigUint) -> Option<BigUint> {
    let before = plan.base_set.count_big(&(lo - 1u32))?;
    let d = plan.base_set.nth_big(&(before + 1u32))?;
    (&d <= hi).then_some(d)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::insertion::fixtures::{frac, naturals_evens, seed, toy_plan};
    use crate::intsets::{ResidueClass, SetHandle};

    fn word(d: &[u64]) -> DigitWord {
        DigitWord::from_u64s(d).unwrap()
    }

    #[test]
    fn inserts_block_after_its_position() {
        let plan = toy_plan(vec![7]);
        let x = splice(&plan, &word(&[3, 10, 30])).unwrap();
        assert_eq!(x.word, word(&[3, 10, 7, 30]));
        assert_eq!(x.inserted, 1);
        assert!(x.warning.is_none());
        let x = splice(&toy_plan(vec![7, 9]), &word(&[3, 10, 30])).unwrap();
        assert_eq!(x.word, word(&[3, 10, 7, 9, 30]));
    }

    #[test]
    fn block_at_the_last_seed_digit_is_appended() {
        let x = splice(&toy_plan(vec![7]), &word(&[3, 10])).unwrap();
        assert_eq!(x.word, word(&[3, 10, 7]));
    }

    #[test]
    fn short_words_are_returned_unchanged_with_a_warning() {
        let x = splice(&toy_plan(vec![7]), &word(&[3])).unwrap();
        assert_eq!(x.word, word(&[3]));
        assert_eq!(x.inserted, 0);
        assert!(x.warning.unwrap().contains("shorter than M_1"));
    }

    #[test]
    fn eliminate_inverts_splice() {
        let plan = toy_plan(vec![7, 9]);
        assert_eq!(eliminate(&plan, &word(&[3, 10, 7, 9, 30])).unwrap(), word(&[3, 10, 30]));
    }

    #[test]
    fn eliminate_reports_the_first_wrong_digit() {
        let plan = toy_plan(vec![7]);
        match eliminate(&plan, &word(&[3, 10, 8, 30])) {
            Err(Error::NotInImage { position, .. }) => assert_eq!(position, 3),
            other => panic!("expected NotInImage, got {other:?}"),
        }
    }

    #[test]
    fn eliminate_rejects_words_ending_inside_a_block() {
        let plan = toy_plan(vec![7, 9]);
        match eliminate(&plan, &word(&[3, 10, 7])) {
            Err(Error::NotInImage { position, reason }) => {
                assert_eq!(position, 4);
                assert!(reason.contains("ends inside block 1"));
            }
            other => panic!("expected NotInImage, got {other:?}"),
        }
    }

    #[test]
    fn seed_words_must_respect_windows_and_base() {
        let plan = toy_plan(vec![7]);
        match check_seed_word(&plan, &word(&[3, 11, 30])) {
            Err(Error::SeedViolation { position, .. }) => assert_eq!(position, 2),
            other => panic!("expected SeedViolation, got {other:?}"),
        }
        // 4 lies in [3, 3] only if L·3 >= 4, which fails for L = 6/5.
        assert!(check_seed_word(&plan, &word(&[4])).is_err());
        assert!(splice(&plan, &word(&[3, 9])).is_err());
    }

    #[test]
    fn canonical_seed_word_takes_window_minima() {
        let plan = naturals_evens();
        let y = canonical_seed_word(plan, 4).unwrap();
        check_seed_word(plan, &y).unwrap();
        for (n, d) in y.digits().iter().enumerate() {
            let (lo, _) = plan.seed.window(n as u64 + 1);
            let mut v = lo;
            while &v < d {
                assert_eq!(plan.base_set.contains_big(&v), Some(false));
                v += 1u32;
            }
        }
    }

    /// Odd seed digits with `t = 3`, `L = 2`, and blocks of distinct even digits.
    fn small_plan() -> impl Strategy<Value = (Vec<u64>, Vec<Vec<u64>>)> {
        (1usize..=4)
            .prop_flat_map(|k| (prop::collection::btree_set(1u64..=8, k), prop::collection::btree_set(1u64..=200, 0..12), Just(k)))
            .prop_flat_map(|(pos, evens, k)| {
                let evens: Vec<u64> = evens.into_iter().map(|e| 2 * e).collect();
                let n = evens.len();
                (Just(pos.into_iter().collect::<Vec<_>>()), Just(evens), prop::collection::vec(0..=n, k - 1))
            })
            .prop_map(|(pos, evens, mut cuts)| {
                cuts.sort_unstable();
                let mut blocks = Vec::new();
                let mut from = 0;
                for c in cuts.into_iter().chain([evens.len()]) {
                    let mut b = evens[from..c.max(from)].to_vec();
                    b.sort_unstable();
                    blocks.push(b);
                    from = c.max(from);
                }
                (pos, blocks)
            })
    }

    fn odd_word(len: usize) -> impl Strategy<Value = Vec<u64>> {
        let choices: Vec<_> = (1..=len as u32).map(|n| (3u64.pow(n) / 2)..=(3u64.pow(n) - 1)).collect();
        choices.prop_map(|halves| halves.into_iter().map(|h| 2 * h + 1).collect())
    }

    proptest! {
        #[test]
        fn splice_then_eliminate_is_identity(
            (pos, blocks) in small_plan(),
            y in (1usize..=10).prop_flat_map(odd_word),
        ) {
            let odd: SetHandle = Arc::new(ResidueClass::new(2, 1));
            let eps = vec![frac(1, 2); pos.len()];
            let plan = InsertionPlan::custom(seed(3, frac(2, 1)), odd, &eps, &pos, blocks).unwrap();
            let y = DigitWord::from_u64s(&y).unwrap();
            let x = splice(&plan, &y).unwrap();
            prop_assert_eq!(eliminate(&plan, &x.word).unwrap(), y);
            let mut d = x.word.digits().to_vec();
            d.sort();
            prop_assert!(d.windows(2).all(|w| w[0] != w[1]));
        }
    }
}
