//! Digit insertion: planners that place blocks `W_k` of extra digits after
//! positions `M_k` of seed words, the splice and elimination maps between the
//! seed family and the spliced family, per-block condition ledgers, and exact
//! sampling of the Hölder bound for the elimination map.

mod conditions;
#[cfg(test)]
pub(crate) mod fixtures;
mod holder;
mod planner;
mod splice;
mod verify;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::intsets::{SetHandle, SortedSet};
use crate::magnitude::Num;
use crate::moran::SeedParams;
use crate::serial::ratio_str;

pub use conditions::{Check, CheckStatus};
pub use holder::{empirical_holder, HolderPair, HolderReport, MAX_SAMPLE_DEPTH};
pub use planner::{default_epsilons, plan_banach, plan_relative, plan_relative_seeded, PlanOptions};
pub use splice::{canonical_seed_word, check_seed_word, eliminate, splice, Spliced};
pub use verify::{dimension_echo, spliced_levels, verify_plan, BlockLedger, ConditionLedger, EchoReport, ECHO_TOLERANCE};

/// Blocks with at most this many digits are serialized inline.
pub const INLINE_ELEMENTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Relative,
    Banach,
    /// Positions and blocks supplied by the caller.
    Custom,
}

/// Where inserted digits come from.
#[derive(Clone)]
pub enum InsertSource {
    /// `A ∖ thin`.
    Difference {
        a: SetHandle,
        thin: SetHandle,
    },
    Whole(SetHandle),
}

impl InsertSource {
    pub fn contains_big(&self, v: &BigUint) -> Option<bool> {
        match self {
            InsertSource::Difference { a, thin } => {
                if !a.contains_big(v)? {
                    return Some(false);
                }
                Some(!thin.contains_big(v)?)
            }
            InsertSource::Whole(s) => s.contains_big(v),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InsertSource::Difference { a, thin } => format!("{} minus {}", a.describe(), thin.describe()),
            InsertSource::Whole(s) => s.describe(),
        }
    }
}

fn inline_elements<S: Serializer>(v: &Option<Vec<BigUint>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(xs) if xs.len() <= INLINE_ELEMENTS => s.collect_seq(xs.iter().map(|x| x.to_string())),
        _ => s.serialize_none(),
    }
}

/// One inserted block `W_k`, placed right after seed position `M_k`.
#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub k: usize,
    #[serde(with = "ratio_str")]
    pub epsilon: BigRational,
    /// `M_k`.
    pub position: Num,
    /// `I_k` as closed integer bounds; `None` when empty.
    pub window: Option<(Num, Num)>,
    /// `#(ℕ ∩ I_k)`.
    pub window_len: Num,
    /// `#(ℕ ∩ I_k) / (L t^{M_{k−1}})` when the window is too large to hold exactly.
    pub window_scale: Option<f64>,
    /// Reference count in the ratio: `#(S ∩ I_k)` for relative plans, `#(ℕ ∩ I_k)` for Banach plans.
    pub reference_count: Option<(Num, Num)>,
    /// Lower and upper bound on `#W_k`; equal when known exactly.
    pub w_count: (Num, Num),
    /// Bracket on `#W_k / reference_count`.
    pub ratio: Option<(f64, f64)>,
    pub materialized: bool,
    #[serde(serialize_with = "inline_elements")]
    pub elements: Option<Vec<BigUint>>,
    /// `N_k` for Banach plans.
    pub banach_len: Option<u64>,
    pub checks: Vec<Check>,
}

impl Block {
    /// `#W_k` when known exactly.
    pub fn w_exact(&self) -> Option<&BigUint> {
        match (&self.w_count.0, &self.w_count.1) {
            (Num::Exact(a), Num::Exact(b)) if a == b => Some(a),
            _ => None,
        }
    }

    pub fn position_u64(&self) -> Option<u64> {
        self.position.exact()?.to_u64()
    }

    pub fn is_empty(&self) -> bool {
        self.w_exact().is_some_and(|w| w.is_zero())
    }
}

#[derive(Clone, Serialize)]
pub struct InsertionPlan {
    pub kind: PlanKind,
    pub set: String,
    pub insert_source: String,
    pub base: String,
    pub seed: SeedParams,
    /// Density the block ratios are compared with.
    pub reference_density: f64,
    pub reference_convention: String,
    pub k_max: usize,
    pub blocks: Vec<Block>,
    /// Why the plan stops before `k_max`.
    pub truncated: Option<String>,
    pub advisory: Option<String>,
    #[serde(skip)]
    pub base_set: SetHandle,
    #[serde(skip)]
    pub source: InsertSource,
}

impl InsertionPlan {
    /// A plan with caller-chosen positions and blocks; `blocks[j]` is inserted after `positions[j]`.
    pub fn custom(seed: SeedParams, base_set: SetHandle, epsilons: &[BigRational], positions: &[u64], blocks: Vec<Vec<u64>>) -> Result<Self> {
        if positions.len() != blocks.len() || epsilons.len() < positions.len() {
            return Err(Error::InvalidInput("need one position and one epsilon per block".into()));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) || positions.first().is_some_and(|&m| m == 0) {
            return Err(Error::InvalidInput("positions must be positive and strictly increasing".into()));
        }
        let mut all: Vec<u64> = Vec::new();
        let mut out = Vec::with_capacity(blocks.len());
        for (j, (w, &m)) in blocks.into_iter().zip(positions).enumerate() {
            if w.windows(2).any(|p| p[0] >= p[1]) || w.first() == Some(&0) {
                return Err(Error::InvalidInput(format!("block {} must be positive and strictly ascending", j + 1)));
            }
            for &v in &w {
                if base_set.contains_big(&BigUint::from(v)) != Some(false) {
                    return Err(Error::InvalidInput(format!("block {} digit {v} is not outside the base set", j + 1)));
                }
            }
            all.extend(&w);
            let n = BigUint::from(w.len());
            out.push(Block {
                k: j + 1,
                epsilon: epsilons[j].clone(),
                position: Num::Exact(BigUint::from(m)),
                window: match (w.first(), w.last()) {
                    (Some(&a), Some(&b)) => Some((Num::Exact(a.into()), Num::Exact(b.into()))),
                    _ => None,
                },
                window_len: Num::Exact(n.clone()),
                window_scale: None,
                reference_count: None,
                w_count: (Num::Exact(n.clone()), Num::Exact(n)),
                ratio: None,
                materialized: true,
                elements: Some(w.into_iter().map(BigUint::from).collect()),
                banach_len: None,
                checks: Vec::new(),
            });
        }
        all.sort_unstable();
        if all.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::InvalidInput("blocks must be pairwise disjoint".into()));
        }
        let source: SetHandle = std::sync::Arc::new(SortedSet::finite("custom blocks", all)?);
        let mut plan = InsertionPlan {
            kind: PlanKind::Custom,
            set: "custom".into(),
            insert_source: source.describe(),
            base: base_set.describe(),
            seed,
            reference_density: 0.0,
            reference_convention: "none".into(),
            k_max: out.len(),
            blocks: out,
            truncated: None,
            advisory: None,
            base_set,
            source: InsertSource::Whole(source),
        };
        let checks = verify::recompute_all(&plan);
        for (b, c) in plan.blocks.iter_mut().zip(checks) {
            b.checks = c;
        }
        Ok(plan)
    }

    /// `M_k` for `k = 0..=blocks.len()`, with `M_0 = 0`.
    pub fn position(&self, k: usize) -> Num {
        if k == 0 {
            return Num::Exact(BigUint::zero());
        }
        self.blocks[k - 1].position.clone()
    }

    /// 1-based index in every spliced word of the first digit of `W_k`, when exact.
    pub fn block_start_index(&self, k: usize) -> Option<BigUint> {
        let mut idx = self.blocks[k - 1].position.exact()?.clone();
        for b in &self.blocks[..k - 1] {
            idx += b.w_exact()?;
        }
        Some(idx + 1u32)
    }

    /// First `limit` digits of `W_k` in ascending order, scanning the window when not materialized.
    pub fn block_prefix(&self, k: usize, limit: usize) -> Option<Vec<BigUint>> {
        let b = &self.blocks[k - 1];
        if let Some(e) = &b.elements {
            return Some(e.iter().take(limit).cloned().collect());
        }
        let (Num::Exact(lo), Num::Exact(hi)) = b.window.as_ref()? else {
            return None;
        };
        let mut out = Vec::new();
        let mut v = lo.clone();
        let budget = 64 * limit.max(1) + 64;
        let mut scanned = 0;
        while &v <= hi && out.len() < limit && scanned < budget {
            if self.source.contains_big(&v)? {
                out.push(v.clone());
            }
            v += 1u32;
            scanned += 1;
        }
        (out.len() == limit || &v > hi).then_some(out)
    }

    pub fn all_materialized(&self) -> bool {
        self.blocks.iter().all(|b| b.materialized)
    }
}
