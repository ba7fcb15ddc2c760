//! The JSON pipeline configuration and its defaults.

use std::path::Path;

use cftransfer::intsets::{build_set, fit_poly_density, PolyDensityParams, SetHandle, SetSpec};
use cftransfer::serial::parse_ratio;
use cftransfer::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKindConfig {
    #[default]
    Relative,
    Banach,
}

/// Polynomial density constants: exact when `c1` and `c2` are given, fitted on `window` otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub alpha: String,
    #[serde(default = "zero")]
    pub beta: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(u64, u64)>,
}

fn zero() -> String {
    "0".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolderConfig {
    /// Blocks `1..=k_max` are sampled.
    pub k_max: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for HolderConfig {
    fn default() -> Self {
        HolderConfig { k_max: 1, samples: 400, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(rename = "S")]
    pub s: Option<SetSpec>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<SetSpec>,
    #[serde(default)]
    pub kind: PlanKindConfig,
    /// Horizon for materialized sets and density estimates.
    #[serde(default = "defaults::horizon")]
    pub horizon: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
    /// `ε_k` as rational strings; `1/(k+1)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<String>>,
    #[serde(default = "defaults::k_max")]
    pub k_max: usize,
    /// Progression length `ℓ`.
    #[serde(rename = "length", default = "defaults::length")]
    pub length: usize,
    /// Polynomial progression, as coefficient lists starting at `X^0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polys: Option<Vec<Vec<i64>>>,
    #[serde(default = "defaults::bound")]
    pub k_bound: u64,
    #[serde(default = "defaults::bound")]
    pub m_bound: u64,
    /// Digits per block searched for a located progression.
    #[serde(default = "defaults::block_prefix")]
    pub block_prefix: usize,
    #[serde(default = "defaults::thin_bound")]
    pub thin_bound: u64,
    /// Seed levels for the dimension report and the spliced echo.
    #[serde(default = "defaults::depth")]
    pub depth: u64,
    #[serde(default = "defaults::horizon")]
    pub tau_horizon: u64,
    #[serde(default)]
    pub holder: HolderConfig,
}

mod defaults {
    pub fn horizon() -> u64 {
        1_000_000
    }
    pub fn k_max() -> usize {
        4
    }
    pub fn length() -> usize {
        3
    }
    pub fn bound() -> u64 {
        1_000
    }
    pub fn block_prefix() -> usize {
        64
    }
    pub fn thin_bound() -> u64 {
        10_000
    }
    pub fn depth() -> u64 {
        100
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Usage problems that make the configuration unrunnable.
    pub fn validate(&self) -> Result<()> {
        if self.s.is_none() {
            return Err(Error::InvalidInput("config must name the set S".into()));
        }
        if self.kind == PlanKindConfig::Relative && self.a.is_none() {
            return Err(Error::InvalidInput("relative plans need the subset A".into()));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidInput("k_max must be at least 1".into()));
        }
        if self.length < 2 {
            return Err(Error::InvalidInput("progression length must be at least 2".into()));
        }
        self.epsilons()?;
        Ok(())
    }

    pub fn epsilons(&self) -> Result<Vec<BigRational>> {
        match &self.epsilons {
            Some(v) => v.iter().map(|e| parse_ratio(e)).collect(),
            None => Ok((1..=self.k_max).map(|k| BigRational::new(BigInt::from(1), BigInt::from(k as u64 + 1))).collect()),
        }
    }

    pub fn set_s(&self) -> Result<SetHandle> {
        let spec = self.s.as_ref().ok_or_else(|| Error::InvalidInput("config must name the set S".into()))?;
        build_set(spec, self.horizon)
    }

    pub fn set_a(&self) -> Result<Option<SetHandle>> {
        self.a.as_ref().map(|a| build_set(a, self.horizon)).transpose()
    }

    /// The configured fit, or the density shape implied by the kind of `S`.
    pub fn fit_config(&self) -> Result<FitConfig> {
        if let Some(f) = &self.fit {
            return Ok(f.clone());
        }
        let exact =
            |alpha: &str, c1: &str, c2: &str| FitConfig { alpha: alpha.into(), beta: "0".into(), c1: Some(c1.into()), c2: Some(c2.into()), window: None };
        let fitted = |alpha: &str, beta: &str| FitConfig { alpha: alpha.into(), beta: beta.into(), c1: None, c2: None, window: None };
        Ok(match self.s.as_ref() {
            Some(SetSpec::Naturals) => exact("1", "1", "1"),
            Some(SetSpec::PiatetskiShapiro { alpha }) => fitted(alpha, "0"),
            Some(SetSpec::Primes) => fitted("1", "1"),
            Some(SetSpec::P1Primes) => fitted("1", "3/2"),
            _ => return Err(Error::InvalidInput("no default density shape for this S; give `fit` explicitly".into())),
        })
    }

    pub fn fit(&self, s: &SetHandle) -> Result<PolyDensityParams> {
        let f = self.fit_config()?;
        let alpha = parse_ratio(&f.alpha)?;
        let beta = parse_ratio(&f.beta)?;
        match (&f.c1, &f.c2) {
            (Some(c1), Some(c2)) => Ok(PolyDensityParams::exact(alpha, beta, parse_ratio(c1)?, parse_ratio(c2)?)),
            (None, None) => fit_poly_density(s.as_ref(), &alpha, &beta, f.window.unwrap_or((100, self.horizon))),
            _ => Err(Error::InvalidInput("give both c1 and c2 or neither".into())),
        }
    }
}
