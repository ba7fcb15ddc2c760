//! The composite transfer run: thinning, seed, plan, verification, Hölder
//! sampling, dimension reports and a located progression witness, collected
//! into one deterministic certificate.

use std::path::Path;
use std::sync::Arc;

use cftransfer::insertion::{
    canonical_seed_word, dimension_echo, empirical_holder, plan_banach, plan_relative, splice, verify_plan, ConditionLedger, EchoReport, HolderReport,
    InsertionPlan, PlanOptions, ECHO_TOLERANCE,
};
use cftransfer::intsets::{Complement, SetHandle};
use cftransfer::moran::{dimension_report, DimensionReport, SeedParams, DIMENSION_TOLERANCE, GUARD};
use cftransfer::progressions::{find_ap, find_block_ap, find_poly_progression, locate_in_digits, IntPolynomial, Located, ProgressionWitness};
use cftransfer::serial::ratio_to_string;
use cftransfer::thinning::{thin_subset, ThinningResult};
use cftransfer::{Error, Result};
use serde::Serialize;

use crate::config::{FitConfig, PipelineConfig, PlanKindConfig};

pub const CERTIFICATE_SCHEMA: &str = "cftransfer.certificate/1";

/// Seed words longer than this are not exported.
const MAX_EXPORT_LEN: u64 = 4_096;

/// The counting sandwich for the thin index set must hold from here on.
pub const SANDWICH_FROM: u64 = 24;

/// Extra seed levels past `M_1` in the spliced dimension echo.
const ECHO_EXTRA_LEVELS: u64 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Pass,
    Fail,
    /// The check could not be carried out at this scale.
    Infeasible,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub stage: &'static str,
    pub status: StageStatus,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Toolchain {
    pub library: &'static str,
    pub cli: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub sandwich_from: u64,
    pub guard_band: f64,
    pub dimension: f64,
    pub echo: f64,
    pub holder_margin_floor: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HolderOutcome {
    Sampled(HolderReport),
    Infeasible { k: usize, reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessSection {
    /// Smallest progression found in the inserted set.
    pub search: Option<ProgressionWitness>,
    /// Why `search` could not be placed among the block digits.
    pub search_location: Option<String>,
    pub located: Option<Located>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExportedWords {
    pub seed_len: usize,
    pub spliced_len: usize,
    pub blocks_inserted: usize,
}

#[derive(Clone, Serialize)]
pub struct PipelineCertificate {
    pub schema: &'static str,
    pub toolchain: Toolchain,
    pub inputs: PipelineConfig,
    /// Density constants of `S`; Banach plans fit the complement themselves.
    pub fit: Option<FitConfig>,
    pub tolerances: Tolerances,
    pub stages: Vec<StageRecord>,
    pub pass: bool,
    pub thinning: ThinningResult,
    pub seed: SeedParams,
    pub plan: InsertionPlan,
    pub ledger: ConditionLedger,
    pub holder: Vec<HolderOutcome>,
    pub dimension: DimensionReport,
    pub echo: EchoReport,
    pub witness: WitnessSection,
    pub words: Option<ExportedWords>,
}

#[derive(Debug)]
pub struct PipelineError {
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.stage, self.error)
    }
}

impl std::error::Error for PipelineError {}

trait Stage<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, PipelineError>;
}

impl<T> Stage<T> for Result<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, PipelineError> {
        self.map_err(|error| PipelineError { stage, error })
    }
}

fn record(stages: &mut Vec<StageRecord>, stage: &'static str, ok: bool, detail: String) {
    let status = if ok { StageStatus::Pass } else { StageStatus::Fail };
    stages.push(StageRecord { stage, status, detail });
}

/// Runs every stage; a stage that cannot run at all is an error, a stage whose checks fail is recorded.
pub fn run_transfer_pipeline(cfg: &PipelineConfig, out: Option<&Path>) -> std::result::Result<PipelineCertificate, PipelineError> {
    cfg.validate().at("config")?;
    let mut stages = Vec::new();
    let s = cfg.set_s().at("sets")?;
    let a = cfg.set_a().at("sets")?;
    let eps = cfg.epsilons().at("config")?;

    let thinning = thin_subset(s.as_ref(), cfg.thin_bound).at("thinning")?;
    let sandwich_ok = thinning.sandwich.from.is_some_and(|f| f <= SANDWICH_FROM) && !thinning.values_have_consecutive;
    let detail = match thinning.sandwich.from {
        Some(f) => format!("{} thin elements up to rank {}; counting sandwich holds on [{f}, {}]", thinning.values.len(), cfg.thin_bound, cfg.thin_bound),
        None => format!("{} thin elements up to rank {}; counting sandwich fails at the bound", thinning.values.len(), cfg.thin_bound),
    };
    record(&mut stages, "thinning", sandwich_ok, detail);

    let opts = PlanOptions { density_horizon: cfg.horizon, ..PlanOptions::default() };
    let (plan, fit_cfg, seed_base) = match (cfg.kind, &a) {
        (PlanKindConfig::Relative, Some(a)) => {
            let fit_cfg = cfg.fit_config().at("fit")?;
            let fit = cfg.fit(&s).at("fit")?;
            (plan_relative(&s, a, &fit, &eps, cfg.k_max, &opts).at("plan")?, Some(fit_cfg), s.clone())
        }
        (PlanKindConfig::Relative, None) => return Err(Error::InvalidInput("relative plans need the subset A".into())).at("config"),
        (PlanKindConfig::Banach, _) => {
            let comp: SetHandle = Arc::new(Complement::new(s.clone()));
            (plan_banach(&s, &eps, cfg.k_max, &opts).at("plan")?, None, comp)
        }
    };
    let seed = plan.seed.clone();
    record(&mut stages, "seed", true, format!("t = {}, L = {}", seed.t, ratio_to_string(&seed.l)));
    let detail = match &plan.truncated {
        Some(why) => format!("{} blocks; stopped early: {why}", plan.blocks.len()),
        None => format!("{} blocks", plan.blocks.len()),
    };
    record(&mut stages, "plan", !plan.blocks.is_empty(), detail);

    let ledger = verify_plan(&plan);
    let detail = format!("{} failures, {} marginal", ledger.failures.len(), ledger.marginal.len());
    record(&mut stages, "verify", ledger.pass, detail);

    let holder = holder_stage(&plan, cfg, &mut stages);

    let dimension = dimension_report(&seed_base, &seed, cfg.depth, cfg.tau_horizon).at("dimension")?;
    let detail = format!("lower tail {:.6}, upper {:.6}, target {:.6}", dimension.lower.tail_min, dimension.upper, dimension.target);
    record(&mut stages, "dimension", dimension.consistent, detail);

    let echo_depth = plan.blocks.first().and_then(|b| b.position_u64()).map_or(cfg.depth, |m| cfg.depth.max(m + ECHO_EXTRA_LEVELS));
    let echo = dimension_echo(&plan, echo_depth).at("echo")?;
    record(&mut stages, "echo", echo.pass, format!("difference {:.6} over {} forced levels", echo.difference, echo.forced_levels));

    let witness = witness_stage(&plan, a.as_ref().unwrap_or(&s), cfg).at("witness")?;
    let located = witness.located.as_ref().and_then(|l| l.found());
    let detail = match (located, &witness.located) {
        (Some(d), _) => format!("values {:?} at indices {:?}", strings(&d.witness.values), strings(&d.indices)),
        (None, Some(Located::NotLocated { diagnostic })) => diagnostic.clone(),
        _ => "no progression found within the bounds".into(),
    };
    record(&mut stages, "witness", located.is_some(), detail);

    let words = match out {
        Some(dir) => Some(export_words(&plan, dir).at("export")?),
        None => None,
    };

    let pass = stages.iter().all(|s| s.status == StageStatus::Pass);
    let cert = PipelineCertificate {
        schema: CERTIFICATE_SCHEMA,
        toolchain: Toolchain { library: cftransfer::VERSION, cli: env!("CARGO_PKG_VERSION") },
        inputs: cfg.clone(),
        fit: fit_cfg,
        tolerances: Tolerances {
            sandwich_from: SANDWICH_FROM,
            guard_band: GUARD,
            dimension: DIMENSION_TOLERANCE,
            echo: ECHO_TOLERANCE,
            holder_margin_floor: 0.0,
        },
        stages,
        pass,
        thinning,
        seed,
        plan,
        ledger,
        holder,
        dimension,
        echo,
        witness,
        words,
    };
    if let Some(dir) = out {
        let text = serde_json::to_string_pretty(&cert).map_err(Error::from).at("export")?;
        std::fs::write(dir.join("certificate.json"), text + "\n").map_err(Error::from).at("export")?;
    }
    Ok(cert)
}

fn strings<T: ToString>(v: &[T]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn holder_stage(plan: &InsertionPlan, cfg: &PipelineConfig, stages: &mut Vec<StageRecord>) -> Vec<HolderOutcome> {
    let mut out = Vec::new();
    for k in 1..=cfg.holder.k_max.min(plan.blocks.len()) {
        match empirical_holder(plan, k, cfg.holder.samples, cfg.holder.seed) {
            Ok(r) => {
                let detail = format!("k = {k}: {} pairs, worst margin {:.6}", r.samples, r.worst_margin);
                record(stages, "holder", r.pass, detail);
                out.push(HolderOutcome::Sampled(r));
            }
            Err(e) => {
                stages.push(StageRecord { stage: "holder", status: StageStatus::Infeasible, detail: format!("k = {k}: {e}") });
                out.push(HolderOutcome::Infeasible { k, reason: e.to_string() });
            }
        }
    }
    out
}

fn witness_stage(plan: &InsertionPlan, target: &SetHandle, cfg: &PipelineConfig) -> Result<WitnessSection> {
    let search = match &cfg.polys {
        Some(p) => {
            let polys: Vec<IntPolynomial> = p.iter().map(|c| IntPolynomial::new(c.clone())).collect::<Result<_>>()?;
            find_poly_progression(target.as_ref(), &polys, cfg.k_bound, cfg.m_bound)?
        }
        None if cfg.length >= 3 => find_ap(target.as_ref(), cfg.length, cfg.k_bound, cfg.m_bound)?,
        None => None,
    };
    let mut search_location = None;
    if let Some(w) = &search {
        match locate_in_digits(plan, w) {
            Ok(Located::Found(d)) => return Ok(WitnessSection { search, search_location, located: Some(Located::Found(d)) }),
            Ok(Located::NotLocated { diagnostic }) => search_location = Some(diagnostic),
            Err(e) => search_location = Some(e.to_string()),
        }
    }
    let located = match find_block_ap(plan, cfg.length, cfg.block_prefix) {
        Some(w) => Some(locate_in_digits(plan, &w)?),
        None => None,
    };
    Ok(WitnessSection { search, search_location, located })
}

fn export_words(plan: &InsertionPlan, dir: &Path) -> Result<ExportedWords> {
    std::fs::create_dir_all(dir)?;
    let last = plan.blocks.iter().filter(|b| b.materialized).filter_map(|b| b.position_u64()).filter(|&m| m < MAX_EXPORT_LEN).max();
    let len = last.map_or(1, |m| m + 1) as usize;
    let y = canonical_seed_word(plan, len)?;
    let x = splice(plan, &y)?;
    std::fs::write(dir.join("seed_word.txt"), y.to_lines())?;
    std::fs::write(dir.join("spliced_word.txt"), x.word.to_lines())?;
    Ok(ExportedWords { seed_len: y.len(), spliced_len: x.word.len(), blocks_inserted: x.inserted })
}
