use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cftransfer::cfcore::{convergents, diameter_formula, fundamental_interval, DigitWord};
use cftransfer::density::{banach_density_est, convergence_exponent_est, lower_density_est, relative_density_est, upper_density_est};
use cftransfer::insertion::{canonical_seed_word, eliminate, empirical_holder, plan_banach, plan_relative, splice, verify_plan, InsertionPlan, PlanOptions};
use cftransfer::intsets::{build_set, SetHandle, SetSpec};
use cftransfer::moran::{choose_seed_params, dimension_report};
use cftransfer::progressions::{find_ap, find_graph_ap, find_poly_progression, IntPolynomial};
use cftransfer::serial::{parse_ratio, ratio_to_string};
use cftransfer::thinning::thin_subset;
use cftransfer::Error;
use cftransfer_cli::{exit, run_transfer_pipeline, PipelineConfig, PlanKindConfig, StageStatus};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cftransfer", version, about = "Continued-fraction digit insertion, dimension estimates and progression witnesses")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for reports, certificates and exported words.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed levels; overrides the configuration.
    #[arg(long, global = true)]
    depth: Option<u64>,
    /// Number of blocks; overrides the configuration.
    #[arg(long, global = true)]
    kmax: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true, env = "CFTRANSFER_THREADS")]
    threads: Option<usize>,
    /// Human-readable output instead of compact JSON.
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fundamental interval, convergents and diameter of a digit word.
    Cf {
        /// Comma-separated digits.
        #[arg(long, conflicts_with = "file")]
        digits: Option<String>,
        /// One digit per line.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Elements and counts of an integer set.
    Set {
        #[command(flatten)]
        set: SetArg,
        #[arg(long, default_value_t = 20)]
        limit: u64,
    },
    /// Upper, lower, Banach and relative density estimates and the convergence exponent.
    Density {
        #[command(flatten)]
        set: SetArg,
        /// Reference set for the relative density.
        #[arg(long)]
        relative_to: Option<String>,
        #[arg(long, value_delimiter = ',', default_values_t = [8u64, 16, 32])]
        widths: Vec<u64>,
    },
    /// The thin subset indexed by factorial blocks.
    Thin {
        #[command(flatten)]
        set: SetArg,
        #[arg(long, default_value_t = 10_000)]
        bound: u64,
    },
    /// Seed parameters for the configured `S`.
    Seed,
    /// Dimension report for the seed set of the configured `S`.
    Dim,
    /// Insertion plan and its condition ledger.
    Plan,
    /// Splice the plan's blocks into a seed word and eliminate them again.
    Splice {
        /// Seed word digits; the canonical seed word when absent.
        #[arg(long)]
        digits: Option<String>,
        /// Length of the canonical seed word.
        #[arg(long)]
        len: Option<usize>,
    },
    /// Exact sampling of the Hölder bound for block `k`.
    Holder {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Progression witnesses in a set, or on the graph of `⌊n^α⌋`.
    Prog {
        #[command(flatten)]
        set: SetArg,
        #[arg(long = "len", default_value_t = 3)]
        length: usize,
        #[arg(long, default_value_t = 1000)]
        k_bound: u64,
        #[arg(long, default_value_t = 1000)]
        m_bound: u64,
        /// Polynomials as `;`-separated coefficient lists from `X^0`, e.g. `0,1;0,0,1`.
        #[arg(long)]
        polys: Option<String>,
        /// Search the graph of `⌊n^α⌋` instead of a set.
        #[arg(long)]
        graph_alpha: Option<String>,
        #[arg(long, default_value_t = 1000)]
        n_bound: u64,
    },
    /// The full pipeline, writing a certificate.
    Transfer,
}

#[derive(Args)]
struct SetArg {
    /// Set as JSON `{"kind": ..., "params": ...}` or a name: naturals, primes, p1_primes, evens, squares, square_blocks, ps:P/Q.
    #[arg(long, default_value = "naturals")]
    set: String,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: exit::USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::Json(_) | Error::SetFile { .. } => exit::USAGE,
            _ => exit::VERIFICATION_FAILED,
        };
        Failure { code, message: e.to_string() }
    }
}

type Outcome = Result<(Value, bool), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::USAGE as u8);
        }
    }
    match run(&cli) {
        Ok((report, ok)) => {
            if let Err(f) = emit(&cli.global, &cli.command, &report) {
                eprintln!("error: {}", f.message);
                return ExitCode::from(f.code as u8);
            }
            ExitCode::from(if ok { exit::PASS } else { exit::VERIFICATION_FAILED } as u8)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::from(Error::from(e)))
}

fn emit(g: &Global, command: &Command, report: &Value) -> Result<(), Failure> {
    if let (Some(dir), false) = (&g.out, matches!(command, Command::Transfer)) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::from(Error::from(e)))?;
        let text = serde_json::to_string_pretty(report).map_err(|e| Failure::from(Error::from(e)))?;
        std::fs::write(dir.join("report.json"), text + "\n").map_err(|e| Failure::from(Error::from(e)))?;
    }
    let mut text = String::new();
    if g.pretty {
        pretty(report, 0, &mut text);
    } else {
        text = format!("{report}\n");
    }
    // A closed pipe downstream is not an error.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    Ok(())
}

/// Indented `key: value` listing; long arrays are abbreviated.
fn pretty(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                match x {
                    Value::Object(_) => {
                        let _ = writeln!(out, "{pad}{k}:");
                        pretty(x, indent + 1, out);
                    }
                    Value::Array(a) if a.iter().any(|e| e.is_object()) => {
                        let _ = writeln!(out, "{pad}{k}: [{} entries]", a.len());
                        for (i, e) in a.iter().enumerate().take(8) {
                            let _ = writeln!(out, "{pad}  [{i}]");
                            pretty(e, indent + 2, out);
                        }
                    }
                    _ => {
                        let _ = writeln!(out, "{pad}{k}: {}", short(x));
                    }
                }
            }
        }
        _ => {
            let _ = writeln!(out, "{pad}{}", short(v));
        }
    }
}

fn short(v: &Value) -> String {
    match v {
        Value::Array(a) if a.len() > 12 => {
            let head: Vec<String> = a.iter().take(6).map(|e| e.to_string()).collect();
            format!("[{}, … {} more]", head.join(", "), a.len() - 6)
        }
        Value::String(s) if s.len() > 80 => format!("{}… ({} chars)", &s[..60], s.len()),
        _ => v.to_string(),
    }
}

fn parse_set(text: &str) -> Result<SetSpec, Failure> {
    let t = text.trim();
    if t.starts_with('{') {
        return serde_json::from_str(t).map_err(|e| Failure::usage(format!("bad set description: {e}")));
    }
    Ok(match t {
        "naturals" => SetSpec::Naturals,
        "primes" => SetSpec::Primes,
        "p1_primes" => SetSpec::P1Primes,
        "evens" => SetSpec::evens(),
        "squares" => SetSpec::Squares,
        "square_blocks" => SetSpec::SquareBlocks,
        _ => match t.strip_prefix("ps:") {
            Some(alpha) => SetSpec::ps(alpha),
            None => return Err(Failure::usage(format!("unknown set {t:?}"))),
        },
    })
}

fn build(arg: &SetArg) -> Result<SetHandle, Failure> {
    Ok(build_set(&parse_set(&arg.set)?, arg.horizon)?)
}

fn parse_digits(text: &str) -> Result<DigitWord, Failure> {
    let d: Vec<u64> = text.split(',').map(|x| x.trim().parse().map_err(|_| Failure::usage(format!("not a digit: {x:?}")))).collect::<Result<_, _>>()?;
    Ok(DigitWord::from_u64s(&d)?)
}

fn load_config(g: &Global) -> Result<PipelineConfig, Failure> {
    let path = g.config.as_ref().ok_or_else(|| Failure::usage("this command needs --config"))?;
    let mut cfg = PipelineConfig::load(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if let Some(d) = g.depth {
        cfg.depth = d;
    }
    if let Some(k) = g.kmax {
        cfg.k_max = k;
        if cfg.epsilons.as_ref().is_some_and(|e| e.len() < k) {
            return Err(Failure::usage(format!("--kmax {k} exceeds the configured epsilons")));
        }
    }
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(cfg)
}

fn build_plan(cfg: &PipelineConfig) -> Result<InsertionPlan, Failure> {
    let s = cfg.set_s()?;
    let opts = PlanOptions { density_horizon: cfg.horizon, ..PlanOptions::default() };
    let eps = cfg.epsilons()?;
    Ok(match cfg.kind {
        PlanKindConfig::Relative => {
            let a = cfg.set_a()?.ok_or_else(|| Failure::usage("relative plans need the subset A"))?;
            plan_relative(&s, &a, &cfg.fit(&s)?, &eps, cfg.k_max, &opts)?
        }
        PlanKindConfig::Banach => plan_banach(&s, &eps, cfg.k_max, &opts)?,
    })
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Cf { digits, file } => {
            let word = match (digits, file) {
                (Some(d), _) => parse_digits(d)?,
                (None, Some(f)) => DigitWord::parse_lines(&std::fs::read_to_string(f).map_err(|e| Failure::from(Error::from(e)))?)?,
                (None, None) => return Err(Failure::usage("give --digits or --file")),
            };
            let iv = fundamental_interval(&word)?;
            let formula = diameter_formula(&word)?;
            let ok = formula == iv.diameter() && iv.sandwich.as_ref().is_none_or(|s| s.holds);
            let report = json!({
                "word": word.to_string(),
                "convergents": to_value(&convergents(&word)?)?,
                "interval": to_value(&iv)?,
                "diameter": ratio_to_string(&iv.diameter()),
                "diameter_formula": ratio_to_string(&formula),
            });
            Ok((report, ok))
        }
        Command::Set { set, limit } => {
            let s = build(set)?;
            let hi = s.horizon().unwrap_or(set.horizon).min(set.horizon);
            let first: Vec<u64> = (1..=*limit).map_while(|i| s.nth(i)).filter(|&x| x <= hi).collect();
            Ok((json!({"set": s.describe(), "horizon": hi, "count": s.count(hi), "first": first}), true))
        }
        Command::Density { set, relative_to, widths } => {
            let s = build(set)?;
            let n = set.horizon;
            let mut report = json!({
                "set": s.describe(),
                "upper": to_value(&upper_density_est(s.as_ref(), n)?)?,
                "lower": to_value(&lower_density_est(s.as_ref(), n)?)?,
                "banach": to_value(&banach_density_est(s.as_ref(), n, widths)?)?,
                "convergence_exponent": to_value(&convergence_exponent_est(s.as_ref(), n)?)?,
            });
            if let Some(r) = relative_to {
                let base = build_set(&parse_set(r)?, n)?;
                report["relative"] = to_value(&relative_density_est(s.as_ref(), base.as_ref(), n)?)?;
            }
            Ok((report, true))
        }
        Command::Thin { set, bound } => {
            let s = build(set)?;
            let r = thin_subset(s.as_ref(), *bound)?;
            let ok = r.sandwich.from.is_some_and(|f| f <= cftransfer_cli::pipeline::SANDWICH_FROM);
            Ok((to_value(&r)?, ok))
        }
        Command::Seed => {
            let cfg = load_config(g)?;
            let s = cfg.set_s()?;
            let fit = cfg.fit(&s)?;
            let p = choose_seed_params(&fit, s.as_ref(), PlanOptions::default().seed_levels)?;
            Ok((json!({"fit": to_value(&fit)?, "seed": to_value(&p)?}), true))
        }
        Command::Dim => {
            let cfg = load_config(g)?;
            let s = cfg.set_s()?;
            let p = choose_seed_params(&cfg.fit(&s)?, s.as_ref(), PlanOptions::default().seed_levels)?;
            let r = dimension_report(&s, &p, cfg.depth, cfg.tau_horizon)?;
            let ok = r.consistent;
            Ok((to_value(&r)?, ok))
        }
        Command::Plan => {
            let cfg = load_config(g)?;
            let plan = build_plan(&cfg)?;
            let ledger = verify_plan(&plan);
            let ok = ledger.pass;
            Ok((json!({"plan": to_value(&plan)?, "ledger": to_value(&ledger)?}), ok))
        }
        Command::Splice { digits, len } => {
            let cfg = load_config(g)?;
            let plan = build_plan(&cfg)?;
            let y = match (digits, len) {
                (Some(d), _) => parse_digits(d)?,
                (None, Some(n)) => canonical_seed_word(&plan, *n)?,
                (None, None) => {
                    let m = plan.blocks.first().and_then(|b| b.position_u64()).unwrap_or(1);
                    canonical_seed_word(&plan, m as usize + 1)?
                }
            };
            let x = splice(&plan, &y)?;
            let back = eliminate(&plan, &x.word)?;
            if let Some(dir) = &g.out {
                write_word(dir, "spliced_word.txt", &x.word)?;
            }
            let report = json!({
                "seed_len": y.len(),
                "spliced_len": x.word.len(),
                "blocks_inserted": x.inserted,
                "warning": x.warning,
                "roundtrip": back == y,
            });
            Ok((report, back == y))
        }
        Command::Holder { k, samples, seed } => {
            let cfg = load_config(g)?;
            let plan = build_plan(&cfg)?;
            let r = empirical_holder(&plan, *k, *samples, *seed)?;
            let ok = r.pass;
            Ok((to_value(&r)?, ok))
        }
        Command::Prog { set, length, k_bound, m_bound, polys, graph_alpha, n_bound } => {
            let w = match (graph_alpha, polys) {
                (Some(a), _) => {
                    let r = parse_ratio(a)?;
                    let p = u32::try_from(r.numer()).map_err(|_| Failure::usage("alpha numerator out of range"))?;
                    let q = u32::try_from(r.denom()).map_err(|_| Failure::usage("alpha denominator out of range"))?;
                    find_graph_ap(p, q, *length, *n_bound)?
                }
                (None, Some(p)) => {
                    let s = build(set)?;
                    let polys = parse_polys(p)?;
                    find_poly_progression(s.as_ref(), &polys, *k_bound, *m_bound)?
                }
                (None, None) => {
                    let s = build(set)?;
                    find_ap(s.as_ref(), *length, *k_bound, *m_bound)?
                }
            };
            let found = w.is_some();
            Ok((json!({"witness": to_value(&w)?}), found))
        }
        Command::Transfer => {
            let cfg = load_config(g)?;
            let cert = run_transfer_pipeline(&cfg, g.out.as_deref())
                .map_err(|e| Failure { code: if e.stage == "config" { exit::USAGE } else { exit::VERIFICATION_FAILED }, message: e.to_string() })?;
            for s in cert.stages.iter().filter(|s| s.status != StageStatus::Pass) {
                eprintln!("[{}] {:?}: {}", s.stage, s.status, s.detail);
            }
            let summary = json!({
                "schema": cert.schema,
                "pass": cert.pass,
                "stages": to_value(&cert.stages)?,
                "certificate": g.out.as_ref().map(|d| d.join("certificate.json")),
            });
            Ok((summary, cert.pass))
        }
    }
}

fn parse_polys(text: &str) -> Result<Vec<IntPolynomial>, Failure> {
    text.split(';')
        .map(|p| {
            let c: Vec<i64> =
                p.split(',').map(|x| x.trim().parse().map_err(|_| Failure::usage(format!("not a coefficient: {x:?}")))).collect::<Result<_, _>>()?;
            Ok(IntPolynomial::new(c)?)
        })
        .collect()
}

fn write_word(dir: &Path, name: &str, w: &DigitWord) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::from(Error::from(e)))?;
    std::fs::write(dir.join(name), w.to_lines()).map_err(|e| Failure::from(Error::from(e)))
}
