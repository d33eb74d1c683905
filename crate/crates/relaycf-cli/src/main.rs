//! Command line front end: validate spec files, compute scheme rates,
//! report decodable relay sets, search compression distributions, and run
//! the verification suites.
//!
//! Exit codes: 0 on success or all checks passing, 1 on a domain failure
//! (invalid spec, scheme and mode mismatch, infeasible search, suite
//! failures), 2 when a file cannot be read or parsed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use relaycf::channel::{ChannelSpec, Mode, SpecError};
use relaycf::decodable::{classify_relays, largest_feasible_set, FeasibilityKind};
use relaycf::optimizer::{enumerate_deterministic, optimize, FreeVariables, SearchConfig};
use relaycf::pmf::JointPmf;
use relaycf::schemes::{
    rate_cbj, rate_cbs, rate_cfj, rate_cfs, rate_ruj, RateValue, SchemeId, SchemeReport,
};
use relaycf::setfuncs::EvalContext;
use relaycf::subsets::{SubsetMask, MAX_RELAYS};
use relaycf::verify::{
    run_lemma_suite, run_optimum_suite, run_theorem_suite, InstanceGenerator, OptimumConfig,
    SuiteReport,
};

#[derive(Parser)]
#[command(
    name = "relaycf",
    version,
    about = "Rates, decodable sets, and compression search for relay networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a channel spec file and report any shape or normalization problems
    Validate { path: PathBuf },
    /// Compute scheme rates with argmin subsets and diagnostics
    Rates {
        path: PathBuf,
        /// Scheme to evaluate, or "all" for every scheme the mode supports
        #[arg(long, default_value = "all")]
        scheme: String,
        /// Target relay set for the united joint decoder: comma-separated
        /// 1-based indices, an empty string for the empty set
        #[arg(long)]
        m: Option<String>,
        /// Emit the full reports as JSON instead of a table
        #[arg(long)]
        json: bool,
    },
    /// Report the largest decodable relay sets and per-relay verdicts
    Sets {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Search compression (and optionally input) distributions for the best rate
    Optimize {
        path: PathBuf,
        /// Scheme whose rate the search maximizes
        #[arg(long)]
        scheme: String,
        /// Random restarts beyond the ascent from the template itself
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        /// Coordinate sweeps per start
        #[arg(long, default_value_t = 40)]
        iters: usize,
        /// Seed for the restart draws
        #[arg(long)]
        seed: u64,
        /// Which rows the search may change
        #[arg(long, value_enum, default_value_t = FreeArg::Compressions)]
        free: FreeArg,
        /// Try every deterministic compression map instead of searching
        #[arg(long)]
        enumerate_deterministic: bool,
        /// Target relay set when the scheme is ruj
        #[arg(long)]
        m: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Run a self-verification suite on randomized instances
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        /// Random instances per mode
        #[arg(long, default_value_t = 200)]
        instances: usize,
        /// Seed for instance generation and searches
        #[arg(long)]
        seed: u64,
        /// Number of relays in generated instances
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Alphabet sizes as x,y,yi,yhat
        #[arg(long, default_value = "2,2,2,2")]
        alphabets: String,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum FreeArg {
    Compressions,
    All,
}

#[derive(Copy, Clone, ValueEnum)]
enum SuiteArg {
    Lemmas,
    Theorems,
    Optima,
}

enum Failure {
    Domain(String),
    Io(String),
}

impl From<SpecError> for Failure {
    fn from(err: SpecError) -> Failure {
        match err {
            SpecError::Invalid { .. } => Failure::Domain(err.to_string()),
            SpecError::Parse(_) | SpecError::Io { .. } => Failure::Io(err.to_string()),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            if !msg.is_empty() {
                eprintln!("{msg}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { path } => cmd_validate(&path),
        Command::Rates { path, scheme, m, json } => cmd_rates(&path, &scheme, m.as_deref(), json),
        Command::Sets { path, json } => cmd_sets(&path, json),
        Command::Optimize {
            path,
            scheme,
            restarts,
            iters,
            seed,
            free,
            enumerate_deterministic,
            m,
            json,
        } => cmd_optimize(
            &path,
            &scheme,
            restarts,
            iters,
            seed,
            free,
            enumerate_deterministic,
            m.as_deref(),
            json,
        ),
        Command::Verify { suite, instances, seed, n, alphabets, json } => {
            cmd_verify(suite, instances, seed, n, &alphabets, json)
        }
    }
}

fn load_spec(path: &Path) -> Result<ChannelSpec, Failure> {
    Ok(ChannelSpec::from_path(path)?)
}

fn parse_subset(text: &str, n: usize) -> Result<SubsetMask, Failure> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(SubsetMask::EMPTY);
    }
    let mut indices = Vec::new();
    for part in trimmed.split(',') {
        let index: usize = part
            .trim()
            .parse()
            .map_err(|_| Failure::Domain(format!("could not parse relay index {part:?}")))?;
        indices.push(index);
    }
    SubsetMask::from_indices(&indices, n).map_err(Failure::Domain)
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Digital => "digital",
        Mode::Full => "full",
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    let spec = load_spec(path)?;
    println!(
        "ok: {} spec, {} relay{}, |X|={} |Y|={}",
        mode_name(spec.mode),
        spec.n,
        if spec.n == 1 { "" } else { "s" },
        spec.alphabet_x,
        spec.alphabet_y
    );
    Ok(())
}

fn one_report(
    ctx: &EvalContext,
    scheme: SchemeId,
    target: SubsetMask,
) -> Result<SchemeReport, Failure> {
    let report = match scheme {
        SchemeId::Cfs => Ok(rate_cfs(ctx)),
        SchemeId::Cfj => Ok(rate_cfj(ctx)),
        SchemeId::Ruj => rate_ruj(ctx, target),
        SchemeId::Cbs => rate_cbs(ctx),
        SchemeId::Cbj => rate_cbj(ctx),
    };
    report.map_err(|err| Failure::Domain(err.to_string()))
}

fn cmd_rates(path: &Path, scheme: &str, m: Option<&str>, json: bool) -> Result<(), Failure> {
    let spec = load_spec(path)?;
    let joint = JointPmf::from_spec(&spec)?;
    let ctx = EvalContext::for_spec(&spec, &joint);
    let target = match m {
        Some(text) => parse_subset(text, spec.n)?,
        None => ctx.full_set(),
    };

    let reports = if scheme == "all" {
        let mut out = vec![rate_cfs(&ctx), rate_cfj(&ctx)];
        if spec.mode == Mode::Full {
            for result in [rate_ruj(&ctx, target), rate_cbs(&ctx), rate_cbj(&ctx)] {
                out.push(result.expect("full mode supports every scheme"));
            }
        }
        out
    } else {
        let id: SchemeId = scheme.parse().map_err(Failure::Domain)?;
        vec![one_report(&ctx, id, target)?]
    };

    if json {
        print_json(&reports);
        return Ok(());
    }
    println!("{:<8}{:>14}  {:<14}notes", "scheme", "rate", "argmin");
    for report in &reports {
        let rate = match report.rate {
            RateValue::Bits(bits) => format!("{bits:.6}"),
            RateValue::Infeasible => "infeasible".to_string(),
        };
        let argmin = if report.argmin_subsets.is_empty() {
            "-".to_string()
        } else {
            report
                .argmin_subsets
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut notes = Vec::new();
        if let Some(t) = report.diagnostics.target_set {
            notes.push(format!("target {t}"));
        }
        if let (Some(d), Some(d_prime)) = (report.d_j, report.d_j_prime) {
            notes.push(format!("decodable {d}, marginally {d_prime}"));
        }
        if report.diagnostics.clamped {
            notes.push("clamped to zero".to_string());
        }
        println!("{:<8}{rate:>14}  {argmin:<14}{}", report.scheme, notes.join("; "));
    }
    Ok(())
}

fn cmd_sets(path: &Path, json: bool) -> Result<(), Failure> {
    let spec = load_spec(path)?;
    let joint = JointPmf::from_spec(&spec)?;
    let ctx = EvalContext::for_spec(&spec, &joint);
    match spec.mode {
        Mode::Digital => {
            let d = largest_feasible_set(&ctx, FeasibilityKind::INonStrict)
                .map_err(|err| Failure::Domain(err.to_string()))?;
            if json {
                print_json(&serde_json::json!({ "mode": "digital", "d": d }));
            } else {
                println!("largest set with nonnegative bin-rate surplus: {d}");
            }
        }
        Mode::Full => {
            let report = classify_relays(&ctx).map_err(|err| Failure::Domain(err.to_string()))?;
            if json {
                print_json(&report);
            } else {
                println!("strictly decodable set:   {}", report.d_strict);
                println!("marginally decodable set: {}", report.d_nonstrict);
                for verdict in &report.relays {
                    let class = format!("{:?}", verdict.class);
                    match &verdict.witness {
                        Some(w) => println!(
                            "  relay {}: {class} (worst subset {} at {:+.6})",
                            verdict.relay, w.subset, w.value
                        ),
                        None => println!("  relay {}: {class}", verdict.relay),
                    }
                }
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_optimize(
    path: &Path,
    scheme: &str,
    restarts: usize,
    iters: usize,
    seed: u64,
    free: FreeArg,
    enumerate: bool,
    m: Option<&str>,
    json: bool,
) -> Result<(), Failure> {
    let spec = load_spec(path)?;
    let id: SchemeId = scheme.parse().map_err(Failure::Domain)?;
    let target = match m {
        Some(text) => Some(parse_subset(text, spec.n)?),
        None => None,
    };

    if enumerate {
        let result = enumerate_deterministic(&spec, id, target)
            .map_err(|err| Failure::Domain(err.to_string()))?;
        let feasible = !matches!(result.report.rate, RateValue::Infeasible);
        if json {
            print_json(&result);
        } else {
            println!(
                "scheme {id}: best over {} deterministic maps scores {:.6} ({})",
                result.maps_tried,
                result.best_score,
                if feasible { "feasible" } else { "infeasible" }
            );
        }
        if !feasible {
            return Err(Failure::Domain(String::new()));
        }
        return Ok(());
    }

    let cfg = SearchConfig {
        target,
        free: match free {
            FreeArg::Compressions => FreeVariables::Compressions,
            FreeArg::All => FreeVariables::All,
        },
        restarts,
        sweeps: iters,
        seed,
        ..SearchConfig::new(id)
    };
    let result = optimize(&spec, &cfg).map_err(|err| Failure::Domain(err.to_string()))?;
    if json {
        print_json(&result);
    } else {
        println!(
            "scheme {id}: best score {:.6} ({}) after {} evaluations over {} starts",
            result.best_score,
            if result.feasible { "feasible" } else { "infeasible" },
            result.evaluations,
            result.trace.len()
        );
    }
    if !result.feasible {
        return Err(Failure::Domain(String::new()));
    }
    Ok(())
}

fn parse_alphabets(text: &str) -> Result<[usize; 4], Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Failure::Domain(format!(
            "expected four comma-separated alphabet sizes (x,y,yi,yhat), got {text:?}"
        )));
    }
    let mut sizes = [0usize; 4];
    for (slot, part) in sizes.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .ok()
            .filter(|&v| v >= 1)
            .ok_or_else(|| Failure::Domain(format!("alphabet size {part:?} is not a positive integer")))?;
    }
    Ok(sizes)
}

fn cmd_verify(
    suite: SuiteArg,
    instances: usize,
    seed: u64,
    n: usize,
    alphabets: &str,
    json: bool,
) -> Result<(), Failure> {
    if n == 0 || n > MAX_RELAYS {
        return Err(Failure::Domain(format!(
            "relay count {n} is outside the supported range 1..={MAX_RELAYS}"
        )));
    }
    let [ax, ay, ayi, ayhat] = parse_alphabets(alphabets)?;
    let generator = |mode| InstanceGenerator {
        mode,
        n,
        alphabet_x: ax,
        alphabet_y: ay,
        alphabet_yi: ayi,
        alphabet_yhat: ayhat,
        seed,
        degenerate_ratio: 0.1,
    };

    let reports: Vec<SuiteReport> = match suite {
        SuiteArg::Lemmas => vec![
            run_lemma_suite(&generator(Mode::Digital), instances),
            run_lemma_suite(&generator(Mode::Full), instances),
        ],
        SuiteArg::Theorems => vec![
            run_theorem_suite(&generator(Mode::Digital), instances),
            run_theorem_suite(&generator(Mode::Full), instances),
        ],
        SuiteArg::Optima => {
            vec![run_optimum_suite(&OptimumConfig { seed, ..OptimumConfig::default() })]
        }
    };

    if json {
        print_json(&reports);
    } else {
        for report in &reports {
            let scope = report
                .generator
                .as_ref()
                .map(|g| format!(" [{} n={}]", mode_name(g.mode), g.n))
                .unwrap_or_default();
            println!("{}{scope}", report.summary_line());
            for check in &report.checks {
                println!(
                    "  {:<32} {:>7} evaluations, worst residual {:+.3e}",
                    check.check, check.evaluations, check.worst_residual
                );
            }
            for tie in &report.degenerates {
                println!("  tie  {}: instance {} {}", tie.check, tie.instance, tie.detail);
            }
            for fail in &report.failures {
                println!(
                    "  FAIL {}: instance {} residual {:+.3e}\n       {}",
                    fail.check, fail.instance, fail.residual, fail.detail
                );
            }
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(Failure::Domain(format!(
            "{failed} of {} suite run{} failed",
            reports.len(),
            if reports.len() == 1 { "" } else { "s" }
        )));
    }
    Ok(())
}
