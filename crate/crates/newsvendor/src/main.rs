//! Command-line front end: batch evaluation of regret curves, thresholds,
//! asymptotics and Monte Carlo runs, emitting CSV or JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use newsvendor::asymptotics::asymptotic_convergence_check;
use newsvendor::bernoulli_regret::saa_curve;
use newsvendor::bounds::{threshold, ThresholdMethod, ThresholdResult};
use newsvendor::minimax::optimal_curve;
use newsvendor::model::{DemandDistribution, ProblemParams};
use newsvendor::simulation::{
    simulate_regret, simulate_threshold, PolicyFamily, SimConfig, SimProtocol,
};
use newsvendor::{Error, Tolerance};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_HORIZON: u8 = 4;

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Horizon { .. } => EXIT_HORIZON,
            Error::Domain(_) | Error::InvalidConfig(_) => EXIT_USAGE,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "newsvendor",
    version,
    about = "Worst-case regret analysis for data-driven newsvendor policies",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact worst-case SAA regret for n = 1..n-max
    SaaCurve(SaaCurveArgs),
    /// Minimax-optimal policy parameters and value for n = 1..n-max
    OptimalCurve(OptimalCurveArgs),
    /// Sample sizes needed to reach target regrets under several methods
    Thresholds(ThresholdsArgs),
    /// Convergence diagnostics toward the large-sample constant
    Asymptotics(AsymptoticsArgs),
    /// Monte Carlo regret estimation or simulated threshold scan
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ParamArgs {
    /// Critical quantile q = b/(b+h), strictly inside (0, 1)
    #[arg(long, conflicts_with_all = ["b", "h"])]
    q: Option<f64>,
    /// Underage cost per unit (requires --h)
    #[arg(long, requires = "h")]
    b: Option<f64>,
    /// Overage cost per unit (requires --b)
    #[arg(long, requires = "b")]
    h: Option<f64>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<ProblemParams, CliError> {
        match (self.q, self.b, self.h) {
            (Some(q), None, None) => ProblemParams::from_q(q).map_err(CliError::from),
            (None, Some(b), Some(h)) => ProblemParams::new(b, h).map_err(CliError::from),
            (None, None, None) => Err(CliError::usage("specify either --q or --b/--h")),
            _ => Err(CliError::usage("--q conflicts with --b/--h")),
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when omitted
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl OutputArgs {
    fn writer(&self) -> Result<Box<dyn Write>, CliError> {
        match &self.output {
            Some(path) => {
                let file = File::create(path).map_err(|e| CliError {
                    code: EXIT_NUMERIC,
                    message: format!("cannot open {}: {e}", path.display()),
                })?;
                Ok(Box::new(BufWriter::new(file)))
            }
            None => Ok(Box::new(BufWriter::new(io::stdout()))),
        }
    }
}

/// 12 significant digits, locale independent.
fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Smallest m with curve[n-1] <= tau for every n in [m, cap].
fn suffix_threshold(curve: &[f64], tau: f64) -> Option<usize> {
    let mut m = None;
    for (idx, v) in curve.iter().enumerate().rev() {
        if *v > tau {
            break;
        }
        m = Some(idx + 1);
    }
    m
}

#[derive(Args)]
struct SaaCurveArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 100)]
    n_max: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OptimalCurveArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 100)]
    n_max: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    ExactSaa,
    LeviUb,
    Optimal,
}

impl From<MethodArg> for ThresholdMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::ExactSaa => ThresholdMethod::ExactSaa,
            MethodArg::LeviUb => ThresholdMethod::LeviUb,
            MethodArg::Optimal => ThresholdMethod::Optimal,
        }
    }
}

#[derive(Args)]
struct ThresholdsArgs {
    /// Critical quantiles, comma separated
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["b", "h"])]
    q: Vec<f64>,
    /// Underage cost per unit (requires --h)
    #[arg(long, requires = "h")]
    b: Option<f64>,
    /// Overage cost per unit (requires --b)
    #[arg(long, requires = "b")]
    h: Option<f64>,
    /// Regret targets, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.20, 0.15, 0.10, 0.05])]
    tau: Vec<f64>,
    /// Methods to tabulate
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [MethodArg::ExactSaa, MethodArg::Optimal])]
    method: Vec<MethodArg>,
    /// Scan horizon certifying the "for all larger n" quantifier
    #[arg(long)]
    n_cap: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AsymptoticsArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Sample sizes to diagnose, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 400, 1600])]
    n_list: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Saa,
    MinimaxCvx,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Full simulation config as a JSON file (see the library SimConfig)
    #[arg(long, conflicts_with_all = ["policy", "dist", "n", "m", "k", "seed"])]
    config: Option<PathBuf>,
    /// Policy family resolved per sample size
    #[arg(long, value_enum)]
    policy: Option<FamilyArg>,
    /// Demand distribution as inline JSON, e.g. '{"family":"exponential","params":{"rate":1.0}}'
    #[arg(long)]
    dist: Option<String>,
    /// In-sample size (fixed-n estimation mode)
    #[arg(long)]
    n: Option<usize>,
    /// Replication count M
    #[arg(long, default_value_t = 100_000)]
    m: usize,
    /// Out-of-sample draws K per replication
    #[arg(long, default_value_t = 1_000)]
    k: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Threshold mode: scan n until the CI upper bound falls below this target
    #[arg(long)]
    tau: Option<f64>,
    /// Scan horizon for threshold mode
    #[arg(long, default_value_t = 500)]
    n_cap: usize,
    #[command(flatten)]
    output: OutputArgs,
}

fn cmd_saa_curve(args: &SaaCurveArgs) -> CliResult {
    let params = args.params.resolve()?;
    let tol = Tolerance::default();
    let curve = saa_curve(args.n_max, &params, &tol)?;
    let mut w = args.output.writer()?;
    match args.output.format {
        Format::Csv => {
            writeln!(w, "n,regret,argmax_mu").map_err(io_err)?;
            for pt in &curve {
                writeln!(w, "{},{},{}", pt.n, num(pt.regret), num(pt.argmax_mu)).map_err(io_err)?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &curve).map_err(json_err)?;
            writeln!(w).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn cmd_optimal_curve(args: &OptimalCurveArgs) -> CliResult {
    let params = args.params.resolve()?;
    let tol = Tolerance::default();
    eprintln!("solving minimax policies up to n = {} ...", args.n_max);
    let curve = optimal_curve(args.n_max, &params, &tol)?;
    let mut w = args.output.writer()?;
    match args.output.format {
        Format::Csv => {
            writeln!(w, "n,k,gamma,opt_regret").map_err(io_err)?;
            for pt in &curve {
                writeln!(
                    w,
                    "{},{},{},{}",
                    pt.n,
                    pt.k,
                    num(pt.gamma),
                    num(pt.opt_regret)
                )
                .map_err(io_err)?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &curve).map_err(json_err)?;
            writeln!(w).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn cmd_thresholds(args: &ThresholdsArgs) -> CliResult {
    let params_list: Vec<ProblemParams> = if args.q.is_empty() {
        match (args.b, args.h) {
            (Some(b), Some(h)) => vec![ProblemParams::new(b, h)?],
            _ => return Err(CliError::usage("specify --q values or --b/--h")),
        }
    } else {
        if args.b.is_some() || args.h.is_some() {
            return Err(CliError::usage("--q conflicts with --b/--h"));
        }
        args.q
            .iter()
            .map(|q| ProblemParams::from_q(*q))
            .collect::<Result<_, _>>()?
    };
    if args.tau.is_empty() {
        return Err(CliError::usage("at least one --tau target is required"));
    }
    let tol = Tolerance::default();

    let mut rows: Vec<(f64, ThresholdResult)> = Vec::new();
    for params in &params_list {
        for method_arg in &args.method {
            let method: ThresholdMethod = (*method_arg).into();
            let n_cap = args.n_cap.unwrap_or(match method {
                ThresholdMethod::LeviUb => 100_000,
                _ => 1_000,
            });
            eprintln!(
                "scanning {method} up to n = {n_cap} at q = {} ...",
                params.q()
            );
            match method {
                ThresholdMethod::LeviUb => {
                    for tau in &args.tau {
                        rows.push((params.q(), threshold(*tau, method, params, n_cap, &tol)?));
                    }
                }
                _ => {
                    // one curve per (q, method), reused across targets; the
                    // horizon defaults to four times the deepest crossing so
                    // the "for all larger n" claim is certified well past it
                    let mut cap = n_cap;
                    let mut curve =
                        newsvendor::bounds::regret_curve(method, params, cap, &tol)?;
                    if args.n_cap.is_none() {
                        let deepest = args
                            .tau
                            .iter()
                            .filter_map(|tau| suffix_threshold(&curve, *tau))
                            .max()
                            .unwrap_or(1);
                        let wanted = newsvendor::bounds::default_n_cap(deepest);
                        if wanted > cap {
                            eprintln!("extending {method} horizon to n = {wanted} ...");
                            cap = wanted;
                            curve =
                                newsvendor::bounds::regret_curve(method, params, cap, &tol)?;
                        }
                    }
                    for tau in &args.tau {
                        rows.push((
                            params.q(),
                            ThresholdResult {
                                tau: *tau,
                                method,
                                n_star: suffix_threshold(&curve, *tau),
                                n_cap: cap,
                                certified_up_to: cap,
                            },
                        ));
                    }
                }
            }
        }
    }

    let mut w = args.output.writer()?;
    match args.output.format {
        Format::Csv => {
            writeln!(w, "q,method,tau,n_star,certified_up_to").map_err(io_err)?;
            for (q, r) in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    num(*q),
                    r.method,
                    num(r.tau),
                    r.cell(),
                    r.certified_up_to
                )
                .map_err(io_err)?;
            }
        }
        Format::Json => {
            let docs: Vec<serde_json::Value> = rows
                .iter()
                .map(|(q, r)| {
                    let mut v = serde_json::to_value(r).expect("threshold serializes");
                    v["q"] = serde_json::json!(q);
                    v
                })
                .collect();
            serde_json::to_writer_pretty(&mut w, &docs).map_err(json_err)?;
            writeln!(w).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn cmd_asymptotics(args: &AsymptoticsArgs) -> CliResult {
    let params = args.params.resolve()?;
    let tol = Tolerance::default();
    let rows = asymptotic_convergence_check(&params, &args.n_list, &tol)?;
    let mut w = args.output.writer()?;
    match args.output.format {
        Format::Csv => {
            writeln!(w, "n,sqrtn_saa,sqrtn_opt,c_star").map_err(io_err)?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    r.n,
                    num(r.sqrtn_saa),
                    num(r.sqrtn_opt),
                    num(r.c_star)
                )
                .map_err(io_err)?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rows).map_err(json_err)?;
            writeln!(w).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult {
    let params = args.params.resolve()?;

    // threshold scan mode
    if let Some(tau) = args.tau {
        let family = match args.policy {
            Some(FamilyArg::Saa) => PolicyFamily::Saa,
            Some(FamilyArg::MinimaxCvx) => PolicyFamily::MinimaxCvx,
            None => return Err(CliError::usage("threshold mode requires --policy")),
        };
        let dist = parse_dist(args.dist.as_deref())?;
        let protocol = SimProtocol {
            replications: args.m,
            out_of_sample: args.k,
            seed: args.seed,
        };
        eprintln!(
            "scanning simulated threshold (M = {}, K = {}) up to n = {} ...",
            args.m, args.k, args.n_cap
        );
        let result = simulate_threshold(family, &dist, &params, tau, &protocol, args.n_cap)?;
        return write_single(&args.output, &result, |w| {
            writeln!(w, "q,method,tau,n_star,certified_up_to").map_err(io_err)?;
            writeln!(
                w,
                "{},{},{},{},{}",
                num(params.q()),
                result.method,
                num(result.tau),
                result.cell(),
                result.certified_up_to
            )
            .map_err(io_err)
        });
    }

    // fixed-n estimation mode
    let cfg: SimConfig = if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError {
            code: EXIT_USAGE,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid simulation config: {e}")))?
    } else {
        let n = args
            .n
            .ok_or_else(|| CliError::usage("estimation mode requires --n"))?;
        let dist = parse_dist(args.dist.as_deref())?;
        let policy = match args.policy {
            Some(FamilyArg::Saa) => newsvendor::bernoulli_regret::saa_policy(n, &params)?,
            Some(FamilyArg::MinimaxCvx) => {
                let sol = newsvendor::minimax::solve_minimax(n, &params, &Tolerance::default())?;
                if sol.degenerate == newsvendor::minimax::Degeneracy::None && n > 1 {
                    newsvendor::minimax::derandomize(&sol, n)?
                } else {
                    sol.policy(n)?
                }
            }
            None => return Err(CliError::usage("estimation mode requires --policy")),
        };
        SimConfig {
            replications: args.m,
            out_of_sample: args.k,
            seed: args.seed,
            policy,
            dist,
            n,
        }
    };
    cfg.validate()?;
    eprintln!(
        "simulating M = {}, K = {}, n = {} ...",
        cfg.replications, cfg.out_of_sample, cfg.n
    );
    let est = simulate_regret(&cfg, &params)?;
    write_single(&args.output, &SimJson::new(&est, &cfg), |w| {
        writeln!(w, "mean_regret,std_error,ci_lo,ci_hi,m,k,seed").map_err(io_err)?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(est.mean_regret),
            num(est.std_error),
            num(est.ci95.0),
            num(est.ci95.1),
            est.m_used,
            est.k_used,
            cfg.seed
        )
        .map_err(io_err)
    })
}

#[derive(serde::Serialize)]
struct SimJson {
    mean: f64,
    std_error: f64,
    ci95: (f64, f64),
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    seed: u64,
}

impl SimJson {
    fn new(est: &newsvendor::SimEstimate, cfg: &SimConfig) -> Self {
        Self {
            mean: est.mean_regret,
            std_error: est.std_error,
            ci95: est.ci95,
            m: est.m_used,
            k: est.k_used,
            seed: cfg.seed,
        }
    }
}

fn parse_dist(raw: Option<&str>) -> Result<DemandDistribution, CliError> {
    let raw = raw.ok_or_else(|| CliError::usage("--dist JSON is required"))?;
    let dist: DemandDistribution = serde_json::from_str(raw)
        .map_err(|e| CliError::usage(format!("invalid --dist JSON: {e}")))?;
    dist.validate()?;
    Ok(dist)
}

fn write_single<T: serde::Serialize>(
    output: &OutputArgs,
    doc: &T,
    csv: impl FnOnce(&mut dyn Write) -> CliResult,
) -> CliResult {
    let mut w = output.writer()?;
    match output.format {
        Format::Csv => csv(&mut w)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, doc).map_err(json_err)?;
            writeln!(w).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn io_err(e: io::Error) -> CliError {
    CliError {
        code: EXIT_NUMERIC,
        message: format!("i/o failure: {e}"),
    }
}

fn json_err(e: serde_json::Error) -> CliError {
    CliError {
        code: EXIT_NUMERIC,
        message: format!("serialization failure: {e}"),
    }
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("NEWSVENDOR_THREADS") {
        if let Ok(threads) = raw.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SaaCurve(args) => cmd_saa_curve(args),
        Command::OptimalCurve(args) => cmd_optimal_curve(args),
        Command::Thresholds(args) => cmd_thresholds(args),
        Command::Asymptotics(args) => cmd_asymptotics(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
