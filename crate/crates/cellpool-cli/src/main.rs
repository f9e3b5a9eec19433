//! Command-line front door for the cellpool library.
//!
//! Four subcommands: `analytic` evaluates the closed-form throughput of one
//! sharing strategy, `sweep` tabulates strategies over a grid of operator
//! ratios, `verify` cross-checks the quadrature engine against Monte Carlo
//! sampling, and `simulate` runs the frame-level OFDMA simulator.
//!
//! Exit codes: 0 success, 2 usage error, 3 invalid input (flags, config
//! files, layouts, I/O), 4 numerical failure (quadrature did not converge),
//! 5 verification checks failed.

mod output;

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cellpool::analytic::{self, SweepAxis};
use cellpool::simulator::{self, BsSource, ThroughputReport};
use cellpool::{ingest, mc, stats, units};
use cellpool::{Error, OperatorParams, QuadratureConfig, RadioParams, ScenarioConfig, Strategy};

use output::{input_digest, num, Format, Provenance, Report};

#[derive(Parser)]
#[command(
    name = "cellpool",
    version,
    about = "Capacity gains from pooling base stations and spectrum between two cellular operators"
)]
struct Cli {
    /// Cap the worker thread pool (default: one thread per core)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<NonZeroUsize>,

    /// Stdout encoding: human table, CSV, or JSON
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form per-operator throughput under one sharing strategy
    Analytic(AnalyticArgs),
    /// Strategy tables over a grid of operator-2 : operator-1 ratios
    Sweep(SweepArgs),
    /// Cross-check the quadrature engine against Monte Carlo sampling
    Verify(VerifyArgs),
    /// Frame-level OFDMA simulation of a concrete deployment
    Simulate(SimulateArgs),
}

/// Network model flags shared by the analytic subcommands. Defaults are the
/// reference parameterization: two identical operators with 16 stations per
/// 400 km^2 and 100 users per cell.
#[derive(Args, Serialize)]
struct ModelArgs {
    /// Operator 1 station density, stations per square meter
    #[arg(long, default_value_t = 4e-8)]
    lambda1: f64,

    /// Operator 2 station density, stations per square meter
    #[arg(long, default_value_t = 4e-8)]
    lambda2: f64,

    /// Operator 1 licensed bandwidth (bare Hz or e.g. "10 MHz")
    #[arg(long, default_value = "10 MHz", value_parser = bandwidth_arg)]
    w1: f64,

    /// Operator 2 licensed bandwidth (bare Hz or e.g. "10 MHz")
    #[arg(long, default_value = "10 MHz", value_parser = bandwidth_arg)]
    w2: f64,

    /// Operator 1 subscriber density, users per square meter
    #[arg(long, default_value_t = 4e-6)]
    eta1: f64,

    /// Operator 2 subscriber density, users per square meter
    #[arg(long, default_value_t = 4e-6)]
    eta2: f64,

    /// Per-station transmit power (bare W or e.g. "46 dBm")
    #[arg(long, default_value = "46 dBm", value_parser = power_arg)]
    tx_power: f64,

    /// Noise power spectral density (bare W/Hz or e.g. "-174 dBm/Hz")
    #[arg(
        long,
        default_value = "-174 dBm/Hz",
        value_parser = noise_density_arg,
        allow_hyphen_values = true
    )]
    noise_density: f64,

    /// Path-loss exponent
    #[arg(long, default_value_t = 3.76)]
    alpha: f64,

    /// Relative tolerance for the adaptive quadrature
    #[arg(long, default_value_t = 1e-7)]
    rel_tol: f64,
}

impl ModelArgs {
    fn ops(&self) -> (OperatorParams, OperatorParams) {
        (
            OperatorParams {
                bs_density: self.lambda1,
                bandwidth: self.w1,
                user_density: self.eta1,
            },
            OperatorParams {
                bs_density: self.lambda2,
                bandwidth: self.w2,
                user_density: self.eta2,
            },
        )
    }

    fn radio(&self) -> RadioParams {
        RadioParams {
            tx_power: self.tx_power,
            noise_density: self.noise_density,
            path_loss_exponent: self.alpha,
        }
    }

    fn quad(&self) -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: self.rel_tol,
            ..QuadratureConfig::default()
        }
    }
}

#[derive(Args, Serialize)]
struct AnalyticArgs {
    /// Sharing strategy: nocoop | flexroam | merger
    #[arg(long, default_value = "nocoop", value_parser = strategy_arg)]
    strategy: Strategy,

    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    /// Operator-2 parameter the ratios scale: bs-density | user-density | bandwidth
    #[arg(long, default_value = "bs-density", value_parser = axis_arg)]
    axis: SweepAxis,

    /// Comma-separated grid of operator-2 : operator-1 ratios
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.2,0.4,0.6,0.8,1,1.2,1.4,1.6,1.8,2"
    )]
    grid: Vec<f64>,

    /// Comma-separated strategies to tabulate
    #[arg(
        long,
        value_delimiter = ',',
        value_parser = strategy_arg,
        default_value = "nocoop,flexroam,merger"
    )]
    strategies: Vec<Strategy>,

    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Comma-separated checks to run: rate, association, distance
    #[arg(long, value_delimiter = ',', default_value = "rate,association,distance")]
    checks: Vec<String>,

    /// Monte Carlo samples per check
    #[arg(long, default_value_t = 200_000)]
    samples: u64,

    /// Base RNG seed
    #[arg(long, env = "CELLPOOL_SEED", default_value_t = 1729)]
    seed: u64,

    /// Offset added to the path-loss exponent inside the quadrature engine
    /// only; the sampler keeps the configured value. Exists so tests can
    /// prove the cross-check actually bites.
    #[arg(long, hide = true, default_value_t = 0.0, allow_negative_numbers = true)]
    corrupt_alpha: f64,

    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config (TOML); omitted = built-in reference scenario
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the configured strategy
    #[arg(long, value_parser = strategy_arg, conflicts_with = "compare")]
    strategy: Option<Strategy>,

    /// Run all three strategies and report gains relative to nocoop
    #[arg(long)]
    compare: bool,

    /// Override frames per run
    #[arg(long)]
    frames: Option<u32>,

    /// Override the number of independent runs
    #[arg(long)]
    runs: Option<u32>,

    /// Override mean users per cell (applies to operators that have users)
    #[arg(long)]
    users_per_cell: Option<f64>,

    /// Override the base RNG seed
    #[arg(long, env = "CELLPOOL_SEED")]
    seed: Option<u64>,

    /// Write the full report as JSON
    #[arg(long, value_name = "FILE")]
    summary_out: Option<PathBuf>,

    /// Write one CSV row per (user, run)
    #[arg(long, value_name = "FILE")]
    per_user_out: Option<PathBuf>,

    /// Write the pooled throughput CDF as CSV
    #[arg(long, value_name = "FILE")]
    cdf_out: Option<PathBuf>,
}

fn strategy_arg(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn axis_arg(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn bandwidth_arg(s: &str) -> Result<f64, String> {
    units::parse_bandwidth("bandwidth", s).map_err(|e| e.to_string())
}

fn power_arg(s: &str) -> Result<f64, String> {
    units::parse_power("tx_power", s).map_err(|e| e.to_string())
}

fn noise_density_arg(s: &str) -> Result<f64, String> {
    units::parse_noise_density("noise_density", s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Clap exits 0 for --help/--version and 2 for usage errors.
        Err(err) => err.exit(),
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.get())
            .build_global();
    }
    let result = match cli.command {
        Command::Analytic(args) => cmd_analytic(args, cli.format),
        Command::Sweep(args) => cmd_sweep(args, cli.format),
        Command::Verify(args) => cmd_verify(args, cli.format),
        Command::Simulate(args) => cmd_simulate(args, cli.format),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        // A consumer closing the pipe early (e.g. `cellpool sweep | head`)
        // is not an error worth reporting.
        Err(Error::Io(io)) if io.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(failure_code(&err))
        }
    }
}

fn failure_code(err: &Error) -> u8 {
    match err {
        Error::QuadratureDidNotConverge { .. } => 4,
        _ => 3,
    }
}

fn cmd_analytic(args: AnalyticArgs, format: Format) -> cellpool::Result<u8> {
    let provenance = Provenance::new("analytic", input_digest(&args), None);
    let (op1, op2) = args.model.ops();
    let radio = args.model.radio();
    let quad = args.model.quad();
    let mut rows = Vec::new();
    for operator in [1u8, 2u8] {
        let r = analytic::throughput(args.strategy, &op1, &op2, &radio, &quad, operator)?;
        rows.push(vec![
            args.strategy.name().to_string(),
            operator.to_string(),
            num(r.throughput_bps / 1000.0),
            num(r.spectral_rate_nats),
            num(r.error_estimate),
        ]);
    }
    let report = Report {
        provenance,
        columns: vec![
            "strategy",
            "operator",
            "throughput_kbps",
            "spectral_rate_nats",
            "quad_error_nats",
        ],
        rows,
    };
    report.print(format)?;
    Ok(0)
}

fn cmd_sweep(args: SweepArgs, format: Format) -> cellpool::Result<u8> {
    let provenance = Provenance::new("sweep", input_digest(&args), None);
    let (op1, op2) = args.model.ops();
    let radio = args.model.radio();
    let quad = args.model.quad();
    let cells = analytic::sweep(
        &args.strategies,
        &op1,
        &op2,
        &radio,
        &quad,
        args.axis,
        &args.grid,
    );
    let mut n_failed = 0usize;
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|cell| {
            let head = vec![
                num(cell.ratio),
                cell.strategy.name().to_string(),
                cell.operator.to_string(),
            ];
            match &cell.result {
                Ok(r) => [
                    head,
                    vec![
                        num(r.throughput_bps / 1000.0),
                        num(r.spectral_rate_nats),
                        num(r.error_estimate),
                        "ok".to_string(),
                    ],
                ]
                .concat(),
                Err(message) => {
                    n_failed += 1;
                    [
                        head,
                        vec![
                            String::new(),
                            String::new(),
                            String::new(),
                            message.clone(),
                        ],
                    ]
                    .concat()
                }
            }
        })
        .collect();
    let report = Report {
        provenance,
        columns: vec![
            "ratio",
            "strategy",
            "operator",
            "throughput_kbps",
            "spectral_rate_nats",
            "quad_error_nats",
            "status",
        ],
        rows,
    };
    report.print(format)?;
    if !cells.is_empty() && n_failed == cells.len() {
        return Err(Error::InvalidParameter {
            name: "sweep",
            message: "every grid point failed; see the status column".to_string(),
        });
    }
    if n_failed > 0 {
        eprintln!("warning: {n_failed} of {} sweep cells failed", cells.len());
    }
    Ok(0)
}

/// One verification check: `expected` is the analytic reference, `observed`
/// the sampled estimate, `margin` the acceptance half-width.
struct CheckRow {
    check: &'static str,
    case: String,
    expected: String,
    observed: String,
    margin: String,
    pass: bool,
}

fn cmd_verify(args: VerifyArgs, format: Format) -> cellpool::Result<u8> {
    for check in &args.checks {
        if !matches!(check.as_str(), "rate" | "association" | "distance") {
            return Err(Error::InvalidParameter {
                name: "checks",
                message: format!("unknown check `{check}` (rate|association|distance)"),
            });
        }
    }
    let provenance = Provenance::new("verify", input_digest(&args), Some(args.seed));
    let (op1, _) = args.model.ops();
    let radio = args.model.radio();
    // The fault-injection offset corrupts the quadrature side only, so a
    // nonzero value must be caught by the Monte Carlo cross-check.
    let mut radio_quad = radio;
    radio_quad.path_loss_exponent += args.corrupt_alpha;
    let quad = args.model.quad();

    let mut checks = Vec::new();
    if args.checks.iter().any(|c| c == "rate") {
        run_rate_checks(&args, &op1, &radio, &radio_quad, &quad, &mut checks)?;
    }
    if args.checks.iter().any(|c| c == "association") {
        let p = args.model.lambda1 / (args.model.lambda1 + args.model.lambda2);
        let est = mc::empirical_association_prob(
            args.model.lambda1,
            args.model.lambda2,
            args.samples,
            args.seed.wrapping_add(100),
        )?;
        let margin = 3.0 * est.half_width_99 / stats::Z_99;
        checks.push(CheckRow {
            check: "association",
            case: format!(
                "P(nearest is op1), lambda2/lambda1={}",
                num(args.model.lambda2 / args.model.lambda1)
            ),
            expected: num(p),
            observed: num(est.mean),
            margin: num(margin),
            pass: (est.mean - p).abs() <= margin,
        });
    }
    if args.checks.iter().any(|c| c == "distance") {
        let lambda_total = args.model.lambda1 + args.model.lambda2;
        let distances = mc::empirical_nearest_distance_cdf(
            args.model.lambda1,
            args.model.lambda2,
            args.samples,
            args.seed.wrapping_add(101),
        )?;
        let d = stats::ks_statistic(&distances, |r| {
            1.0 - (-std::f64::consts::PI * lambda_total * r * r).exp()
        });
        let p_value = stats::ks_pvalue(d, distances.len());
        checks.push(CheckRow {
            check: "distance",
            case: "nearest-station distance vs Rayleigh law, KS test".to_string(),
            expected: "p > 0.01".to_string(),
            observed: num(p_value),
            margin: num(d),
            pass: p_value > 0.01,
        });
    }

    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}: {}", c.check, c.case))
        .collect();
    let rows = checks
        .into_iter()
        .map(|c| {
            vec![
                c.check.to_string(),
                c.case,
                c.expected,
                c.observed,
                c.margin,
                if c.pass { "pass" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    let report = Report {
        provenance,
        columns: vec!["check", "case", "expected", "observed", "margin", "verdict"],
        rows,
    };
    report.print(format)?;
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("verify: {} check(s) failed:", failed.len());
        for case in &failed {
            eprintln!("  {case}");
        }
        Ok(5)
    }
}

/// Quadrature vs Monte Carlo on a grid of single- and two-operator points:
/// station-density ratio {0.2, 1, 2} x bandwidth ratio {0.5, 1}, for both
/// the isolated-operator rate and the roaming mixture. Pass = the quadrature
/// value lies inside the sampler's 99% confidence interval.
fn run_rate_checks(
    args: &VerifyArgs,
    op1: &OperatorParams,
    radio: &RadioParams,
    radio_quad: &RadioParams,
    quad: &QuadratureConfig,
    checks: &mut Vec<CheckRow>,
) -> cellpool::Result<()> {
    let mut point = 0u64;
    for lambda_ratio in [0.2, 1.0, 2.0] {
        for w_ratio in [0.5, 1.0] {
            let scaled = OperatorParams {
                bs_density: lambda_ratio * op1.bs_density,
                bandwidth: w_ratio * op1.bandwidth,
                user_density: lambda_ratio * op1.user_density,
            };
            for strategy in [Strategy::NoCoop, Strategy::FlexRoam] {
                point += 1;
                let seed = args.seed.wrapping_add(point);
                let (reference, estimate) = match strategy {
                    // The single-operator point exercises the scaled
                    // parameters directly.
                    Strategy::NoCoop => (
                        analytic::rate_nocoop(
                            scaled.bandwidth,
                            scaled.bs_density,
                            radio_quad,
                            quad,
                        )?,
                        mc::estimate_rate(strategy, &scaled, &scaled, radio, args.samples, seed)?,
                    ),
                    _ => (
                        analytic::rate_flexroam(op1, &scaled, radio_quad, quad)?,
                        mc::estimate_rate(strategy, op1, &scaled, radio, args.samples, seed)?,
                    ),
                };
                checks.push(CheckRow {
                    check: "rate",
                    case: format!(
                        "{} lambda-ratio={} w-ratio={}",
                        strategy.name(),
                        num(lambda_ratio),
                        num(w_ratio)
                    ),
                    expected: num(reference.spectral_rate_nats),
                    observed: num(estimate.mean),
                    margin: num(estimate.half_width_99),
                    pass: estimate.covers(reference.spectral_rate_nats),
                });
            }
        }
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, format: Format) -> cellpool::Result<u8> {
    let mut cfg = match &args.config {
        Some(path) => ingest::load_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(strategy) = args.strategy {
        cfg.strategy = strategy;
    }
    if let Some(frames) = args.frames {
        cfg.frames = frames;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(upc) = args.users_per_cell {
        // An operator configured without users (degenerate single-operator
        // scenario) stays that way; the override retunes the active ones.
        if cfg.operator1.users_per_cell > 0.0 {
            cfg.operator1.users_per_cell = upc;
        }
        if cfg.operator2.users_per_cell > 0.0 {
            cfg.operator2.users_per_cell = upc;
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    warn_outside_region(&cfg);

    let provenance = Provenance::new("simulate", cfg.digest(), Some(cfg.seed));
    if args.compare {
        let comparison = simulator::compare_strategies(&cfg)?;
        for report in [
            &comparison.nocoop,
            &comparison.flexroam,
            &comparison.merger,
        ] {
            eprintln!(
                "# {}: {:.1}s wall",
                report.strategy.name(),
                report.wall_secs
            );
        }
        let rows = comparison
            .rows
            .iter()
            .map(|row| {
                vec![
                    row.strategy.name().to_string(),
                    row.operator.map_or_else(|| "all".to_string(), |o| o.to_string()),
                    num(row.mean_bps / 1000.0),
                    row.gain_vs_nocoop_pct.map_or_else(String::new, num),
                ]
            })
            .collect();
        let report = Report {
            provenance: provenance.clone(),
            columns: vec![
                "strategy",
                "operator",
                "mean_throughput_kbps",
                "gain_vs_nocoop_pct",
            ],
            rows,
        };
        report.print(format)?;
        let reports = [
            &comparison.nocoop,
            &comparison.flexroam,
            &comparison.merger,
        ];
        write_outputs(&args, &provenance, &reports, &comparison)?;
    } else {
        let result = simulator::run_scenario(&cfg)?;
        eprintln!("# {}: {:.1}s wall", result.strategy.name(), result.wall_secs);
        let mut rows = Vec::new();
        for operator in [1usize, 2usize] {
            if let Some(mean) = result.op_mean_bps[operator - 1] {
                let users = result
                    .per_user
                    .iter()
                    .filter(|u| u.operator == operator as u8)
                    .count();
                rows.push(vec![
                    result.strategy.name().to_string(),
                    operator.to_string(),
                    users.to_string(),
                    num(mean / 1000.0),
                ]);
            }
        }
        rows.push(vec![
            result.strategy.name().to_string(),
            "all".to_string(),
            result.per_user.len().to_string(),
            num(result.overall_mean_bps / 1000.0),
        ]);
        let report = Report {
            provenance: provenance.clone(),
            columns: vec!["strategy", "operator", "users", "mean_throughput_kbps"],
            rows,
        };
        report.print(format)?;
        write_outputs(&args, &provenance, &[&result], &result)?;
    }
    Ok(0)
}

/// Stations outside the configured region still participate (the simulator
/// does not clip), but they usually indicate a units or projection mistake,
/// so say something.
fn warn_outside_region(cfg: &ScenarioConfig) {
    let BsSource::File { path } = &cfg.bs_source else {
        return;
    };
    let Ok(stations) = ingest::load_bs_csv(path) else {
        return; // the simulator reports load errors properly
    };
    let outside = stations
        .iter()
        .filter(|bs| {
            bs.x < 0.0 || bs.x > cfg.region.width || bs.y < 0.0 || bs.y > cfg.region.height
        })
        .count();
    if outside > 0 {
        eprintln!(
            "warning: {outside} of {} stations lie outside the {} x {} m region",
            stations.len(),
            num(cfg.region.width),
            num(cfg.region.height)
        );
    }
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    provenance: &'a Provenance,
    result: &'a T,
}

/// Write the requested output files, all or nothing: if any write fails,
/// files already produced by this invocation are removed so a consumer never
/// sees a partial set.
fn write_outputs<T: Serialize>(
    args: &SimulateArgs,
    provenance: &Provenance,
    reports: &[&ThroughputReport],
    summary: &T,
) -> cellpool::Result<()> {
    let mut files: Vec<(&Path, Vec<u8>)> = Vec::new();
    if let Some(path) = &args.summary_out {
        let envelope = Summary {
            provenance,
            result: summary,
        };
        let mut text = serde_json::to_string_pretty(&envelope).expect("summary serializes");
        text.push('\n');
        files.push((path, text.into_bytes()));
    }
    if let Some(path) = &args.per_user_out {
        files.push((path, per_user_csv(provenance, reports)));
    }
    if let Some(path) = &args.cdf_out {
        files.push((path, cdf_csv(provenance, reports)));
    }
    let mut written: Vec<&Path> = Vec::new();
    for (path, bytes) in &files {
        if let Err(err) = std::fs::write(path, bytes) {
            let _ = std::fs::remove_file(path);
            for earlier in written {
                let _ = std::fs::remove_file(earlier);
            }
            return Err(Error::Io(err));
        }
        written.push(path);
    }
    Ok(())
}

fn csv_with_comments(provenance: &Provenance, build: impl FnOnce(&mut csv::Writer<Vec<u8>>)) -> Vec<u8> {
    let mut head = Vec::new();
    for line in provenance.comment_lines() {
        head.extend_from_slice(line.as_bytes());
        head.push(b'\n');
    }
    let mut writer = csv::Writer::from_writer(head);
    build(&mut writer);
    writer.into_inner().expect("csv buffer")
}

fn per_user_csv(provenance: &Provenance, reports: &[&ThroughputReport]) -> Vec<u8> {
    csv_with_comments(provenance, |writer| {
        writer
            .write_record(["strategy", "operator", "run", "throughput_bps"])
            .expect("csv record");
        for report in reports {
            for user in &report.per_user {
                writer
                    .write_record([
                        report.strategy.name(),
                        &user.operator.to_string(),
                        &user.run.to_string(),
                        &num(user.throughput_bps),
                    ])
                    .expect("csv record");
            }
        }
    })
}

fn cdf_csv(provenance: &Provenance, reports: &[&ThroughputReport]) -> Vec<u8> {
    csv_with_comments(provenance, |writer| {
        writer
            .write_record(["strategy", "throughput_bps", "fraction"])
            .expect("csv record");
        for report in reports {
            for point in &report.cdf {
                writer
                    .write_record([
                        report.strategy.name(),
                        &num(point.throughput_bps),
                        &num(point.fraction),
                    ])
                    .expect("csv record");
            }
        }
    })
}
