//! Batch command line for the exchange-option pricing engine.
//!
//! Subcommands: `price` (one row per method), `compare` (one row per sweep
//! point, plot-ready), `calibrate` (two-step market fit to JSON) and
//! `simulate` (increment samples to CSV). Outputs are deterministic for a
//! fixed seed: runtimes are only emitted on request (`--timing`) so repeated
//! runs produce byte-identical files.
//!
//! Exit codes: 0 success, 2 usage, 3 data (parse/validation), 4 numerical.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod market;

use clap::{Args, Parser, Subcommand};
use levy_exchange::calibration::{calibrate, CalibrationOptions};
use levy_exchange::mc::{price_exchange_mc, simulate_increments, SimPlan};
use levy_exchange::models::{ModelKind, ModelSpec};
use levy_exchange::pricing::closed::{
    price_margrabe_bs, price_vg_exchange_closed, price_vg_exchange_quadrature,
    price_vgpp_exchange_closed,
};
use levy_exchange::pricing::fourier::{price_exchange_fourier, FourierGrid};
use levy_exchange::pricing::{ExchangeContract, Method, PriceReport};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "levy-exchange", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one exchange contract with the selected methods.
    Price(PriceArgs),
    /// Sweep one parameter and emit a plot-ready comparison table.
    Compare(CompareArgs),
    /// Two-step calibration from market CSV files.
    Calibrate(CalibrateArgs),
    /// Emit simulated log-price increments.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ContractOpts {
    /// Model specification JSON.
    #[arg(long)]
    model: PathBuf,
    /// Contract as `s1=..,s2=..,T=..[,K=..]`.
    #[arg(long)]
    contract: String,
}

#[derive(Args)]
struct EngineOpts {
    /// Comma-separated subset of closed,quadrature,fourier,mc.
    #[arg(long, default_value = "closed,mc")]
    methods: String,
    /// Monte Carlo paths.
    #[arg(long, default_value_t = 1_000_000)]
    paths: usize,
    /// Random seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Disable antithetic pairing of the Gaussian draws.
    #[arg(long)]
    no_antithetic: bool,
    /// Relative tolerance of the clock-density quadrature route.
    #[arg(long, default_value_t = 1e-9)]
    quad_tol: f64,
    /// Negative-binomial tail tolerance of the series route.
    #[arg(long, default_value_t = 1e-10)]
    series_tol: f64,
    /// Frequency nodes of the transform route (power of two).
    #[arg(long, default_value_t = 4096)]
    fft_points: usize,
    /// Frequency spacing of the transform route.
    #[arg(long, default_value_t = 0.05)]
    fft_eta: f64,
    /// Damping of the transform route.
    #[arg(long, default_value_t = 0.75)]
    fft_damping: f64,
    /// Include wall-clock runtimes in the output (breaks byte-for-byte
    /// reproducibility of output files).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    contract: ContractOpts,
    #[command(flatten)]
    engine: EngineOpts,
    /// Output CSV path (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    contract: ContractOpts,
    #[command(flatten)]
    engine: EngineOpts,
    /// Sweep declaration `param=<name>:<start>:<stop>:<count>` with name one
    /// of a, s1, s2, T.
    #[arg(long)]
    sweep: String,
    /// Output CSV path (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Market data directory holding forwards.csv, quotes.csv, returns.csv.
    #[arg(long)]
    market: PathBuf,
    /// Model kind: BS, VG, VGPP, SemeraroVGPP, LSVGPP or BBVGPP.
    #[arg(long)]
    kind: String,
    /// Risk-free rate.
    #[arg(long, default_value_t = 0.015)]
    rate: f64,
    /// Random seed of the multistart optimizer.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output JSON path (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model specification JSON.
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated strictly increasing evaluation times.
    #[arg(long, default_value = "1.0")]
    tgrid: String,
    #[arg(long, default_value_t = 1000)]
    paths: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    antithetic: bool,
    /// Output CSV path (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: String,
}

enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

fn lift(err: levy_exchange::Error) -> CliError {
    use levy_exchange::Error as E;
    match &err {
        E::Domain(_) | E::Precondition(_) => CliError::Data(err.to_string()),
        E::Numerical { .. } | E::Overflow { .. } | E::Constraint { .. } => {
            CliError::Numerical(err.to_string())
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("LEVY_EXCHANGE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Price(args) => run_price(args),
        Command::Compare(args) => run_compare(args),
        Command::Calibrate(args) => run_calibrate(args),
        Command::Simulate(args) => run_simulate(args),
    }
}

fn load_model(path: &Path) -> Result<ModelSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let spec: ModelSpec = serde_json::from_str(&text).map_err(|e| {
        CliError::Data(format!(
            "cannot parse {} at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    spec.validate().map_err(lift)?;
    Ok(spec)
}

fn parse_contract(s: &str) -> Result<ExchangeContract, CliError> {
    let mut s1 = None;
    let mut s2 = None;
    let mut t = None;
    let mut k = 0.0;
    for piece in s.split(',') {
        let (key, value) = piece
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad contract field '{piece}'")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad number in contract field '{piece}'")))?;
        match key.trim() {
            "s1" => s1 = Some(v),
            "s2" => s2 = Some(v),
            "T" | "t" => t = Some(v),
            "K" | "k" => k = v,
            other => return Err(CliError::Usage(format!("unknown contract field '{other}'"))),
        }
    }
    let (Some(s1), Some(s2), Some(t)) = (s1, s2, t) else {
        return Err(CliError::Usage(
            "contract needs s1=..,s2=..,T=.. (K optional)".into(),
        ));
    };
    ExchangeContract::new(s1, s2, t, k).map_err(lift)
}

fn parse_methods(s: &str) -> Result<Vec<Method>, CliError> {
    let methods: Vec<Method> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<Method>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if methods.is_empty() {
        return Err(CliError::Usage("method set must not be empty".into()));
    }
    Ok(methods)
}

fn grid_of(engine: &EngineOpts) -> FourierGrid {
    FourierGrid {
        n_points: engine.fft_points,
        eta: engine.fft_eta,
        damping: engine.fft_damping,
    }
}

fn plan_of(engine: &EngineOpts) -> SimPlan {
    SimPlan {
        n_paths: engine.paths,
        seed: engine.seed,
        antithetic: !engine.no_antithetic,
        n_steps: 1,
    }
}

fn dispatch(
    method: Method,
    contract: &ExchangeContract,
    spec: &ModelSpec,
    engine: &EngineOpts,
) -> Result<PriceReport, CliError> {
    let report = match method {
        Method::Closed => match spec {
            ModelSpec::Bs(_) => price_margrabe_bs(contract, spec),
            ModelSpec::Vg(_) => price_vg_exchange_closed(contract, spec),
            ModelSpec::Vgpp(_) => price_vgpp_exchange_closed(contract, spec, engine.series_tol),
            other => Err(levy_exchange::Error::Domain(format!(
                "no closed formula for {}: use fourier or mc",
                other.kind_name()
            ))),
        },
        Method::Quadrature => price_vg_exchange_quadrature(contract, spec, engine.quad_tol),
        Method::Fourier => price_exchange_fourier(contract, spec, &grid_of(engine)),
        Method::MonteCarlo => price_exchange_mc(contract, spec, &plan_of(engine)),
    };
    report.map_err(lift)
}

fn open_out(path: &str) -> Result<Box<dyn Write>, CliError> {
    if path == "-" {
        Ok(Box::new(std::io::stdout()))
    } else {
        let f = std::fs::File::create(path)
            .map_err(|e| CliError::Data(format!("cannot create {path}: {e}")))?;
        Ok(Box::new(f))
    }
}

fn fmt_diag(report: &PriceReport) -> String {
    report
        .diagnostics
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn run_price(args: PriceArgs) -> Result<(), CliError> {
    let spec = load_model(&args.contract.model)?;
    let contract = parse_contract(&args.contract.contract)?;
    let methods = parse_methods(&args.engine.methods)?;
    let mut w = csv::Writer::from_writer(open_out(&args.out)?);
    let mut header = vec!["method", "price", "std_error"];
    if args.engine.timing {
        header.push("runtime_s");
    }
    header.extend_from_slice(&["diagnostics", "warnings"]);
    w.write_record(&header).map_err(|e| CliError::Data(e.to_string()))?;
    for method in methods {
        let report = dispatch(method, &contract, &spec, &args.engine)?;
        let mut row = vec![
            report.method.name().to_string(),
            format!("{}", report.price),
            report.std_error.map(|s| format!("{s}")).unwrap_or_default(),
        ];
        if args.engine.timing {
            row.push(format!("{}", report.runtime));
        }
        row.push(fmt_diag(&report));
        row.push(report.warnings.join(" | "));
        w.write_record(&row).map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

struct Sweep {
    name: String,
    values: Vec<f64>,
}

fn parse_sweep(s: &str) -> Result<Sweep, CliError> {
    let body = s
        .strip_prefix("param=")
        .ok_or_else(|| CliError::Usage("sweep must look like param=a:0.05:0.95:19".into()))?;
    let parts: Vec<&str> = body.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(
            "sweep must look like param=<name>:<start>:<stop>:<count>".into(),
        ));
    }
    let name = parts[0].to_string();
    let start: f64 = parts[1].parse().map_err(|_| CliError::Usage("bad sweep start".into()))?;
    let stop: f64 = parts[2].parse().map_err(|_| CliError::Usage("bad sweep stop".into()))?;
    let count: usize = parts[3].parse().map_err(|_| CliError::Usage("bad sweep count".into()))?;
    if count < 2 {
        return Err(CliError::Usage("sweep count must be at least 2".into()));
    }
    let values = (0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect();
    Ok(Sweep { name, values })
}

/// Apply one sweep value. Sweeping `a` keeps the clock on the unit-mean
/// convention by rescaling the rate to `α(1-a)`.
fn apply_sweep(
    spec: &ModelSpec,
    contract: &ExchangeContract,
    name: &str,
    value: f64,
) -> Result<(ModelSpec, ExchangeContract), CliError> {
    let mut spec = spec.clone();
    let mut c = *contract;
    match name {
        "s1" => c.s1_0 = value,
        "s2" => c.s2_0 = value,
        "T" | "t" => c.maturity_t = value,
        "a" => match spec {
            ModelSpec::Vg(mut m) | ModelSpec::Vgpp(mut m) => {
                m.a = value;
                m.beta = m.alpha * (1.0 - value);
                // the kind tag follows the parameter: a = 0 is the plain
                // gamma clock
                spec = if value > 0.0 { ModelSpec::Vgpp(m) } else { ModelSpec::Vg(m) };
            }
            _ => {
                return Err(CliError::Usage(
                    "sweeping a requires a VG or VGPP model".into(),
                ))
            }
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown sweep parameter '{other}' (expected a, s1, s2 or T)"
            )))
        }
    }
    c.validate().map_err(lift)?;
    spec.validate().map_err(lift)?;
    Ok((spec, c))
}

fn run_compare(args: CompareArgs) -> Result<(), CliError> {
    let spec = load_model(&args.contract.model)?;
    let contract = parse_contract(&args.contract.contract)?;
    let methods = parse_methods(&args.engine.methods)?;
    let sweep = parse_sweep(&args.sweep)?;

    let mut w = csv::Writer::from_writer(open_out(&args.out)?);
    let mut header = vec![sweep.name.clone()];
    for m in &methods {
        header.push(m.name().to_string());
        if *m == Method::MonteCarlo {
            header.push("mc_se".to_string());
        }
    }
    w.write_record(&header).map_err(|e| CliError::Data(e.to_string()))?;

    for value in &sweep.values {
        let (spec_v, contract_v) = apply_sweep(&spec, &contract, &sweep.name, *value)?;
        let mut row = vec![format!("{value}")];
        for m in &methods {
            let report = dispatch(*m, &contract_v, &spec_v, &args.engine)?;
            row.push(format!("{}", report.price));
            if *m == Method::MonteCarlo {
                row.push(format!("{}", report.std_error.unwrap_or(0.0)));
            }
        }
        w.write_record(&row).map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

fn run_calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let kind: ModelKind = args
        .kind
        .parse()
        .map_err(|e: levy_exchange::Error| CliError::Usage(e.to_string()))?;
    let snapshot = market::load_market_dir(&args.market, args.rate)?;
    let options = CalibrationOptions { seed: args.seed, ..Default::default() };
    let result = calibrate(&snapshot, kind, None, &options).map_err(lift)?;
    let json = serde_json::to_string_pretty(&result)
        .map_err(|e| CliError::Data(format!("serialization failed: {e}")))?;
    let mut out = open_out(&args.out)?;
    writeln!(out, "{json}").map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let spec = load_model(&args.model)?;
    let t_grid: Vec<f64> = args
        .tgrid
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage("bad tgrid".into()))?;
    let plan = SimPlan {
        n_paths: args.paths,
        seed: args.seed,
        antithetic: args.antithetic,
        n_steps: t_grid.len(),
    };
    let sample = simulate_increments(&spec, &t_grid, &plan).map_err(lift)?;
    let mut w = csv::Writer::from_writer(open_out(&args.out)?);
    let mut header = vec!["path".to_string(), "t".to_string()];
    for a in 0..sample.n_assets {
        header.push(format!("inc_{}", a + 1));
    }
    w.write_record(&header).map_err(|e| CliError::Data(e.to_string()))?;
    for p in 0..sample.n_paths {
        for (s, t) in t_grid.iter().enumerate() {
            let mut row = vec![format!("{p}"), format!("{t}")];
            for a in 0..sample.n_assets {
                row.push(format!("{}", sample.increment(p, s, a)));
            }
            w.write_record(&row).map_err(|e| CliError::Data(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}
