use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use focklab::counterexample::run_counterexample_suite;
use focklab::heat::heat_with_tail;
use focklab::io::{
    emit, read_symbol_spec, render_json_report, unix_now, Cell, Format, IoError, Parsed, RunManifest, SymbolSpec,
    Table,
};
use focklab::irreversibility::{
    default_frequencies, greedy_centers, verify_irreversibility, IrreversibilityError, PlacementOptions, PlanarGrid,
    TimePair,
};
use focklab::kernel_tests::{annuli_centers, supremal_scan, KernelOrder};
use focklab::numerics::NumericError;
use focklab::spectrum::{power_symbol_table, spectrum_profile, ProfileMode, DEFAULT_M_MAX};
use focklab::symbols::{l1_norm_area, l2_norm_area_verdict, AnnuliConfig, SymbolError};

#[derive(Parser, Debug)]
#[command(name = "focklab", version, about = "Toeplitz operators on the Fock space: heat flow, kernel tests, spectra")]
struct Cli {
    /// Relative tolerance for heat-transform quadrature.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "FOCKLAB_THREADS")]
    threads: Option<usize>,
    /// Output file; stdout when absent. A `<out>.manifest.json` sidecar is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
enum OrderArg {
    Linear,
    Quadratic,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
enum ModeArg {
    Form,
    Natural,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Parse and validate a symbol spec; report its area norms.
    SymbolValidate(SpecArg),
    /// Heat transform of a radial symbol at a list of radii.
    Heat(HeatArgs),
    /// Linear or quadratic Gaussian kernel test over a list of centers.
    KernelScan(ScanArgs),
    /// Toeplitz eigenvalue profile and boundedness verdict.
    Spectrum(SpectrumArgs),
    /// Heat/T/U verdict table for power symbols |z|^alpha.
    Powers(PowersArgs),
    /// Full verification suite for the ultrathin-annuli symbol.
    AnnuliSuite(SuiteArgs),
    /// Heat-flow irreversibility construction with modulated Gaussians.
    Irreversibility(IrrevArgs),
}

#[derive(Args, Debug, Serialize)]
struct SpecArg {
    /// Symbol spec (JSON).
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct HeatArgs {
    #[command(flatten)]
    spec: SpecArg,
    #[arg(long)]
    t: f64,
    /// Radii to evaluate; defaults to an even grid on [0, x-max].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    x_max: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
struct ScanArgs {
    #[command(flatten)]
    spec: SpecArg,
    #[arg(long, value_enum, default_value_t = OrderArg::Linear)]
    order: OrderArg,
    /// Centers; defaults to sqrt(n) over the family range, else an even grid on [0, x-max].
    #[arg(long, value_delimiter = ',')]
    centers: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    x_max: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
struct SpectrumArgs {
    #[command(flatten)]
    spec: SpecArg,
    #[arg(long, default_value_t = DEFAULT_M_MAX)]
    m_max: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Form)]
    mode: ModeArg,
}

#[derive(Args, Debug, Serialize)]
struct PowersArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
          default_values_t = [-2.5, -1.9, -1.5, -1.0, -0.5, 0.0, 0.5])]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_M_MAX)]
    m_max: u64,
}

#[derive(Args, Debug, Serialize)]
struct SuiteArgs {
    /// Annuli spec; overrides the family flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    n_min: u32,
    #[arg(long, default_value_t = 200)]
    n_max: u32,
    #[arg(long, default_value_t = 1e-3)]
    c: f64,
    #[arg(long)]
    smooth: bool,
    /// Sector indices probed by the moment series; those above n-max are dropped.
    #[arg(long, value_delimiter = ',', default_values_t = [50u32, 100, 150, 200])]
    probes: Vec<u32>,
}

#[derive(Args, Debug, Serialize)]
struct IrrevArgs {
    #[arg(long, default_value_t = 0.125)]
    t0: f64,
    #[arg(long, default_value_t = 0.0625)]
    t1: f64,
    #[arg(long, default_value_t = 5)]
    bumps: usize,
    /// Frequencies |xi_n|^2 = xi_scale * n.
    #[arg(long, default_value_t = 20.0)]
    xi_scale: f64,
    #[arg(long, default_value_t = 0.1)]
    grid_step: f64,
    #[arg(long, default_value_t = 5.0)]
    grid_margin: f64,
}

enum Failure {
    Validation(String),
    Numeric(String),
    Verdict(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Verdict(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numeric(m) | Failure::Verdict(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<NumericError> for Failure {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::InvalidInput(m) => Failure::Validation(m),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<SymbolError> for Failure {
    fn from(e: SymbolError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<IrreversibilityError> for Failure {
    fn from(e: IrreversibilityError) -> Self {
        match e {
            IrreversibilityError::PlacementFailure { .. } => Failure::Numeric(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

struct Output {
    body: String,
    manifest: RunManifest,
    verdict_failure: Option<String>,
}

fn grid(x_max: f64, points: usize) -> Result<Vec<f64>, Failure> {
    if points < 2 || !(x_max > 0.0) {
        return Err(Failure::Validation("grid needs points >= 2 and x-max > 0".into()));
    }
    Ok((0..points).map(|i| x_max * i as f64 / (points - 1) as f64).collect())
}

fn format_of(f: OutFormat) -> Format {
    match f {
        OutFormat::Json => Format::Json,
        OutFormat::Csv => Format::Csv,
    }
}

fn json_only(format: Format, command: &str) -> Result<(), Failure> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Validation(format!("`{command}` only emits JSON"))),
    }
}

#[derive(Serialize)]
struct Config<'a, A: Serialize> {
    args: &'a A,
    spec: Option<SymbolSpec>,
    tol: f64,
}

fn manifest<A: Serialize>(command: &str, args: &A, spec: Option<&Parsed>, tol: Option<f64>) -> Result<RunManifest, Failure> {
    let config = Config {
        args,
        spec: spec.map(Parsed::to_spec),
        tol: tol.unwrap_or(0.0),
    };
    let mut tolerances = BTreeMap::new();
    if let Some(t) = tol {
        tolerances.insert("rel_tol".to_string(), t);
    }
    Ok(RunManifest::new(command, &config, tolerances)?)
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let format = format_of(cli.format);
    let tol = cli.tol;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Failure::Validation(format!("--tol must lie in (0, 1), got {tol}")));
    }
    match &cli.command {
        Command::SymbolValidate(args) => {
            json_only(format, "symbol-validate")?;
            let parsed = read_symbol_spec(&args.spec)?;
            let sym = parsed.symbol()?;
            #[derive(Serialize)]
            struct Summary {
                name: String,
                pieces: usize,
                family: Option<AnnuliConfig>,
                l1_partial: f64,
                l1_tail: f64,
                l2: focklab::symbols::L2Verdict,
                compact: bool,
            }
            let l1 = l1_norm_area(&sym)?;
            let summary = Summary {
                name: sym.name().to_string(),
                pieces: sym.pieces().len(),
                family: sym.family().copied(),
                l1_partial: l1.partial,
                l1_tail: l1.tail,
                l2: l2_norm_area_verdict(&sym),
                compact: sym.is_compactly_supported(),
            };
            let m = manifest("symbol-validate", args, Some(&parsed), None)?;
            Ok(Output {
                body: render_json_report(&summary, &m)?,
                manifest: m,
                verdict_failure: None,
            })
        }
        Command::Heat(args) => {
            let parsed = read_symbol_spec(&args.spec.spec)?;
            let sym = parsed.symbol()?;
            if !(args.t > 0.0) {
                return Err(Failure::Validation(format!("--t must be positive, got {}", args.t)));
            }
            let xs = if args.x.is_empty() { grid(args.x_max, args.points)? } else { args.x.clone() };
            let values = xs
                .iter()
                .map(|&x| heat_with_tail(&sym, args.t, x, tol))
                .collect::<Result<Vec<_>, _>>()?;
            let m = manifest("heat", args, Some(&parsed), Some(tol))?;
            let body = match format {
                Format::Csv => {
                    let mut t = Table::new(&["x", "value", "tail_bound"]);
                    for v in &values {
                        t.push(vec![Cell::Float(v.x), Cell::Float(v.value), Cell::Float(v.tail_bound)]);
                    }
                    t.to_csv()?
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct R<'a> {
                        t: f64,
                        values: &'a [focklab::heat::HeatValue],
                    }
                    render_json_report(&R { t: args.t, values: &values }, &m)?
                }
            };
            Ok(Output {
                body,
                manifest: m,
                verdict_failure: None,
            })
        }
        Command::KernelScan(args) => {
            let parsed = read_symbol_spec(&args.spec.spec)?;
            let sym = parsed.symbol()?;
            let centers = if !args.centers.is_empty() {
                args.centers.clone()
            } else if let Some(cfg) = sym.family() {
                annuli_centers(cfg.n_min, cfg.n_max)
            } else {
                grid(args.x_max, args.points)?
            };
            let order = match args.order {
                OrderArg::Linear => KernelOrder::Linear,
                OrderArg::Quadratic => KernelOrder::Quadratic,
            };
            let scan = supremal_scan(&sym, order, &centers)?;
            let m = manifest("kernel-scan", args, Some(&parsed), None)?;
            let body = match format {
                Format::Csv => {
                    let mut t = Table::new(&["center", "value", "tail_bound", "cumulative_sup"]);
                    for p in &scan.points {
                        t.push(vec![
                            Cell::Float(p.center),
                            Cell::Float(p.value),
                            Cell::Float(p.tail_bound),
                            Cell::Float(p.cumulative_sup),
                        ]);
                    }
                    t.to_csv()?
                }
                Format::Json => render_json_report(&scan, &m)?,
            };
            Ok(Output {
                body,
                manifest: m,
                verdict_failure: None,
            })
        }
        Command::Spectrum(args) => {
            let parsed = read_symbol_spec(&args.spec.spec)?;
            let sym = parsed.symbol()?;
            let mode = match args.mode {
                ModeArg::Form => ProfileMode::Form,
                ModeArg::Natural => ProfileMode::NaturalDomain,
            };
            let profile = spectrum_profile(&sym, args.m_max, mode);
            let m = manifest("spectrum", args, Some(&parsed), None)?;
            let body = match format {
                Format::Csv => {
                    let mut t = Table::new(&["m", "eigenvalue", "ln_eigenvalue"]);
                    for (i, ev) in profile.eigenvalues.iter().enumerate() {
                        let (v, l) = match ev {
                            Some(e) => (Cell::Float(e.to_f64()), Cell::Float(e.ln_abs())),
                            None => (Cell::Text("divergent".into()), Cell::Text("divergent".into())),
                        };
                        t.push(vec![Cell::Int(i as i64), v, l]);
                    }
                    t.to_csv()?
                }
                Format::Json => render_json_report(&profile, &m)?,
            };
            Ok(Output {
                body,
                manifest: m,
                verdict_failure: None,
            })
        }
        Command::Powers(args) => {
            let rows = power_symbol_table(&args.alphas, args.m_max)?;
            let m = manifest("powers", args, None, None)?;
            let body = match format {
                Format::Csv => {
                    let mut t = Table::new(&["alpha", "heat", "t", "u"]);
                    for r in &rows {
                        t.push(vec![
                            Cell::Float(r.alpha),
                            Cell::Text(format!("{:?}", r.heat)),
                            Cell::Text(format!("{:?}", r.t)),
                            Cell::Text(format!("{:?}", r.u)),
                        ]);
                    }
                    t.to_csv()?
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct R<'a> {
                        rows: &'a [focklab::spectrum::PowerRow],
                    }
                    render_json_report(&R { rows: &rows }, &m)?
                }
            };
            Ok(Output {
                body,
                manifest: m,
                verdict_failure: None,
            })
        }
        Command::AnnuliSuite(args) => {
            json_only(format, "annuli-suite")?;
            let (cfg, parsed) = match &args.spec {
                Some(path) => match read_symbol_spec(path)? {
                    Parsed::Annuli(cfg) => (cfg, Parsed::Annuli(cfg)),
                    Parsed::Symbol(_) => {
                        return Err(Failure::Validation("annuli-suite needs a spec with a single `annuli` piece".into()))
                    }
                },
                None => {
                    let cfg = AnnuliConfig {
                        n_min: args.n_min,
                        n_max: args.n_max,
                        c: args.c,
                        smooth: args.smooth,
                    };
                    cfg.validate()?;
                    (cfg, Parsed::Annuli(cfg))
                }
            };
            let probes: Vec<u32> = args
                .probes
                .iter()
                .copied()
                .filter(|&n| n >= cfg.n_min && n <= cfg.n_max)
                .collect();
            let report = run_counterexample_suite(cfg, &probes)?;
            let m = manifest("annuli-suite", args, Some(&parsed), None)?;
            Ok(Output {
                body: render_json_report(&report, &m)?,
                manifest: m,
                verdict_failure: (!report.passed).then(|| format!("suite failed: {}", report.failures.join("; "))),
            })
        }
        Command::Irreversibility(args) => {
            json_only(format, "irreversibility")?;
            if !(args.xi_scale > 0.0 && args.grid_step > 0.0 && args.grid_margin >= 0.0) {
                return Err(Failure::Validation("xi-scale and grid-step must be positive".into()));
            }
            let times = TimePair::new(args.t0, args.t1)?;
            let opts = PlacementOptions::default();
            let family = greedy_centers(times, &default_frequencies(args.bumps, args.xi_scale), &opts)?;
            let grid = PlanarGrid::around(&family, args.grid_margin, args.grid_step);
            let report = verify_irreversibility(&family, &grid, &opts)?;
            let m = manifest("irreversibility", args, None, None)?;
            Ok(Output {
                body: render_json_report(&report, &m)?,
                manifest: m,
                verdict_failure: (!report.passed).then(|| format!("report failed: {}", report.failures.join("; "))),
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let started = unix_now();
    let result = run(&cli).and_then(|mut output| {
        output.manifest.started_unix = Some(started);
        output.manifest.finished_unix = Some(unix_now());
        emit(&output.body, cli.out.as_deref().map(Path::new), &output.manifest)?;
        match output.verdict_failure {
            Some(msg) => Err(Failure::Verdict(msg)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

