use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use wavelag::estimator::{DEFAULT_NU, DEFAULT_RIDGE};
use wavelag::io::{self, Series};
use wavelag::simulate::{self, SimConfig, TestFunction};
use wavelag::toeplitz::loglog_slope;
use wavelag::{
    deconvolve, inverse_norms, Depth, ErrorClass, EstimatorConfig, Family, Kernel, LagCoeffs,
    NoiseLevel, Order, Projection, Projector, QuadratureRule, SigmaMethod, TimeGrid,
};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "wavelag",
    version,
    about = "Wavelet-Laguerre functional Laplace deconvolution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Generate a synthetic test case: truth f, clean q = g * f and noisy Y.
    Simulate(SimulateArgs),
    /// Estimate f from a noisy cube and a kernel.
    Deconvolve(DeconvolveArgs),
    /// Replicate the simulation table (4 functions x 3 SNR levels).
    BenchTable1(BenchArgs),
    /// Tabulate inverse norms of the Toeplitz convolution operator.
    Norms(NormsArgs),
    /// Laguerre smoothing of a sampled kernel.
    Smooth(SmoothArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    function: String,
    #[arg(long, default_value_t = 3.0)]
    snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long = "T", default_value_t = 5.0)]
    horizon: f64,
    #[arg(long, default_value_t = 32)]
    n1: usize,
    #[arg(long, default_value_t = 32)]
    n2: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug)]
enum Auto<T> {
    Auto,
    Value(T),
}

impl<T: FromStr> FromStr for Auto<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            Ok(Auto::Auto)
        } else {
            s.parse()
                .map(Auto::Value)
                .map_err(|e| format!("expected `auto` or a number: {e}"))
        }
    }
}

#[derive(Args)]
struct DeconvolveArgs {
    /// Header of the observed cube.
    #[arg(long)]
    input: PathBuf,
    /// Kernel samples on the data grid (CSV `t,value`).
    #[arg(
        long,
        conflicts_with = "kernel_coeffs",
        required_unless_present = "kernel_coeffs"
    )]
    kernel: Option<PathBuf>,
    /// Kernel Laguerre coefficients (CSV with a `coeff` column).
    #[arg(long)]
    kernel_coeffs: Option<PathBuf>,
    /// Header path for the estimate.
    #[arg(long)]
    out: PathBuf,
    /// Diagnostics JSON (defaults to `<out>.diagnostics.json`).
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Laguerre order, or `auto`.
    #[arg(long = "M", default_value = "auto")]
    order: Auto<usize>,
    /// Upper bound for the automatic order.
    #[arg(long = "M-cap", default_value_t = 64)]
    order_cap: usize,
    /// Spatial depths `J1,J2`, or `auto`.
    #[arg(long = "J", default_value = "auto")]
    depth: String,
    #[arg(long, default_value_t = DEFAULT_NU)]
    nu: f64,
    /// Radius `A` of the resolution rule.
    #[arg(long = "A", default_value_t = 1.0)]
    radius: f64,
    #[arg(long)]
    no_threshold: bool,
    /// Noise level, or `auto`.
    #[arg(long, default_value = "auto")]
    eps: Auto<f64>,
    /// Noise scale estimator: `mad` or `std`.
    #[arg(long, default_value = "mad")]
    sigma: String,
    /// Wavelet family: haar, db4, db6, db8.
    #[arg(long, default_value = "db4")]
    family: String,
    /// `ridge` or `quadrature`.
    #[arg(long, default_value = "ridge")]
    projection: String,
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    ridge: f64,
    /// Reflect images to twice their size before transforming.
    #[arg(long)]
    symmetrize: bool,
    /// Pre-smooth the kernel samples with this many Laguerre functions.
    #[arg(long)]
    smooth_kernel: Option<usize>,
    /// Truth cube; its relative error is added to the diagnostics.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NU)]
    nu: f64,
    #[arg(long = "M", default_value_t = 8)]
    order: usize,
    /// Comma-separated subset of f1..f4.
    #[arg(long, default_value = "f1,f2,f3,f4")]
    functions: String,
    /// Results CSV; the text table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormsArgs {
    /// Kernel samples (CSV `t,value`) on a uniform grid.
    #[arg(
        long,
        conflicts_with = "kernel_coeffs",
        required_unless_present = "kernel_coeffs"
    )]
    kernel: Option<PathBuf>,
    #[arg(long)]
    kernel_coeffs: Option<PathBuf>,
    #[arg(long = "max-m")]
    max_m: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SmoothArgs {
    /// Samples (CSV `t,value`) on a uniform grid starting at `T/n`.
    #[arg(long)]
    input: PathBuf,
    /// Number of Laguerre functions.
    #[arg(long = "M")]
    order: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the Laguerre coefficients.
    #[arg(long)]
    coeffs_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Deconvolve(a) => cmd_deconvolve(a),
        Command::BenchTable1(a) => cmd_bench(a),
        Command::Norms(a) => cmd_norms(a),
        Command::Smooth(a) => cmd_smooth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<wavelag::Error>() {
            return match err.class() {
                ErrorClass::Usage => EXIT_USAGE,
                ErrorClass::Io => EXIT_IO,
                ErrorClass::Numeric => EXIT_NUMERIC,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some()
            || cause.downcast_ref::<serde_json::Error>().is_some()
        {
            return EXIT_IO;
        }
    }
    EXIT_USAGE
}

#[derive(Serialize)]
struct Manifest {
    function: String,
    snr: f64,
    sigma: f64,
    seed: u64,
    n: usize,
    #[serde(rename = "T")]
    horizon: f64,
    n1: usize,
    n2: usize,
    kernel: &'static str,
    spatial_points: &'static str,
    files: ManifestFiles,
}

#[derive(Serialize)]
struct ManifestFiles {
    f: &'static str,
    q: &'static str,
    y: &'static str,
    kernel: &'static str,
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let id: TestFunction = a.function.parse()?;
    let grid = TimeGrid::new(a.n, a.horizon)?;
    if a.n1 == 0 || a.n2 == 0 {
        bail!(wavelag::Error::InvalidParameter(
            "n1 and n2 must be >= 1".into()
        ));
    }
    let sc = simulate::scenario(id, &grid, a.n1, a.n2)?;
    let (y, sigma) = simulate::add_noise(&sc.q, a.snr, a.seed)?;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    io::write_cube(&a.out.join("f.json"), &sc.f)?;
    io::write_cube(&a.out.join("q.json"), &sc.q)?;
    io::write_cube(&a.out.join("y.json"), &y)?;
    io::write_series(
        &a.out.join("kernel.csv"),
        &Series::on_grid(&grid, sc.kernel)?,
    )?;
    let manifest = Manifest {
        function: id.to_string(),
        snr: a.snr,
        sigma,
        seed: a.seed,
        n: a.n,
        horizon: a.horizon,
        n1: a.n1,
        n2: a.n2,
        kernel: "exp(-t/2)",
        spatial_points: "x_i = i/n_side, i = 1..n_side",
        files: ManifestFiles {
            f: "f.json",
            q: "q.json",
            y: "y.json",
            kernel: "kernel.csv",
        },
    };
    write_json(&a.out.join("manifest.json"), &manifest)?;
    println!("wrote {} (sigma = {sigma:.6e})", a.out.display());
    Ok(())
}

fn parse_depth(s: &str) -> Result<Depth> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Depth::Auto);
    }
    let parts: Vec<&str> = s.split(',').collect();
    let parse = |p: &str| -> Result<usize> {
        p.trim()
            .parse()
            .map_err(|_| anyhow!(wavelag::Error::InvalidParameter(format!("bad depth `{s}`"))))
    };
    match parts.as_slice() {
        [j] => {
            let j = parse(j)?;
            Ok(Depth::Fixed(j, j))
        }
        [a, b] => Ok(Depth::Fixed(parse(a)?, parse(b)?)),
        _ => bail!(wavelag::Error::InvalidParameter(format!(
            "depth must be `auto`, `J` or `J1,J2`, got `{s}`"
        ))),
    }
}

fn parse_projection(kind: &str, ridge: f64) -> Result<Projection> {
    match kind.to_ascii_lowercase().as_str() {
        "ridge" => Ok(Projection::Ridge(ridge)),
        "quadrature" | "plain" => Ok(Projection::Quadrature),
        other => bail!(wavelag::Error::InvalidParameter(format!(
            "unknown projection `{other}`"
        ))),
    }
}

/// Uniform grid `t_k = T k / n` recovered from a series.
fn grid_of(series: &Series) -> Result<TimeGrid> {
    let last = *series.t.last().expect("non-empty series");
    let grid = TimeGrid::new(series.t.len(), last)?;
    series.check_grid(&grid)?;
    Ok(grid)
}

fn cmd_deconvolve(a: DeconvolveArgs) -> Result<()> {
    let y = io::read_cube(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let grid = *y.grid();
    let projection = parse_projection(&a.projection, a.ridge)?;
    let kernel = match (&a.kernel, &a.kernel_coeffs) {
        (Some(path), _) => {
            let s = io::read_series(path).with_context(|| format!("reading {}", path.display()))?;
            s.check_grid(&grid)?;
            let values = match a.smooth_kernel {
                Some(k) => smooth_kernel(&s.values, &grid, k)?.1,
                None => s.values,
            };
            Kernel::Series(values)
        }
        (None, Some(path)) => Kernel::Coeffs(LagCoeffs::new(io::read_coeffs(path)?)?),
        (None, None) => unreachable!("clap requires a kernel"),
    };
    let cfg = EstimatorConfig {
        order: match a.order {
            Auto::Auto => Order::Auto { cap: a.order_cap },
            Auto::Value(m) => Order::Fixed(m),
        },
        depth: parse_depth(&a.depth)?,
        nu: a.nu,
        radius: a.radius,
        eps: match a.eps {
            Auto::Auto => NoiseLevel::Auto,
            Auto::Value(e) => NoiseLevel::Fixed(e),
        },
        threshold: !a.no_threshold,
        sigma_method: a.sigma.parse::<SigmaMethod>()?,
        family: a.family.parse::<Family>()?,
        projection,
        symmetrize: a.symmetrize,
    };
    let est = deconvolve(&y, &kernel, &cfg)?;
    for w in &est.diagnostics.warnings {
        eprintln!("warning: {w}");
    }

    let mut report = serde_json::to_value(&est.diagnostics)?;
    report["eps_hat"] = report["eps"].clone();
    if let Some(path) = &a.truth {
        let truth = io::read_cube(path).with_context(|| format!("reading {}", path.display()))?;
        let delta = simulate::relative_error(&est.fhat, &truth)?;
        report["relative_error"] = serde_json::json!(delta);
        println!("relative error {delta:.6}");
    }
    io::write_cube(&a.out, &est.fhat)?;
    let diag = a
        .diagnostics
        .clone()
        .unwrap_or_else(|| a.out.with_extension("diagnostics.json"));
    write_json(&diag, &report)?;
    let d = &est.diagnostics;
    println!(
        "M = {}, J = ({}, {}), eps = {:.4e}, kept {} coefficients",
        d.m,
        d.j1,
        d.j2,
        d.eps,
        d.keep_counts.iter().sum::<usize>()
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let functions = a
        .functions
        .split(',')
        .map(|s| s.parse::<TestFunction>())
        .collect::<wavelag::Result<Vec<_>>>()?;
    let sim = SimConfig {
        runs: a.runs,
        seed: a.seed,
        functions,
        ..Default::default()
    };
    let est = EstimatorConfig {
        order: Order::Fixed(a.order),
        nu: a.nu,
        ..Default::default()
    };
    let rows = simulate::run_table1(&sim, &est)?;
    print!("{}", simulate::format_table(&rows));
    if let Some(path) = &a.out {
        let file =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        simulate::write_table_csv(&rows, file)?;
    }
    Ok(())
}

fn load_kernel_coeffs(
    kernel: &Option<PathBuf>,
    coeffs: &Option<PathBuf>,
    m: usize,
) -> Result<LagCoeffs<f64>> {
    match (kernel, coeffs) {
        (Some(path), _) => {
            let s = io::read_series(path).with_context(|| format!("reading {}", path.display()))?;
            let grid = grid_of(&s)?;
            Ok(wavelag::estimator::kernel_coeffs(
                &s.values,
                &grid,
                m,
                Projection::Ridge(DEFAULT_RIDGE),
            )?)
        }
        (None, Some(path)) => {
            let c = io::read_coeffs(path)?;
            Ok(LagCoeffs::new(c)?.resized(m))
        }
        (None, None) => unreachable!("clap requires a kernel"),
    }
}

fn cmd_norms(a: NormsArgs) -> Result<()> {
    if a.max_m == 0 {
        bail!(wavelag::Error::InvalidParameter(
            "--max-m must be >= 1".into()
        ));
    }
    let g = load_kernel_coeffs(&a.kernel, &a.kernel_coeffs, a.max_m)?;
    let table = inverse_norms(&g, a.max_m)?;
    let mut text = String::from("m,spectral,frobenius\n");
    for (m, s, f) in table.rows() {
        text.push_str(&format!("{m},{s},{f}\n"));
    }
    let points: Vec<(f64, f64)> = table
        .rows()
        .filter(|(m, _, _)| *m >= 8)
        .map(|(m, _, f)| (m as f64, f * f))
        .collect();
    match &a.out {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    if points.len() >= 2 {
        eprintln!(
            "log-log slope of frobenius^2 over m >= 8: {:.4}",
            loglog_slope(&points)
        );
    }
    Ok(())
}

fn cmd_smooth(a: SmoothArgs) -> Result<()> {
    let s = io::read_series(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let grid = grid_of(&s)?;
    let (coeffs, smooth) = smooth_kernel(&s.values, &grid, a.order)?;
    io::write_series(&a.out, &Series::new(s.t, smooth)?)?;
    if let Some(path) = &a.coeffs_out {
        io::write_coeffs(path, coeffs.as_slice())?;
    }
    Ok(())
}

/// Laguerre coefficients and smoothed samples of a kernel.
fn smooth_kernel(
    values: &[f64],
    grid: &TimeGrid,
    order: usize,
) -> Result<(LagCoeffs<f64>, Vec<f64>)> {
    let basis = wavelag::LaguerreBasis::new(order, grid, QuadratureRule::EndCorrected)?;
    let projector = Projector::new(basis, Projection::Ridge(DEFAULT_RIDGE))?;
    let coeffs = projector.apply(values)?;
    let smooth = wavelag::reconstruct(&coeffs, projector.basis())?;
    Ok((coeffs, smooth))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}
