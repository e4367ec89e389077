//! The `ptlat` command-line front end.
//!
//! Four subcommands cover the library surface: `spectrum` tabulates
//! eigenvalues (one point or a sweep, CSV plus optional SVG), `verify` checks
//! the closed-form catalogue against the exact kernel solver (JSON), `metric`
//! assembles and classifies a metric candidate (JSON), and `ep` refines a
//! merge point inside a bracket (JSON). Machine-readable files are always
//! written before the human summary is printed. Exit codes: 0 success,
//! 1 usage error, 2 numerical failure, 3 verification mismatch.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dieudonne::{
    banded_pseudometric, dieudonne_residual, verify_formulas, verify_reduction, DieudonneError,
    FormulaModel, ReductionReport, VerificationReport,
};
use crate::exactlin::Rational;
use crate::exceptional::{
    ep_refine_with_tols, symmetrizability_boundary, sweep_with_tol, AffineMap, EPLocation,
    ExceptionalError, ParameterPath, SweepTable, DEFAULT_BISECTION_TOL,
};
use crate::lattice::{parity, CouplingVector, LatticeError, LatticeHamiltonian};
use crate::metric::{
    assemble_metric, charge_candidate, dyson_factor, quasi_hermiticity_residual, BasisSource,
    MetricError, Positivity, PseudometricBasis,
};
use crate::spectra::{SpectraError, DEFAULT_TOL_REAL};

/// Failures mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or flag combinations (exit 1).
    Usage(String),
    /// The computation itself failed (exit 2).
    Numerical(String),
    /// File output failed (exit 2).
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<DieudonneError> for CliError {
    fn from(e: DieudonneError) -> Self {
        match e {
            DieudonneError::BandOutOfRange { .. }
            | DieudonneError::WrongParameterCount { .. }
            | DieudonneError::InvalidReduction { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ExceptionalError> for CliError {
    fn from(e: ExceptionalError) -> Self {
        match e {
            ExceptionalError::DriverOutOfRange { .. }
            | ExceptionalError::NonFiniteLinkage
            | ExceptionalError::LinkageTargetsDriver(_)
            | ExceptionalError::InvalidRange { .. } => CliError::Usage(e.to_string()),
            ExceptionalError::Lattice(l) => CliError::Usage(l.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ptlat",
    version,
    about = "Spectra, merge points, and metric operators for a family of non-Hermitian tridiagonal lattice Hamiltonians"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate eigenvalues at one parameter point or along a sweep
    Spectrum(SpectrumArgs),
    /// Check the closed-form catalogue against the exact kernel solver
    Verify(VerifyArgs),
    /// Assemble a metric candidate and report its diagnostics
    Metric(MetricArgs),
    /// Refine a merge point (reality transition) inside a bracket
    Ep(EpArgs),
}

/// Flags describing the lattice member or parameter path.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Number of lattice sites
    #[arg(long)]
    pub n: usize,
    /// Coupling depth (inferred from the coupling flags when omitted)
    #[arg(long)]
    pub depth: Option<usize>,
    /// First coupling
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Second coupling
    #[arg(long, conflicts_with_all = ["tie", "link"])]
    pub mu: Option<f64>,
    /// Third coupling
    #[arg(long)]
    pub nu: Option<f64>,
    /// Tie the second coupling to the first: "mu=lambda"
    #[arg(long, value_name = "EXPR")]
    pub tie: Option<String>,
    /// Link the second coupling affinely: "mu=lambda+0.25"
    #[arg(long, value_name = "EXPR", conflicts_with = "tie")]
    pub link: Option<String>,
}

/// Output location shared by all subcommands.
#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory (default: $PTLAT_OUT_DIR, else the working directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sweep specification "driver:lo:hi:steps", e.g. "lambda:-1.2:1.2:201"
    #[arg(long, value_name = "SPEC")]
    pub sweep: Option<String>,
    /// Also write an SVG plot of the sweep
    #[arg(long)]
    pub svg: bool,
    /// Reality classification tolerance
    #[arg(long, default_value_t = DEFAULT_TOL_REAL)]
    pub tol_real: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Catalogue model to check
    #[arg(long, value_enum)]
    pub model: ModelName,
    /// First parameter as an exact rational, e.g. "1/3"
    #[arg(long, value_name = "NUM/DEN")]
    pub lambda: Option<String>,
    /// Second parameter as an exact rational
    #[arg(long, value_name = "NUM/DEN")]
    pub mu: Option<String>,
    /// Third parameter as an exact rational
    #[arg(long, value_name = "NUM/DEN")]
    pub nu: Option<String>,
    /// Additionally check the element-level reduction onto this model
    #[arg(long, value_enum, value_name = "MODEL")]
    pub expect_reduces_to: Option<ModelName>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Coefficient scheme over the rank-one basis
    #[arg(long, value_enum, conflicts_with = "select_band")]
    pub coeffs: Option<CoeffScheme>,
    /// Use the single band solution with this band index instead of a mix
    #[arg(long, value_name = "K")]
    pub select_band: Option<usize>,
    /// Seed for random coefficient draws
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reality classification tolerance
    #[arg(long, default_value_t = DEFAULT_TOL_REAL)]
    pub tol_real: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EpArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Bracket "lo:hi" for the driver value
    #[arg(long, value_name = "LO:HI")]
    pub bracket: String,
    /// Reality classification tolerance
    #[arg(long, default_value_t = DEFAULT_TOL_REAL)]
    pub tol_real: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Catalogue model names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    One,
    Two,
    Three,
}

impl From<ModelName> for FormulaModel {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::One => FormulaModel::OneParam,
            ModelName::Two => FormulaModel::TwoParam,
            ModelName::Three => FormulaModel::ThreeParam,
        }
    }
}

/// How metric coefficients are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoeffScheme {
    /// All coefficients 1
    Uniform,
    /// Positive coefficients drawn uniformly from [0.1, 2.0)
    Random,
}

/// Run a parsed command; returns the process exit code on success paths
/// (0, or 3 for a verification mismatch).
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Metric(args) => cmd_metric(args),
        Command::Ep(args) => cmd_ep(args),
    }
}

fn resolve_out_dir(out: &OutputArgs) -> Result<PathBuf, CliError> {
    let dir = out
        .out
        .clone()
        .or_else(|| std::env::var_os("PTLAT_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn inferred_depth(model: &ModelArgs) -> Result<usize, CliError> {
    let implied = if model.nu.is_some() {
        3
    } else if model.mu.is_some() || model.tie.is_some() || model.link.is_some() {
        2
    } else {
        1
    };
    match model.depth {
        None => Ok(implied),
        Some(d) if d >= implied => Ok(d),
        Some(d) => Err(CliError::Usage(format!(
            "--depth {d} is too small for the coupling flags given (need at least {implied})"
        ))),
    }
}

fn parse_linkage(model: &ModelArgs) -> Result<Vec<(usize, AffineMap)>, CliError> {
    if let Some(t) = &model.tie {
        if t.trim() != "mu=lambda" {
            return Err(CliError::Usage(format!(
                "unsupported --tie expression {t:?} (expected \"mu=lambda\")"
            )));
        }
        return Ok(vec![(1, AffineMap::identity())]);
    }
    if let Some(l) = &model.link {
        let rest = l
            .trim()
            .strip_prefix("mu=lambda")
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "unsupported --link expression {l:?} (expected \"mu=lambda<+/-offset>\")"
                ))
            })?
            .trim()
            .to_string();
        let offset = if rest.is_empty() {
            0.0
        } else {
            rest.parse::<f64>().map_err(|_| {
                CliError::Usage(format!("cannot parse link offset {rest:?} as a number"))
            })?
        };
        return Ok(vec![(1, AffineMap::new(1.0, offset))]);
    }
    Ok(vec![])
}

fn build_path(model: &ModelArgs, driver: usize) -> Result<ParameterPath, CliError> {
    let depth = inferred_depth(model)?;
    let mut base = vec![0.0; depth];
    if let Some(l) = model.lambda {
        base[0] = l;
    }
    if depth >= 2 {
        if let Some(m) = model.mu {
            base[1] = m;
        }
    }
    if depth >= 3 {
        if let Some(v) = model.nu {
            base[2] = v;
        }
    }
    let linkage = parse_linkage(model)?;
    Ok(ParameterPath::new(
        &CouplingVector::new(base),
        driver,
        &linkage,
    )?)
}

fn driver_index(name: &str, depth: usize) -> Result<usize, CliError> {
    let idx = match name {
        "lambda" => 0,
        "mu" => 1,
        "nu" => 2,
        other => {
            return Err(CliError::Usage(format!(
                "unknown sweep driver {other:?} (expected lambda, mu, or nu)"
            )))
        }
    };
    if idx >= depth {
        return Err(CliError::Usage(format!(
            "sweep driver {name} is outside the coupling depth {depth}"
        )));
    }
    Ok(idx)
}

struct SweepSpec {
    driver: String,
    lo: f64,
    hi: f64,
    steps: usize,
}

fn parse_sweep(spec: &str) -> Result<SweepSpec, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "cannot parse --sweep {spec:?} (expected \"driver:lo:hi:steps\")"
        )));
    }
    let lo: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("sweep lower bound {:?} is not a number", parts[1])))?;
    let hi: f64 = parts[2]
        .parse()
        .map_err(|_| CliError::Usage(format!("sweep upper bound {:?} is not a number", parts[2])))?;
    let steps: usize = parts[3]
        .parse()
        .map_err(|_| CliError::Usage(format!("sweep step count {:?} is not an integer", parts[3])))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || steps < 2 {
        return Err(CliError::Usage(format!(
            "invalid sweep range {lo}:{hi}:{steps} (need finite lo < hi and steps >= 2)"
        )));
    }
    Ok(SweepSpec {
        driver: parts[0].to_string(),
        lo,
        hi,
        steps,
    })
}

fn parse_bracket(spec: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "cannot parse --bracket {spec:?} (expected \"lo:hi\")"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Usage(format!("bracket end {:?} is not a number", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("bracket end {:?} is not a number", parts[1])))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CliError::Usage(format!(
            "invalid bracket {lo}:{hi} (need finite lo < hi)"
        )));
    }
    Ok((lo, hi))
}

fn sweep_csv(table: &SweepTable) -> String {
    let mut csv = String::from("driver,index,re,im,is_real\n");
    for (x, row) in table.grid.iter().zip(&table.rows) {
        for (i, v) in row.values().iter().enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                x,
                i,
                v.re,
                v.im,
                u8::from(row.is_real(i))
            );
        }
    }
    csv
}

/// Self-contained SVG 1.1 plot: one polyline of real parts per eigenvalue
/// index, markers on complexified values, shading where reality is partial.
fn sweep_svg(table: &SweepTable) -> String {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const ML: f64 = 60.0; // left margin
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 40.0;
    let n = table.n;
    let (xlo, xhi) = (table.grid[0], *table.grid.last().unwrap());
    let mut ylo = f64::INFINITY;
    let mut yhi = f64::NEG_INFINITY;
    for row in &table.rows {
        for v in row.values() {
            ylo = ylo.min(v.re);
            yhi = yhi.max(v.re);
        }
    }
    let pad = 0.05 * (yhi - ylo).max(1e-9);
    ylo -= pad;
    yhi += pad;
    let sx = |x: f64| ML + (x - xlo) / (xhi - xlo) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - ylo) / (yhi - ylo) * (H - MT - MB);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    // Shade grid intervals where some eigenvalues have left the real axis.
    let counts: Vec<usize> = table.rows.iter().map(|r| r.real_count()).collect();
    for i in 0..counts.len() - 1 {
        if counts[i] < n || counts[i + 1] < n {
            let x0 = sx(table.grid[i]);
            let x1 = sx(table.grid[i + 1]);
            let _ = writeln!(
                svg,
                r##"<rect x="{:.2}" y="{MT}" width="{:.2}" height="{:.2}" fill="#fce4e4"/>"##,
                x0,
                x1 - x0,
                H - MT - MB
            );
        }
    }
    // Axes.
    let _ = writeln!(
        svg,
        r##"<line x1="{ML}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#444" stroke-width="1"/>"##,
        H - MB,
        W - MR,
        H - MB
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{:.2}" stroke="#444" stroke-width="1"/>"##,
        H - MB
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        sx(xlo),
        H - MB + 18.0,
        xlo
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        sx(xhi),
        H - MB + 18.0,
        xhi
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{:.3}</text>"#,
        ML - 6.0,
        sy(ylo + pad) + 4.0,
        ylo + pad
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{:.3}</text>"#,
        ML - 6.0,
        sy(yhi - pad) + 4.0,
        yhi - pad
    );
    // Branches: real parts, one polyline per eigenvalue index.
    for i in 0..n {
        let mut points = String::new();
        for (x, row) in table.grid.iter().zip(&table.rows) {
            let v = row.values()[i];
            let _ = write!(points, "{:.2},{:.2} ", sx(*x), sy(v.re));
        }
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#2b6cb0" stroke-width="1.5"/>"##,
            points.trim_end()
        );
    }
    // Markers where a value is off the real axis.
    for (x, row) in table.grid.iter().zip(&table.rows) {
        for (i, v) in row.values().iter().enumerate() {
            if !row.is_real(i) {
                let _ = writeln!(
                    svg,
                    r##"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="#c53030"/>"##,
                    sx(*x),
                    sy(v.re)
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<i32, CliError> {
    let dir = resolve_out_dir(&args.output)?;
    let table = match &args.sweep {
        Some(spec) => {
            let spec = parse_sweep(spec)?;
            let depth = inferred_depth(&args.model)?;
            let driver = driver_index(&spec.driver, depth)?;
            if driver != 0 && (args.model.tie.is_some() || args.model.link.is_some()) {
                return Err(CliError::Usage(
                    "with --tie/--link the sweep driver must be lambda".into(),
                ));
            }
            let path = build_path(&args.model, driver)?;
            sweep_with_tol(
                args.model.n,
                &path,
                spec.lo,
                spec.hi,
                spec.steps,
                args.tol_real,
            )?
        }
        None => {
            // Single point: a one-step "sweep" at the lambda value.
            let path = build_path(&args.model, 0)?;
            let x = args.model.lambda.unwrap_or(0.0);
            let h = LatticeHamiltonian::new(args.model.n, &path.params_at(x))?;
            let spectrum = crate::spectra::Spectrum::compute_with_tol(&h, args.tol_real)?;
            SweepTable {
                n: args.model.n,
                path,
                grid: vec![x],
                rows: vec![spectrum],
            }
        }
    };
    let csv_path = dir.join("spectrum.csv");
    std::fs::write(&csv_path, sweep_csv(&table))?;
    let mut written = vec![csv_path.display().to_string()];
    if args.svg {
        if table.grid.len() < 2 {
            return Err(CliError::Usage(
                "--svg needs a sweep with at least two grid points".into(),
            ));
        }
        let svg_path = dir.join("spectrum.svg");
        std::fs::write(&svg_path, sweep_svg(&table))?;
        written.push(svg_path.display().to_string());
    }
    let counts = table.real_counts();
    let min_count = counts.iter().copied().min().unwrap_or(0);
    let max_count = counts.iter().copied().max().unwrap_or(0);
    println!(
        "wrote {}; {} grid point(s), {} eigenvalue(s) each, real count {}",
        written.join(" and "),
        table.grid.len(),
        table.n,
        if min_count == max_count {
            format!("{min_count}")
        } else {
            format!("{min_count}..{max_count}")
        }
    );
    Ok(0)
}

#[derive(Serialize)]
struct VerifyOutput {
    formulas: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduction: Option<ReductionReport>,
}

fn parse_rational_flag(name: &str, value: Option<&String>) -> Result<Rational, CliError> {
    let raw = value.ok_or_else(|| {
        CliError::Usage(format!("--{name} is required for the chosen catalogue model"))
    })?;
    raw.parse().map_err(|_| {
        CliError::Usage(format!(
            "cannot parse --{name} {raw:?} as an exact rational (expected \"num/den\" or an integer)"
        ))
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, CliError> {
    let dir = resolve_out_dir(&args.output)?;
    let model: FormulaModel = args.model.into();
    let mut params = vec![parse_rational_flag("lambda", args.lambda.as_ref())?];
    if model.param_count() >= 2 {
        params.push(parse_rational_flag("mu", args.mu.as_ref())?);
    }
    if model.param_count() >= 3 {
        params.push(parse_rational_flag("nu", args.nu.as_ref())?);
    }
    let formulas = verify_formulas(model, &params)?;
    let reduction = match args.expect_reduces_to {
        Some(target) => Some(verify_reduction(model, &params, target.into())?),
        None => None,
    };
    let ok = formulas.matches && reduction.as_ref().is_none_or(|r| r.matches);
    let output = VerifyOutput {
        formulas,
        reduction,
    };
    let json_path = dir.join("verify.json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&output).expect("report serialization") + "\n",
    )?;
    if ok {
        println!(
            "wrote {}; catalogue {} matches the exact kernel solver",
            json_path.display(),
            output.formulas.model
        );
        Ok(0)
    } else {
        let mut what = Vec::new();
        if !output.formulas.matches {
            what.push(format!(
                "{} catalogue entries differ from the kernel solver",
                output.formulas.mismatches.len()
            ));
        }
        if let Some(r) = &output.reduction {
            if !r.matches {
                what.push(format!(
                    "{} elements fail the reduction onto {}",
                    r.mismatches.len(),
                    r.to
                ));
            }
        }
        println!("wrote {}; MISMATCH: {}", json_path.display(), what.join("; "));
        Ok(3)
    }
}

#[derive(Serialize)]
struct DysonReport {
    sym_residual: f64,
    isospectrality_residual: f64,
}

#[derive(Serialize)]
struct MetricReport {
    n: usize,
    couplings: Vec<f64>,
    basis: BasisSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    select_band: Option<usize>,
    coefficients: Vec<f64>,
    positivity: Positivity,
    min_eigenvalue: f64,
    intertwining_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    quasi_hermiticity_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dyson: Option<DysonReport>,
    charge_involution_residual: f64,
    theta: Vec<Vec<f64>>,
}

fn cmd_metric(args: MetricArgs) -> Result<i32, CliError> {
    let dir = resolve_out_dir(&args.output)?;
    let path = build_path(&args.model, 0)?;
    let x = args.model.lambda.unwrap_or(0.0);
    let params = path.params_at(x);
    let h = LatticeHamiltonian::new(args.model.n, &params)?;
    let (basis, coefficients) = match args.select_band {
        Some(k) => {
            let member = banded_pseudometric(&h, k)?;
            (
                PseudometricBasis {
                    members: vec![member],
                    source: BasisSource::Banded,
                },
                vec![1.0],
            )
        }
        None => {
            let basis = PseudometricBasis::rank_one(&h)?;
            let coefficients = match args.coeffs.unwrap_or(CoeffScheme::Uniform) {
                CoeffScheme::Uniform => vec![1.0; basis.len()],
                CoeffScheme::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
                    let dist = Uniform::from(0.1..2.0);
                    (0..basis.len()).map(|_| dist.sample(&mut rng)).collect()
                }
            };
            (basis, coefficients)
        }
    };
    let metric = assemble_metric(&basis, &coefficients)?;
    let intertwining_residual = dieudonne_residual(&h, &metric.theta);
    let quasi = quasi_hermiticity_residual(&h, &metric.theta).ok();
    let dyson = match metric.positivity {
        Positivity::PositiveDefinite => {
            let d = dyson_factor(&metric, &h)?;
            Some(DysonReport {
                sym_residual: d.sym_residual,
                isospectrality_residual: d.isospectrality_residual,
            })
        }
        _ => None,
    };
    let charge = charge_candidate(&metric.theta, &parity(args.model.n));
    let theta_rows: Vec<Vec<f64>> = (0..metric.n)
        .map(|i| (0..metric.n).map(|j| metric.theta[(i, j)]).collect())
        .collect();
    let report = MetricReport {
        n: args.model.n,
        couplings: params.params().to_vec(),
        basis: metric.source,
        select_band: args.select_band,
        coefficients,
        positivity: metric.positivity,
        min_eigenvalue: metric.min_eigenvalue,
        intertwining_residual,
        quasi_hermiticity_residual: quasi,
        dyson,
        charge_involution_residual: charge.involution_residual,
        theta: theta_rows,
    };
    let json_path = dir.join("metric.json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&report).expect("report serialization") + "\n",
    )?;
    println!(
        "wrote {}; {} (min eigenvalue {:.6e}), intertwining residual {:.3e}",
        json_path.display(),
        metric.positivity,
        metric.min_eigenvalue,
        intertwining_residual
    );
    Ok(0)
}

#[derive(Serialize)]
struct EpReport {
    n: usize,
    bracket_lo: f64,
    bracket_hi: f64,
    location: EPLocation,
    coupling_product_zeros: Vec<f64>,
}

fn cmd_ep(args: EpArgs) -> Result<i32, CliError> {
    let dir = resolve_out_dir(&args.output)?;
    let (lo, hi) = parse_bracket(&args.bracket)?;
    let path = build_path(&args.model, 0)?;
    let location = ep_refine_with_tols(
        args.model.n,
        &path,
        lo,
        hi,
        DEFAULT_BISECTION_TOL,
        args.tol_real,
    )?;
    let report = EpReport {
        n: args.model.n,
        bracket_lo: lo,
        bracket_hi: hi,
        location,
        coupling_product_zeros: symmetrizability_boundary(&path),
    };
    let json_path = dir.join("ep.json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&report).expect("report serialization") + "\n",
    )?;
    println!(
        "wrote {}; merge point at driver value {} (real count {} -> {})",
        json_path.display(),
        report.location.driver_value,
        report.location.count_real_side,
        report.location.count_complex_side
    );
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn run_args(args: &[&str]) -> Result<i32, CliError> {
        let cli = Cli::try_parse_from(args).expect("argument parsing");
        run(cli)
    }

    #[test]
    fn single_point_spectrum_writes_laplacian_csv() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run_args(&[
            "ptlat", "spectrum", "--n", "5", "--depth", "1", "--lambda", "0", "--out", out,
        ])
        .unwrap();
        assert_eq!(code, 0);
        let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "driver,index,re,im,is_real");
        assert_eq!(csv.lines().count(), 6);
        // Lowest Laplacian eigenvalue at n=5: 2 - sqrt(3).
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields[0], "0");
        assert_eq!(fields[1], "0");
        let re: f64 = fields[2].parse().unwrap();
        assert!((re - (2.0 - 3.0f64.sqrt())).abs() < 1e-10);
        assert_eq!(fields[4], "1");
    }

    #[test]
    fn sweeps_write_one_row_per_grid_point_and_eigenvalue() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run_args(&[
            "ptlat", "spectrum", "--n", "11", "--depth", "2", "--tie", "mu=lambda", "--sweep",
            "lambda:-1.2:1.2:21", "--svg", "--out", out,
        ])
        .unwrap();
        assert_eq!(code, 0);
        let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 21 * 11);
        let svg = std::fs::read_to_string(dir.path().join("spectrum.svg")).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\""));
        assert!(svg.contains("<polyline"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let dir_a = TempDir::new().unwrap();
        let dir_b = TempDir::new().unwrap();
        for dir in [&dir_a, &dir_b] {
            let out = dir.path().to_str().unwrap();
            run_args(&[
                "ptlat", "spectrum", "--n", "11", "--link", "mu=lambda+0.25", "--sweep",
                "lambda:0.5:1.0:11", "--out", out,
            ])
            .unwrap();
        }
        let a = std::fs::read(dir_a.path().join("spectrum.csv")).unwrap();
        let b = std::fs::read(dir_b.path().join("spectrum.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn verify_matches_and_writes_json() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run_args(&[
            "ptlat", "verify", "--model", "one", "--lambda", "1/3", "--out", out,
        ])
        .unwrap();
        assert_eq!(code, 0);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap())
                .unwrap();
        assert_eq!(json["formulas"]["matches"], serde_json::Value::Bool(true));
        assert_eq!(json["formulas"]["model"], "one_param");
    }

    #[test]
    fn verify_reduction_mismatch_exits_three() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run_args(&[
            "ptlat",
            "verify",
            "--model",
            "two",
            "--lambda",
            "1/2",
            "--mu",
            "1/3",
            "--expect-reduces-to",
            "one",
            "--out",
            out,
        ])
        .unwrap();
        assert_eq!(code, 3);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap())
                .unwrap();
        assert_eq!(json["formulas"]["matches"], serde_json::Value::Bool(true));
        assert_eq!(json["reduction"]["matches"], serde_json::Value::Bool(false));
    }

    #[test]
    fn metric_at_zero_coupling_reports_the_identity() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run_args(&[
            "ptlat", "metric", "--n", "5", "--lambda", "0", "--coeffs", "uniform", "--out", out,
        ])
        .unwrap();
        assert_eq!(code, 0);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("metric.json")).unwrap())
                .unwrap();
        assert_eq!(json["positivity"], "positive_definite");
        for i in 0..5 {
            for j in 0..5 {
                let v = json["theta"][i][j].as_f64().unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_band_metric_is_reported_indefinite() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run_args(&[
            "ptlat",
            "metric",
            "--n",
            "11",
            "--depth",
            "2",
            "--lambda",
            "0.3",
            "--mu",
            "0.2",
            "--select-band",
            "6",
            "--out",
            out,
        ])
        .unwrap();
        assert_eq!(code, 0);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("metric.json")).unwrap())
                .unwrap();
        assert_eq!(json["positivity"], "indefinite");
        assert_eq!(json["select_band"], 6);
        assert!(json["dyson"].is_null());
    }

    #[test]
    fn metric_on_a_degenerate_spectrum_is_a_numerical_error() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap();
        let err = run_args(&[
            "ptlat", "metric", "--n", "7", "--depth", "1", "--lambda", "1", "--coeffs",
            "uniform", "--out", out,
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn random_coefficients_are_seeded_and_positive() {
        let dir_a = TempDir::new().unwrap();
        let dir_b = TempDir::new().unwrap();
        for dir in [&dir_a, &dir_b] {
            let out = dir.path().to_str().unwrap();
            run_args(&[
                "ptlat", "metric", "--n", "7", "--depth", "1", "--lambda", "0.4", "--coeffs",
                "random", "--seed", "42", "--out", out,
            ])
            .unwrap();
        }
        let a = std::fs::read(dir_a.path().join("metric.json")).unwrap();
        let b = std::fs::read(dir_b.path().join("metric.json")).unwrap();
        assert_eq!(a, b);
        let json: serde_json::Value = serde_json::from_slice(&a).unwrap();
        assert_eq!(json["positivity"], "positive_definite");
        for c in json["coefficients"].as_array().unwrap() {
            assert!(c.as_f64().unwrap() > 0.0);
        }
    }

    #[test]
    fn ep_refines_the_tied_merge_point() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run_args(&[
            "ptlat", "ep", "--n", "11", "--depth", "2", "--tie", "mu=lambda", "--bracket",
            "0.9:1.1", "--out", out,
        ])
        .unwrap();
        assert_eq!(code, 0);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("ep.json")).unwrap())
                .unwrap();
        let star = json["location"]["driver_value"].as_f64().unwrap();
        assert!((star - 1.0).abs() < 1e-6);
        assert_eq!(json["coupling_product_zeros"][0].as_f64().unwrap(), -1.0);
    }

    #[test]
    fn ep_on_a_fully_real_bracket_is_a_numerical_error() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap();
        let err = run_args(&[
            "ptlat",
            "ep",
            "--n",
            "11",
            "--link",
            "mu=lambda+0.25",
            "--bracket",
            "0.0:0.5",
            "--out",
            out,
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn usage_errors_exit_one() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap();
        let err = run_args(&[
            "ptlat", "spectrum", "--n", "11", "--sweep", "lambda:2:1:10", "--out", out,
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let err = run_args(&[
            "ptlat", "ep", "--n", "11", "--tie", "mu=nu", "--bracket", "0:1", "--out", out,
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let err = run_args(&[
            "ptlat", "verify", "--model", "two", "--lambda", "1/2", "--out", out,
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let err = run_args(&[
            "ptlat", "verify", "--model", "one", "--lambda", "0.5", "--out", out,
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn depth_inference_follows_the_coupling_flags() {
        let model = ModelArgs {
            n: 11,
            depth: None,
            lambda: Some(0.1),
            mu: None,
            nu: Some(0.3),
            tie: None,
            link: None,
        };
        assert_eq!(inferred_depth(&model).unwrap(), 3);
        let model = ModelArgs {
            n: 11,
            depth: Some(1),
            lambda: Some(0.1),
            mu: Some(0.2),
            nu: None,
            tie: None,
            link: None,
        };
        assert!(matches!(inferred_depth(&model), Err(CliError::Usage(_))));
    }
}
