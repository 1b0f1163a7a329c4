//! `gsrisk validate|compute|compare|asymptotics <config.json> [flags]`.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure, 3 Monte Carlo
//! tolerance failure.

pub mod config;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::distributions::ClaimLaw;
use crate::error::Error;
use crate::gerber_shiu::{asymptotic_bound, cl_ruin_expansion, GsSolver, Penalty};
use crate::montecarlo::{estimate_ladder, Functional, LadderEstimate};
use crate::spectral::SpectralData;
use crate::RiskModel;

pub use config::{ConfigError, Loaded};
pub use table::{Format, Row};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_MC: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "gsrisk", version = concat!(env!("CARGO_PKG_VERSION"), ", tables gsrisk-table/1"), about = "Gerber-Shiu functions for risk processes with phase-type perturbed heavy-tailed claims")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, clap::Args)]
struct Output {
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check a configuration and print a model summary.
    Validate { config: PathBuf },
    /// Base value, first-order correction and corrected approximation per u.
    Compute {
        config: PathBuf,
        /// `start:stop:step` (inclusive) or a single value.
        #[arg(long)]
        u_grid: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Corrected approximation against a common-random-number simulation
    /// over a ladder of heavy-tail weights.
    Compare {
        config: PathBuf,
        #[arg(long, default_value = "0.01,0.05,0.1")]
        eps_ladder: String,
        /// Paths per surplus level (overrides the config).
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        u_grid: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Tail ratio corrected(u) / H̄_e(u) against the asymptotic bound.
    Asymptotics {
        config: PathBuf,
        #[arg(long)]
        u_grid: Option<String>,
        #[command(flatten)]
        output: Output,
    },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonStochasticAlpha { .. }
        | Error::InvalidSubintensity(_)
        | Error::DimensionMismatch(_)
        | Error::InfiniteMean(_)
        | Error::InvalidParameter(_)
        | Error::InvalidComponent(_)
        | Error::SafetyLoadingViolated { .. }
        | Error::PreconditionViolated(_) => EXIT_INPUT,
        Error::InsufficientPaths { .. } => EXIT_MC,
        _ => EXIT_NUMERIC,
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match &e {
            ConfigError::Model(err) => exit_code(err),
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: format!("{}: {e}", config::error_name(&e)),
        }
    }
}

fn input(message: String) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message,
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: format!("IoError: {e}"),
    }
}

/// Base value and correction for either pipeline.
#[allow(clippy::large_enum_variant)]
enum Engine {
    General(Box<GsSolver>),
    /// `q = 0`, `λ_+ = 0`, `ω ≡ a`.
    CramerLundberg {
        model: RiskModel,
        a: f64,
    },
}

impl Engine {
    fn new(loaded: &Loaded, u_needed: f64) -> Result<Self, Failure> {
        let m = &loaded.model;
        if m.q > 0.0 {
            let solver = GsSolver::new(m, loaded.penalty.clone(), loaded.grid(u_needed))?;
            return Ok(Engine::General(Box::new(solver)));
        }
        match loaded.penalty {
            Penalty::Constant { a } if m.lambda_plus == 0.0 => Ok(Engine::CramerLundberg { model: m.clone(), a }),
            _ => Err(Error::PreconditionViolated(
                "q = 0 is supported for the Cramér-Lundberg model (gain_rate = 0) with a constant penalty".into(),
            )
            .into()),
        }
    }

    fn eval(&self, u: f64) -> Result<(f64, f64), Error> {
        match self {
            Engine::General(s) => Ok((s.base(u)?, s.correction(u)?)),
            Engine::CramerLundberg { model, a } => {
                let r = cl_ruin_expansion(model, u)?;
                Ok((a * r.psi, a * r.correction))
            }
        }
    }

    fn model(&self) -> &RiskModel {
        match self {
            Engine::General(s) => s.model(),
            Engine::CramerLundberg { model, .. } => model,
        }
    }
}

fn u_grid(spec: Option<&str>, loaded: &Loaded) -> Result<Vec<f64>, Failure> {
    let default = format!("0:{}:{}", loaded.u_max(), (loaded.u_max() / 10.0).max(1e-9));
    table::parse_u_grid(spec.unwrap_or(&default)).map_err(input)
}

fn emit(rows: &[Row], output: &Output, stdout: &mut dyn Write) -> Result<(), Failure> {
    let format = match output.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    match &output.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(io)?;
            table::write(rows, format, std::io::BufWriter::new(file)).map_err(io)
        }
        None => table::write(rows, format, stdout).map_err(io),
    }
}

fn tail_ratio(model: &RiskModel, u: f64, corrected: f64) -> Option<f64> {
    let t = model.claims.heavy.equilibrium_tail(u);
    (t > 0.0).then(|| corrected / t)
}

fn validate(path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let loaded = Loaded::from_path(path)?;
    let m = &loaded.model;
    let det = m.det_polynomial()?;
    let roots = det.genuine_roots()?;
    let nonneg: Vec<_> = roots.iter().filter(|r| r.re > -1e-12).collect();
    let w = |e: std::io::Error| io(e);
    writeln!(out, "model: valid").map_err(w)?;
    writeln!(
        out,
        "rates: c = {}, claim = {}, gain = {}, q = {}, eps = {}",
        m.c,
        m.lambda_minus,
        m.lambda_plus,
        m.q,
        m.eps()
    )
    .map_err(w)?;
    writeln!(
        out,
        "means: light claim = {}, heavy claim = {}, gain = {}",
        table::sig12(m.mu_p()),
        table::sig12(m.mu_h()),
        table::sig12(m.mean_gain())
    )
    .map_err(w)?;
    writeln!(
        out,
        "loading margin: base = {}, mixture = {}",
        table::sig12(m.base_loading_margin()),
        table::sig12(m.loading_margin())
    )
    .map_err(w)?;
    writeln!(
        out,
        "phases: N+ = {}, N- = {}, det degree = {}",
        m.n_plus(),
        m.n_minus(),
        det.degree()
    )
    .map_err(w)?;
    let label = if m.q > 0.0 {
        "positive roots"
    } else {
        "roots with Re >= 0"
    };
    let list: Vec<String> = nonneg
        .iter()
        .map(|r| {
            if r.im.abs() > 1e-12 {
                format!("{}{:+}i", table::sig12(r.re), table::sig12(r.im))
            } else {
                table::sig12(r.re)
            }
        })
        .collect();
    writeln!(out, "{label}: {} [{}]", nonneg.len(), list.join(", ")).map_err(w)?;
    writeln!(out, "penalty bound: {}", table::sig12(loaded.penalty.bound())).map_err(w)?;
    if m.q > 0.0 {
        let sp = SpectralData::new(m, &det)?;
        writeln!(out, "cond(Lambda): {}", table::sig12(sp.cond_lambda)).map_err(w)?;
    }
    Ok(())
}

fn compute(path: &Path, grid: Option<&str>, output: &Output, stdout: &mut dyn Write) -> Result<(), Failure> {
    let loaded = Loaded::from_path(path)?;
    let us = u_grid(grid, &loaded)?;
    let engine = Engine::new(&loaded, us.iter().copied().fold(0.0, f64::max))?;
    let eps = loaded.model.eps();
    let mut rows = Vec::with_capacity(us.len());
    for &u in &us {
        let (base, correction) = engine.eval(u)?;
        let corrected = base + eps * correction;
        rows.push(Row {
            u,
            eps,
            base,
            correction,
            corrected,
            mc_mean: None,
            mc_half_width: None,
            tail_ratio: tail_ratio(engine.model(), u, corrected),
        });
    }
    emit(&rows, output, stdout)
}

/// Least-squares slope of `ln y` against `ln x`; `None` below two points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Error-scaling summary for one surplus level.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    pub u: f64,
    /// `|corrected - MC|` slope over points above the noise floor.
    pub corrected_slope: Option<f64>,
    /// `|base - MC|` slope over points above the noise floor.
    pub base_slope: Option<f64>,
    /// Ladder points whose corrected error is within 3 half-widths.
    pub noise_floor: Vec<f64>,
}

/// Simulation estimate `φ_0 + (MC_ε - MC_0)` and its half-width, per ε.
pub fn ladder_points(ladder: &LadderEstimate, base: f64, scale: f64) -> Vec<(f64, f64, f64)> {
    ladder
        .points
        .iter()
        .map(|p| (p.eps, base + scale * p.diff.mean, scale * p.diff.half_width_95))
        .collect()
}

pub fn slope_report(u: f64, base: f64, correction: f64, points: &[(f64, f64, f64)]) -> SlopeReport {
    let mut corrected = Vec::new();
    let mut first = Vec::new();
    let mut noise_floor = Vec::new();
    for &(eps, mc, hw) in points {
        let err = (base + eps * correction - mc).abs();
        if err > 3.0 * hw {
            corrected.push((eps, err));
        } else {
            noise_floor.push(eps);
        }
        let gap = (base - mc).abs();
        if gap > 3.0 * hw {
            first.push((eps, gap));
        }
    }
    SlopeReport {
        u,
        corrected_slope: loglog_slope(&corrected),
        base_slope: loglog_slope(&first),
        noise_floor,
    }
}

fn fmt_slope(s: Option<f64>) -> String {
    s.map_or("unavailable".into(), |v| format!("{v:.3}"))
}

fn compare(
    path: &Path,
    ladder_spec: &str,
    paths: Option<u64>,
    grid: Option<&str>,
    output: &Output,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let loaded = Loaded::from_path(path)?;
    let eps = table::parse_list(ladder_spec).map_err(input)?;
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e <= crate::gerber_shiu::EPS_MAX)) {
        return Err(input(format!(
            "eps ladder values must lie in (0, {}]",
            crate::gerber_shiu::EPS_MAX
        )));
    }
    let us = u_grid(grid, &loaded)?;
    let engine = Engine::new(&loaded, us.iter().copied().fold(0.0, f64::max))?;
    let (functional, scale) = match &engine {
        Engine::General(_) => (Functional::GerberShiu(loaded.penalty.clone()), 1.0),
        Engine::CramerLundberg { a, .. } => (Functional::Ruin, *a),
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &u in &us {
        let (base, correction) = engine.eval(u)?;
        let cfg = loaded.mc(u, paths)?;
        let ladder = estimate_ladder(engine.model(), &eps, &functional, u, &cfg)?;
        let pts = ladder_points(&ladder, base, scale);
        for &(e, mc, hw) in &pts {
            let corrected = base + e * correction;
            rows.push(Row {
                u,
                eps: e,
                base,
                correction,
                corrected,
                mc_mean: Some(mc),
                mc_half_width: Some(hw),
                tail_ratio: tail_ratio(engine.model(), u, corrected),
            });
        }
        reports.push((slope_report(u, base, correction, &pts), ladder));
    }
    emit(&rows, output, stdout)?;
    for (r, ladder) in &reports {
        let strata: Vec<String> = ladder
            .points
            .iter()
            .map(|p| format!("eps={}: {}/{}/{}", p.eps, p.strata[0], p.strata[1], p.strata[2]))
            .collect();
        writeln!(
            stderr,
            "u = {}: slope |corrected - MC| = {}, slope |base - MC| = {}, noise floor at eps {:?}; heavy-claim strata 0/1/>=2 {}",
            r.u,
            fmt_slope(r.corrected_slope),
            fmt_slope(r.base_slope),
            r.noise_floor,
            strata.join(", ")
        )
        .map_err(io)?;
        if r.noise_floor.len() == eps.len() {
            writeln!(
                stderr,
                "u = {}: noise floor: every point is within 3 half-widths; add paths",
                r.u
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

/// Limit of `tail_ratio` from the last two rows, assuming a `1/u` approach.
pub fn ratio_limit(rows: &[Row]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.tail_ratio.map(|t| (r.u, t))).collect();
    let [.., (u1, r1), (u2, r2)] = pts[..] else {
        return None;
    };
    (u2 > u1 && u1 > 0.0).then(|| (u2 * r2 - u1 * r1) / (u2 - u1))
}

fn asymptotics(
    path: &Path,
    grid: Option<&str>,
    output: &Output,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let loaded = Loaded::from_path(path)?;
    let us = u_grid(grid, &loaded)?;
    let engine = Engine::new(&loaded, us.iter().copied().fold(0.0, f64::max))?;
    let m = engine.model();
    let eps = m.eps();
    let mut rows = Vec::new();
    for &u in &us {
        let (base, correction) = engine.eval(u)?;
        let corrected = base + eps * correction;
        rows.push(Row {
            u,
            eps,
            base,
            correction,
            corrected,
            mc_mean: None,
            mc_half_width: None,
            tail_ratio: tail_ratio(m, u, corrected),
        });
    }
    emit(&rows, output, stdout)?;
    let det = m.det_polynomial()?;
    let spectral = SpectralData::new(m, &det)?;
    let scale = crate::scale::base_scale_matrix(m, &det)?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.tail_ratio).collect();
    let drift: Vec<String> = ratios
        .windows(2)
        .map(|w| format!("{:.3}", (w[1] / w[0] - 1.0).abs()))
        .collect();
    writeln!(stderr, "relative change of successive ratios: [{}]", drift.join(", ")).map_err(io)?;
    match asymptotic_bound(m, &spectral, &scale, &loaded.penalty) {
        Ok(bound) => {
            writeln!(stderr, "asymptotic bound: {}", table::sig12(bound)).map_err(io)?;
            // The bound holds for the limsup; finite-u ratios may sit above it.
            if let Some(limit) = ratio_limit(&rows) {
                writeln!(stderr, "extrapolated limit of the ratio: {}", table::sig12(limit)).map_err(io)?;
                if limit > bound * (1.0 + 1e-2) + 1e-12 {
                    writeln!(stderr, "VIOLATION: extrapolated ratio exceeds the bound").map_err(io)?;
                }
            }
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

/// Run the command line in-process, writing to the given streams.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
            let _ = if code == EXIT_OK {
                write!(stdout, "{}", e.render())
            } else {
                write!(stderr, "{}", e.render())
            };
            return code;
        }
    };
    let result = match &cli.cmd {
        Cmd::Validate { config } => validate(config, stdout),
        Cmd::Compute { config, u_grid, output } => compute(config, u_grid.as_deref(), output, stdout),
        Cmd::Compare {
            config,
            eps_ladder,
            paths,
            u_grid,
            output,
        } => compare(config, eps_ladder, *paths, u_grid.as_deref(), output, stdout, stderr),
        Cmd::Asymptotics { config, u_grid, output } => asymptotics(config, u_grid.as_deref(), output, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

/// Entry point of the `gsrisk` binary.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run_with(args, &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}
