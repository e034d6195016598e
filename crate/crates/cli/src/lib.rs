//! Argument handling, config files and command dispatch for `grushin`.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use radial_grushin::dynamics::{integrate_cartesian, integrate_planar, k_vanishes, radius, Covector, DynOptions, Point};
use radial_grushin::export::{
    parse_point, to_csv, to_json, CsvRecord, PlanarRow, TrajectoryRow,
};
use radial_grushin::grushin_r::{conjugate_time, distance_r, geodesic_fan};
use radial_grushin::riemannian::{experimental_conjugate_search, integrate_cylindrical, riemannian_cut_time};
use radial_grushin::singular_synthesis::{
    ball_boundary_from_sigma, ball_box_bounds, cut_from_sigma, distance_sigma_pair, period, period_crosscheck,
    revolve, SynthesisResult,
};
use radial_grushin::verify::{format_table, run_suite};
use radial_grushin::{GrushinError, Profile};

/// Environment variable overriding the integrator's relative tolerance.
pub const TOL_ENV: &str = "GRUSHIN_TOL";

#[derive(Debug, Parser)]
#[command(name = "grushin", version, about = "Geodesics, cut loci and distances for radial Grushin structures")]
pub struct Cli {
    /// Output format for tabular commands; scalar results are always JSON.
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Coords {
    Cartesian,
    Cylindrical,
    Planar,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a geodesic and export its samples.
    Geodesic(GeodesicArgs),
    /// Cut time and cut point of a unit-speed geodesic.
    CutTime(CutTimeArgs),
    /// Distance between two points, exact or bounded.
    Distance(DistanceArgs),
    /// Boundary of the ball around a point of the axis, and its revolution mesh.
    Ball(BallArgs),
    /// Turning point and period of the geodesics leaving the axis.
    Period(PeriodArgs),
    /// Conjugate time (f = r) or an uncertified sign-change search.
    Conjugate(ConjugateArgs),
    /// Run the invariant suite and print a pass/fail table.
    Verify(VerifyArgs),
    /// Fan of f = r geodesics sharing w0, sampled up to their common cut time.
    Fan(FanArgs),
    /// Run a command described by a TOML config file.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    #[arg(long)]
    pub profile: String,
    #[arg(long, allow_hyphen_values = true)]
    pub q0: String,
    #[arg(long, allow_hyphen_values = true)]
    pub lam: String,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, value_enum, default_value_t = Coords::Cartesian)]
    pub coords: Coords,
    /// Export this many equal intervals instead of the integrator's own steps.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Rescale the covector onto the unit shell 2E = 1.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct CutTimeArgs {
    #[arg(long)]
    pub profile: String,
    #[arg(long, allow_hyphen_values = true)]
    pub q0: String,
    /// Rescaled onto the unit shell before use.
    #[arg(long, allow_hyphen_values = true)]
    pub lam: String,
    /// Horizon for the conjectured cut time at Riemannian points.
    #[arg(long, default_value_t = 1000.0)]
    pub t_max: f64,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long)]
    pub profile: String,
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    #[arg(long, allow_hyphen_values = true)]
    pub to: String,
}

#[derive(Debug, Args)]
pub struct BallArgs {
    #[arg(long)]
    pub profile: String,
    /// A point of the axis.
    #[arg(long, allow_hyphen_values = true)]
    pub center: String,
    #[arg(long)]
    pub radius: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Angular samples of the revolution mesh.
    #[arg(long, default_value_t = 48)]
    pub theta_samples: usize,
    /// Also write the revolution mesh here (CSV "theta,w0,x,y,z").
    #[arg(long)]
    pub mesh_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PeriodArgs {
    #[arg(long)]
    pub profile: String,
    #[arg(long, allow_hyphen_values = true)]
    pub w0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub energy: f64,
    /// Also report the first-return time of the integrated trajectory.
    #[arg(long)]
    pub crosscheck: bool,
}

#[derive(Debug, Args)]
pub struct ConjugateArgs {
    #[arg(long)]
    pub profile: String,
    #[arg(long, allow_hyphen_values = true)]
    pub q0: String,
    /// Rescaled onto the unit shell before use.
    #[arg(long, allow_hyphen_values = true)]
    pub lam: String,
    #[arg(long, default_value_t = 20.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
    /// Allow the uncertified search for profiles other than f = r.
    #[arg(long)]
    pub experimental: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Defaults to every builtin profile.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FanArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q0: String,
    #[arg(long, allow_hyphen_values = true)]
    pub w0: f64,
    #[arg(long, default_value_t = 16)]
    pub dirs: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
}

/// A command stored in a TOML file:
///
/// ```toml
/// profile = "monomial:alpha=2"
/// command = "geodesic"
/// format = "json"
/// rtol = 1e-11
///
/// [args]
/// q0 = [1.0, 0.0, 0.0]
/// lam = [0.0, 1.0, 0.5]
/// t-max = 6.0
/// ```
///
/// `args` keys are the command's long flags; `true` switches a flag on.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Option<String>,
    pub command: String,
    #[serde(default)]
    pub args: toml::Table,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub rtol: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message().trim())))?;
        if let Some(r) = cfg.rtol {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::Usage(format!("config: rtol must be positive, got {r}")));
            }
        }
        if cfg.command == "run" {
            return Err(CliError::Usage("config: command 'run' cannot be nested".into()));
        }
        Ok(cfg)
    }

    /// Equivalent command line, so configs go through the same validation as flags.
    pub fn to_argv(&self) -> Result<Vec<String>, CliError> {
        let mut argv = vec!["grushin".to_string(), self.command.clone()];
        if let Some(p) = &self.profile {
            argv.push("--profile".into());
            argv.push(p.clone());
        }
        if let Some(f) = self.format {
            argv.push("--format".into());
            argv.push(match f {
                Format::Csv => "csv".into(),
                Format::Json => "json".into(),
            });
        }
        if let Some(o) = &self.output {
            argv.push("--output".into());
            argv.push(o.display().to_string());
        }
        for (key, value) in &self.args {
            let flag = format!("--{key}");
            match value {
                toml::Value::Boolean(true) => argv.push(flag),
                toml::Value::Boolean(false) => {}
                other => {
                    argv.push(flag);
                    argv.push(toml_scalar(key, other)?);
                }
            }
        }
        Ok(argv)
    }
}

fn toml_number(key: &str, v: &toml::Value) -> Result<String, CliError> {
    match v {
        toml::Value::Float(x) => Ok(format!("{x:?}")),
        toml::Value::Integer(i) => Ok(i.to_string()),
        _ => Err(CliError::Usage(format!("config: '{key}' must hold numbers"))),
    }
}

fn toml_scalar(key: &str, v: &toml::Value) -> Result<String, CliError> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Array(items) => Ok(items
            .iter()
            .map(|x| toml_number(key, x))
            .collect::<Result<Vec<_>, _>>()?
            .join(",")),
        other => toml_number(key, other),
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Grushin(GrushinError),
    Io(String),
    /// Only `verify` returns this; the table has already been written.
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Grushin(e) if e.is_input() => 2,
            CliError::Grushin(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::VerifyFailed(_) => "verify",
            CliError::Grushin(e) if e.is_input() => "input",
            CliError::Grushin(_) => "numerical",
        }
    }

    /// One-line JSON for standard error.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Grushin(e) => write!(f, "{e}"),
            CliError::VerifyFailed(n) => write!(f, "{n} invariant checks failed"),
        }
    }
}

impl From<GrushinError> for CliError {
    fn from(e: GrushinError) -> Self {
        CliError::Grushin(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn profile(spec: &str) -> CliResult<Profile> {
    spec.parse::<Profile>().map_err(|e| CliError::Usage(format!("profile: {e}")))
}

fn point(flag: &str, s: &str) -> CliResult<Point> {
    parse_point(s).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn covector(s: &str) -> CliResult<Covector> {
    let [u, v, w] = point("lam", s)?;
    Ok(Covector::new(u, v, w))
}

fn positive(flag: &str, x: f64) -> CliResult<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Usage(format!("--{flag} must be positive and finite, got {x}")))
    }
}

/// Integrator options, honoring an explicit override first and then `GRUSHIN_TOL`.
pub fn dyn_options(rtol: Option<f64>) -> CliResult<DynOptions> {
    let rtol = match rtol {
        Some(r) => Some(r),
        None => match std::env::var(TOL_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("{TOL_ENV}: '{s}' is not a number")))?,
            ),
            Err(_) => None,
        },
    };
    match rtol {
        None => Ok(DynOptions::default()),
        Some(r) if r > 0.0 && r.is_finite() => Ok(DynOptions::with_rtol(r)),
        Some(r) => Err(CliError::Usage(format!("tolerance must be positive and finite, got {r}"))),
    }
}

fn table<T: CsvRecord + Serialize>(rows: &[T], format: Format) -> String {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows) + "\n",
    }
}

fn geodesic(a: &GeodesicArgs, format: Format, opts: &DynOptions) -> CliResult<String> {
    let p = profile(&a.profile)?;
    let q0 = point("q0", &a.q0)?;
    let mut lam = covector(&a.lam)?;
    positive("t-max", a.t_max)?;
    if a.normalize {
        lam = lam.normalized(&p, &q0)?;
    }
    let times = |t_end: f64, own: Vec<f64>| match a.samples {
        Some(n) => (0..=n.max(1)).map(|i| t_end * i as f64 / n.max(1) as f64).collect(),
        None => own,
    };
    Ok(match a.coords {
        Coords::Cartesian => {
            let tr = integrate_cartesian(&p, &q0, &lam, a.t_max, opts)?;
            let rows: Vec<TrajectoryRow> = match a.samples {
                Some(n) => tr.uniform_samples(n),
                None => tr.samples(),
            }
            .iter()
            .map(|(t, s)| TrajectoryRow::new(*t, s, &p))
            .collect();
            table(&rows, format)
        }
        Coords::Cylindrical => {
            let g = integrate_cylindrical(&p, &q0, &lam, a.t_max, opts)?;
            let own = g.samples().iter().map(|s| s.t).collect();
            let rows: Vec<_> = times(a.t_max, own).into_iter().map(|t| g.eval(t)).collect();
            table(&rows, format)
        }
        Coords::Planar => {
            if !k_vanishes(&q0, &lam) {
                return Err(GrushinError::InvalidInput(format!(
                    "planar output needs K = 0, got K = {:e}",
                    lam.k(&q0)
                ))
                .into());
            }
            let r0 = radius(&q0);
            // on the axis the plane is the one containing (u0, v0)
            let rhodot0 = if r0 > 0.0 { lam.l(&q0) / r0 } else { lam.u0.hypot(lam.v0) };
            let tr = integrate_planar(&p, r0, rhodot0, q0[2], lam.w0, lam.energy2(&p, &q0), a.t_max, opts)?;
            let own = tr.samples().iter().map(|(t, _)| *t).collect();
            let rows: Vec<PlanarRow> = times(a.t_max, own)
                .into_iter()
                .map(|t| PlanarRow::new(t, &tr.eval(t)))
                .collect();
            table(&rows, format)
        }
    })
}

fn cut_time(a: &CutTimeArgs, opts: &DynOptions) -> CliResult<String> {
    let p = profile(&a.profile)?;
    let q0 = point("q0", &a.q0)?;
    positive("t-max", a.t_max)?;
    let lam = covector(&a.lam)?.normalized(&p, &q0)?;
    let res = if radius(&q0) == 0.0 {
        let mut r: SynthesisResult = cut_from_sigma(&p, 0.5, lam.w0)?;
        if let Some(c) = r.cut_point.as_mut() {
            c[2] += q0[2];
        }
        r
    } else {
        riemannian_cut_time(&p, &q0, &lam, a.t_max, opts)?
    };
    Ok(to_json(&res) + "\n")
}

fn distance(a: &DistanceArgs) -> CliResult<String> {
    let p = profile(&a.profile)?;
    let from = point("from", &a.from)?;
    let to = point("to", &a.to)?;
    let res = if p.is_linear() {
        distance_r(&from, &to)?
    } else if radius(&from) == 0.0 || radius(&to) == 0.0 {
        distance_sigma_pair(&p, &from, &to)?
    } else {
        ball_box_bounds(&p, &from, &to)?.result
    };
    Ok(to_json(&res) + "\n")
}

fn ball(a: &BallArgs, format: Format) -> CliResult<String> {
    let p = profile(&a.profile)?;
    let center = point("center", &a.center)?;
    if radius(&center) != 0.0 {
        return Err(CliError::Usage(format!("--center {:?} is not on the axis", center)));
    }
    positive("radius", a.radius)?;
    let mut boundary = ball_boundary_from_sigma(&p, a.radius, a.samples)?;
    if let Some(path) = &a.mesh_out {
        let mesh = revolve(&boundary, &center, a.theta_samples);
        write_file(path, &table(&mesh, format))?;
    }
    for b in &mut boundary {
        b.z += center[2];
    }
    Ok(table(&boundary, format))
}

#[derive(Serialize)]
struct PeriodReport {
    rho_star: f64,
    period: f64,
    w0: f64,
    energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    period_ode: Option<f64>,
}

fn period_cmd(a: &PeriodArgs) -> CliResult<String> {
    let p = profile(&a.profile)?;
    let (tp, t_ode) = if a.crosscheck {
        let (tp, t) = period_crosscheck(&p, a.energy, a.w0)?;
        (tp, Some(t))
    } else {
        (period(&p, a.energy, a.w0)?, None)
    };
    Ok(to_json(&PeriodReport {
        rho_star: tp.rho_star,
        period: tp.period,
        w0: tp.w0,
        energy: tp.energy,
        period_ode: t_ode,
    }) + "\n")
}

#[derive(Serialize)]
struct ConjugateReport {
    #[serde(with = "radial_grushin::export::extended_f64")]
    t_con: f64,
    certified: bool,
}

fn conjugate(a: &ConjugateArgs, opts: &DynOptions) -> CliResult<String> {
    let p = profile(&a.profile)?;
    let q0 = point("q0", &a.q0)?;
    positive("t-max", a.t_max)?;
    let lam = covector(&a.lam)?.normalized(&p, &q0)?;
    if p.is_linear() && !a.experimental {
        let t_con = conjugate_time(&q0, &lam)?;
        return Ok(to_json(&ConjugateReport { t_con, certified: true }) + "\n");
    }
    if !a.experimental {
        return Err(CliError::Usage(format!(
            "conjugate times for {p} are not known; pass --experimental for an uncertified search"
        )));
    }
    let brackets = experimental_conjugate_search(&p, &q0, &lam, a.t_max, a.grid, opts)?;
    Ok(to_json(&brackets) + "\n")
}

fn verify(a: &VerifyArgs, format: Format) -> CliResult<(String, usize)> {
    let profiles = match &a.profile {
        Some(s) => vec![profile(s)?],
        None => Profile::builtins(),
    };
    let rows: Vec<_> = profiles.iter().flat_map(|p| run_suite(p, a.seed)).collect();
    let failed = rows.iter().filter(|r| !r.passed).count();
    let text = match format {
        Format::Csv => format_table(&rows),
        Format::Json => to_json(&rows) + "\n",
    };
    Ok((text, failed))
}

fn fan(a: &FanArgs, format: Format) -> CliResult<String> {
    let q0 = point("q0", &a.q0)?;
    Ok(table(&geodesic_fan(&q0, a.w0, a.dirs, a.samples)?, format))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs one parsed command, writing its export to `out` unless `--output` is set.
pub fn execute<W: Write>(cli: &Cli, out: &mut W) -> CliResult<()> {
    execute_with(cli, None, out)
}

fn execute_with<W: Write>(cli: &Cli, rtol: Option<f64>, out: &mut W) -> CliResult<()> {
    let opts = dyn_options(rtol)?;
    let mut failed = 0;
    let text = match &cli.command {
        Command::Geodesic(a) => geodesic(a, cli.format, &opts)?,
        Command::CutTime(a) => cut_time(a, &opts)?,
        Command::Distance(a) => distance(a)?,
        Command::Ball(a) => ball(a, cli.format)?,
        Command::Period(a) => period_cmd(a)?,
        Command::Conjugate(a) => conjugate(a, &opts)?,
        Command::Verify(a) => {
            let (t, f) = verify(a, cli.format)?;
            failed = f;
            t
        }
        Command::Fan(a) => fan(a, cli.format)?,
        Command::Run(a) => {
            let text = std::fs::read_to_string(&a.config)
                .map_err(|e| CliError::Io(format!("{}: {e}", a.config.display())))?;
            let cfg = RunConfig::parse(&text)?;
            let inner = Cli::try_parse_from(cfg.to_argv()?).map_err(|e| CliError::Usage(first_line(&e)))?;
            return execute_with(&inner, cfg.rtol, out);
        }
    };
    match &cli.output {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?,
    }
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}

/// First line of a clap error, without its "error: " prefix.
pub fn first_line(e: &clap::Error) -> String {
    let s = e.to_string();
    let line = s.lines().next().unwrap_or("").trim();
    line.strip_prefix("error: ").unwrap_or(line).to_string()
}
