//! Command-line front end: config merging, the verification campaigns and
//! their CSV/JSON artifacts.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::modified_airy::{self, AiryBc};
use crate::ns::{self, FlowParams, Forcing, ForcingShape, ResolventSweep};
use crate::os::{self, GapVerdict, OsParams};
use crate::par;
use crate::profile::{self, ProfileKind, ProfileSpec, ShearProfile};
use crate::rayleigh;
use crate::report::EstimateReport;

/// Exit code for a run whose checks passed.
pub const EXIT_PASS: i32 = 0;
/// Exit code for a quantitative failure.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for usage and config errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n: Option<usize>,
    pub map_scale: Option<f64>,
}

/// Parameter lists; a command falls back to its own default for any list
/// left unset.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamLists {
    pub nu: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub n: Option<Vec<i64>>,
    pub alpha: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub grids: Option<Vec<usize>>,
    pub n_max: Option<usize>,
    pub samples: Option<usize>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed gap between fitted and expected exponents.
    pub exponent: f64,
    /// Allowed `max/min` ratio spread.
    pub spread: f64,
    /// Largest accepted solver residual.
    pub residual: f64,
    /// Relative Picard increment at convergence.
    pub nonlinear: f64,
    /// Relative `X_nu` gap accepted against the Newton oracle.
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { exponent: 0.1, spread: 10.0, residual: 1e-6, nonlinear: 1e-10, oracle: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

/// Everything a run needs besides the subcommand's own scalar flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: ProfileSpec,
    pub grid: GridSpec,
    pub params: ParamLists,
    pub tolerances: Tolerances,
    pub output: OutputSpec,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: ProfileSpec::default(),
            grid: GridSpec::default(),
            params: ParamLists::default(),
            tolerances: Tolerances::default(),
            output: OutputSpec::default(),
            seed: 7,
            threads: None,
        }
    }
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let empty = [
            ("nu", p.nu.as_ref().map(Vec::len)),
            ("theta", p.theta.as_ref().map(Vec::len)),
            ("n", p.n.as_ref().map(Vec::len)),
            ("alpha", p.alpha.as_ref().map(Vec::len)),
            ("eps", p.eps.as_ref().map(Vec::len)),
            ("grids", p.grids.as_ref().map(Vec::len)),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, l)| *l == Some(0)) {
            return Err(Error::Config(format!("parameter list `{name}` is empty")));
        }
        let t = &self.tolerances;
        if ![t.exponent, t.spread, t.residual, t.nonlinear, t.oracle].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.grid.n.is_some_and(|n| n < 8) || self.grid.map_scale.is_some_and(|l| !(l > 0.0)) {
            return Err(Error::Config("grid needs n >= 8 and a positive map scale".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    fn grid(&self, n: usize, map_scale: f64) -> Result<Grid> {
        Grid::rational(self.grid.n.unwrap_or(n), self.grid.map_scale.unwrap_or(map_scale))
    }
}

#[derive(Debug, Parser)]
#[command(name = "oss-stab", version, about = "Orr-Sommerfeld and Navier-Stokes resolvent verification")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML or JSON run config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; `-` writes to stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; defaults from the file extension, else CSV.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Worker threads; overrides OSS_STAB_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Grid size N.
    #[arg(long = "grid-n", global = true)]
    pub grid_n: Option<usize>,
    /// Map scale L of the rational grid.
    #[arg(long, global = true)]
    pub map_scale: Option<f64>,
    /// Background profile.
    #[arg(long, global = true, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Profile steepness, or decay rate for table profiles.
    #[arg(long, global = true)]
    pub profile_param: Option<f64>,
    /// Two-column `(Y, U)` CSV for table profiles.
    #[arg(long, global = true)]
    pub table: Option<String>,
    /// Seed for randomised data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProfileArg {
    Tanh,
    Exp,
    Table,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ForcingArg {
    /// `e^{-Y}`
    Exp,
    /// `(1+Y)^{-3}`
    Algebraic,
    /// `Y e^{-Y}`
    Linexp,
    /// viscous-layer bump
    Layer,
}

impl From<ForcingArg> for modified_airy::Forcing {
    fn from(f: ForcingArg) -> Self {
        match f {
            ForcingArg::Exp => Self::Exponential,
            ForcingArg::Algebraic => Self::Algebraic,
            ForcingArg::Linexp => Self::LinearExponential,
            ForcingArg::Layer => Self::Layer,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WallArg {
    Nonslip,
    Artificial,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AiryBcArg {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Streamwise,
    Normal,
    Mixed,
}

impl From<ShapeArg> for ForcingShape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Streamwise => Self::Streamwise,
            ShapeArg::Normal => Self::Normal,
            ShapeArg::Mixed => Self::Mixed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Checks the structural assumptions on U.
    VerifyProfile {
        #[arg(long, value_enum)]
        kind: Option<ProfileArg>,
        #[arg(long, default_value_t = 40.0)]
        y_max: f64,
        #[arg(long, default_value_t = 4001)]
        points: usize,
        #[arg(long, default_value_t = 100.0)]
        decay_limit: f64,
    },
    /// Solves one Orr-Sommerfeld problem.
    ///
    /// CSV columns: Y, re_phi, im_phi, re_w, im_w; trailer `# residual,<value>`.
    SolveOs {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long = "f", value_enum, default_value = "exp")]
        forcing: ForcingArg,
        #[arg(long, value_enum, default_value = "nonslip")]
        wall: WallArg,
    },
    /// Modified Airy estimates and exponent fits over an eps sweep.
    VerifyAiry {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Comma list.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long = "f", value_enum, default_value = "layer")]
        forcing: ForcingArg,
        #[arg(long, value_enum, default_value = "dirichlet")]
        bc: AiryBcArg,
    },
    /// Rayleigh estimate on random data and the homogeneous mode.
    VerifyRayleigh {
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Builds the boundary corrector.
    ///
    /// CSV columns: Y, re_phi_b, im_phi_b, re_w_b, im_w_b.
    Corrector {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
    },
    /// Smallest singular value of the non-slip operator under refinement.
    ScanSpectrum {
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        eps: Option<String>,
        /// Grid sizes, comma list.
        #[arg(long)]
        grids: Option<String>,
    },
    /// Resolvent estimates in the three frequency regimes.
    VerifyResolvent {
        #[arg(long)]
        nu: Option<String>,
        #[arg(long)]
        theta: Option<f64>,
        /// Comma list or inclusive range `a..b`.
        #[arg(long)]
        n: Option<String>,
        #[arg(long, value_enum, default_value = "streamwise")]
        forcing: ShapeArg,
        /// Period of the large-period block.
        #[arg(long, default_value_t = 1.0)]
        large_theta: f64,
        #[arg(long)]
        no_large_theta: bool,
        #[arg(long)]
        no_high_frequency: bool,
    },
    /// Picard solve of the truncated nonlinear problem.
    NonlinearSolve {
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        n_max: Option<usize>,
        /// Forced mode.
        #[arg(long, default_value_t = 1)]
        mode: i64,
        #[arg(long, value_enum, default_value = "mixed")]
        shape: ShapeArg,
        /// Fraction of the measured contraction margin.
        #[arg(long, default_value_t = 0.1)]
        fraction: f64,
        /// Explicit forcing amplitude; skips the margin measurement.
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Also run the Newton oracle and compare.
        #[arg(long)]
        newton: bool,
    },
}

/// Tabular artifact: header, rows, and `# key,value` trailer lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub trailer: Vec<(String, String)>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), ..Self::default() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.trailer.push((key.to_string(), value.to_string()));
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let mut out = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
            .map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in &self.trailer {
            let _ = writeln!(out, "# {k},{v}");
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut body = String::new();
        let mut trailer = Vec::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(rest) => {
                    let (k, v) = rest.split_once(',').unwrap_or((rest, ""));
                    trailer.push((k.to_string(), v.to_string()));
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows, trailer })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }

    /// Column `name` parsed as numbers.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| r[j].parse::<f64>().map_err(|e| Error::Config(format!("column `{name}`: {e}"))))
            .collect()
    }

    pub fn trailer_value(&self, key: &str) -> Option<&str> {
        self.trailer.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Result of one subcommand.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub verdict: String,
    pub json: Value,
    pub table: Table,
    /// Extra lines printed before the verdict.
    pub blocks: Vec<String>,
}

fn reports_table(reports: &[EstimateReport]) -> Table {
    let mut t = Table::new(&["name", "parameter", "param", "value", "ratio"]);
    for r in reports {
        for i in 0..r.params.len() {
            t.push([r.name.clone(), r.parameter.clone(), num(r.params[i]), num(r.values[i]), num(r.ratios[i])]);
        }
        let fit = r.fitted_exponent.map(num).unwrap_or_else(|| "none".into());
        t.note(&r.name, format!("pass={} spread={} exponent={}", r.pass, num(r.spread), fit));
    }
    t
}

fn report_line(r: &EstimateReport) -> String {
    let fit = r.fitted_exponent.map(|s| format!(", exponent {s:.3}")).unwrap_or_default();
    format!("{}: {} (spread {:.3}{fit})", r.name, if r.pass { "pass" } else { "FAIL" }, r.spread)
}

/// Comma list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::Config(format!("empty list {s:?}")));
    }
    Ok(v)
}

/// Comma list of integers or an inclusive range `a..b`.
pub fn parse_int_list(s: &str) -> Result<Vec<i64>> {
    if let Some((a, b)) = s.split_once("..") {
        let parse = |t: &str| t.trim().parse::<i64>().map_err(|e| Error::Config(format!("bad range {s:?}: {e}")));
        let (a, b) = (parse(a)?, parse(b)?);
        if b < a {
            return Err(Error::Config(format!("empty range {s:?}")));
        }
        return Ok((a..=b).collect());
    }
    let v: Vec<i64> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<i64>().map_err(|e| Error::Config(format!("bad integer {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::Config(format!("empty list {s:?}")));
    }
    Ok(v)
}

fn pick<T: Clone>(flag: Option<T>, config: &Option<T>, default: T) -> T {
    flag.or_else(|| config.clone()).unwrap_or(default)
}

fn list_flag(flag: &Option<String>) -> Result<Option<Vec<f64>>> {
    flag.as_deref().map(parse_list).transpose()
}

/// Config file merged with the global flags.
pub fn effective_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(k) = g.profile {
        cfg.profile.kind = match k {
            ProfileArg::Tanh => ProfileKind::Tanh,
            ProfileArg::Exp => ProfileKind::Exp,
            ProfileArg::Table => ProfileKind::Table,
        };
    }
    if let Some(s) = g.profile_param {
        cfg.profile.params = vec![s];
    }
    if g.table.is_some() {
        cfg.profile.table = g.table.clone();
    }
    cfg.grid.n = g.grid_n.or(cfg.grid.n);
    cfg.grid.map_scale = g.map_scale.or(cfg.grid.map_scale);
    cfg.seed = g.seed.unwrap_or(cfg.seed);
    cfg.output.path = g.out.clone().or(cfg.output.path);
    cfg.output.format = g.format.or(cfg.output.format);
    cfg.threads = match g.threads {
        Some(n) => Some(n),
        None => par::threads_from_env()?.or(cfg.threads),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn usage_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::InvalidParameter(_) | Error::CompatibilityViolated(_))
}

/// Parses `argv`, runs the subcommand, writes its artifact and prints the
/// verdict. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            for b in &out.blocks {
                println!("{b}");
            }
            println!("{}: {}", if out.pass { "PASS" } else { "FAIL" }, out.verdict);
            if out.pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if usage_error(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAIL
            }
        }
    }
}

/// Runs the parsed command and writes its artifact.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let cfg = effective_config(&cli.global)?;
    par::configure_threads(cfg.threads)?;
    let p = cfg.profile.build()?;
    let out = dispatch(&cli.command, &cfg, &p)?;
    if let Some(path) = &cfg.output.path {
        write_artifact(&out, path, cfg.output.format)?;
    }
    Ok(out)
}

/// Writes the table as CSV or the JSON value, by format or extension.
pub fn write_artifact(out: &Outcome, path: &Path, format: Option<OutputFormat>) -> Result<()> {
    let format = format.unwrap_or(if path.extension().is_some_and(|e| e == "json") {
        OutputFormat::Json
    } else {
        OutputFormat::Csv
    });
    let text = match format {
        OutputFormat::Csv => out.table.to_csv()?,
        OutputFormat::Json => serde_json::to_string_pretty(&out.json)? + "\n",
    };
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
    } else {
        fs::write(path, text)?;
    }
    Ok(())
}

fn dispatch(cmd: &Command, cfg: &RunConfig, p: &ShearProfile) -> Result<Outcome> {
    let prm = &cfg.params;
    let tol = &cfg.tolerances;
    match cmd {
        Command::VerifyProfile { kind, y_max, points, decay_limit } => {
            let p = match kind {
                Some(k) => {
                    let spec = ProfileSpec {
                        kind: match k {
                            ProfileArg::Tanh => ProfileKind::Tanh,
                            ProfileArg::Exp => ProfileKind::Exp,
                            ProfileArg::Table => ProfileKind::Table,
                        },
                        ..cfg.profile.clone()
                    };
                    spec.build()?
                }
                None => p.clone(),
            };
            if *points < 2 {
                return Err(Error::Config("need at least two sample points".into()));
            }
            let r = profile::verify_structure(&p, &profile::dense_sample(*y_max, *points), *decay_limit);
            let mut t = Table::new(&["quantity", "value"]);
            for (k, v) in [
                ("lower_constant", r.lower_constant),
                ("decay_bound", r.decay_bound),
                ("curvature_bound", r.curvature_bound),
                ("u_at_ymax", r.u_at_ymax),
                ("uprime0", r.uprime0),
                ("y_max", r.y_max),
            ] {
                t.push([k.to_string(), num(v)]);
            }
            for f in &r.failures {
                t.note("failure", f);
            }
            Ok(Outcome {
                pass: r.pass,
                verdict: if r.pass {
                    format!("profile {:?} satisfies the structural assumptions", p.kind())
                } else {
                    r.failures.join("; ")
                },
                json: serde_json::to_value(&r)?,
                table: t,
                blocks: vec![],
            })
        }
        Command::SolveOs { alpha, eps, forcing, wall } => {
            let g = cfg.grid(192, 2.0)?;
            let params = OsParams::new(*alpha, *eps)?;
            let fm: modified_airy::Forcing = (*forcing).into();
            let f = g.sample_real(|y| fm.value(y, *eps));
            let s = match wall {
                WallArg::Nonslip => os::solve_os_nonslip(p, &params, &f, &g)?,
                WallArg::Artificial => os::solve_os_artificial(p, &params, &f, &g)?,
            };
            let mut t = Table::new(&["Y", "re_phi", "im_phi", "re_w", "im_w"]);
            for (i, y) in g.nodes().iter().enumerate() {
                t.push([num(*y), num(s.phi[i].re), num(s.phi[i].im), num(s.w[i].re), num(s.w[i].im)]);
            }
            t.note("residual", num(s.residual));
            let pass = s.residual <= tol.residual;
            Ok(Outcome {
                pass,
                verdict: format!("{:?} solve, residual {:.3e}", s.path, s.residual),
                json: json!({
                    "alpha": alpha, "eps": eps, "path": s.path, "residual": s.residual,
                    "resolution": s.resolution, "norms": s.norms, "overlap_gap": s.overlap_gap,
                    "Y": g.nodes(),
                    "phi": s.phi.iter().map(|v| [v.re, v.im]).collect::<Vec<_>>(),
                    "w": s.w.iter().map(|v| [v.re, v.im]).collect::<Vec<_>>(),
                }),
                table: t,
                blocks: vec![],
            })
        }
        Command::VerifyAiry { alpha, eps, forcing, bc } => {
            let g = cfg.grid(256, 2.0)?;
            let sweep = pick(list_flag(eps)?, &prm.eps, vec![1e-2, 1e-3, 1e-4, 1e-5]);
            let bc = match bc {
                AiryBcArg::Dirichlet => AiryBc::DirichletW,
                AiryBcArg::Neumann => AiryBc::NeumannW,
            };
            let reports = modified_airy::verify_airy_lemma(p, *alpha, &sweep, (*forcing).into(), bc, &g)?;
            Ok(reports_outcome(reports, "modified Airy estimates"))
        }
        Command::VerifyRayleigh { alpha, samples } => {
            let g = cfg.grid(192, 2.0)?;
            let alphas = pick(list_flag(alpha)?, &prm.alpha, vec![0.1, 0.2, 0.5, 1.0]);
            let samples = pick(*samples, &prm.samples, 8);
            let rep = rayleigh::verify_rayleigh_estimate(p, &alphas, samples, cfg.seed, &g)?;
            let homog = par::try_map(&alphas, |&a| rayleigh::homogeneous_rayleigh(p, a, &g))?;
            let mut t = reports_table(std::slice::from_ref(&rep));
            let mut pass = rep.pass;
            let mut rows = Vec::new();
            for (a, h) in alphas.iter().zip(&homog) {
                pass &= h.residual <= tol.residual;
                t.note(&format!("homogeneous alpha={a}"), format!("residual={} c_e={}", num(h.residual), h.c_e));
                rows.push(json!({"alpha": a, "residual": h.residual, "c_e": [h.c_e.re, h.c_e.im]}));
            }
            Ok(Outcome {
                pass,
                verdict: report_line(&rep),
                json: json!({"estimate": rep, "homogeneous": rows}),
                table: t,
                blocks: vec![],
            })
        }
        Command::Corrector { alpha, eps } => {
            let g = cfg.grid(256, 2.0)?;
            let c = os::boundary_corrector(p, &OsParams::new(*alpha, *eps)?, &g)?;
            let mut t = Table::new(&["Y", "re_phi_b", "im_phi_b", "re_w_b", "im_w_b"]);
            for (i, y) in g.nodes().iter().enumerate() {
                t.push([num(*y), num(c.phi_b[i].re), num(c.phi_b[i].im), num(c.w_b[i].re), num(c.w_b[i].im)]);
            }
            let (b0, b1) = c.boundary;
            let bc_err = b0.norm().max((b1 - 1.0).norm());
            t.note("branch", format!("{:?}", c.branch));
            t.note("boundary_error", num(bc_err));
            t.note("residual", num(c.residual));
            t.note("denominator", num(c.denominator.norm()));
            t.note("floor", num(c.floor));
            let pass = bc_err <= 1e-8 && c.residual <= tol.residual;
            Ok(Outcome {
                pass,
                verdict: format!(
                    "{:?} corrector, boundary error {bc_err:.2e}, residual {:.2e}",
                    c.branch, c.residual
                ),
                json: json!({
                    "alpha": alpha, "eps": eps, "branch": c.branch, "boundary_error": bc_err,
                    "residual": c.residual, "denominator": [c.denominator.re, c.denominator.im],
                    "floor": c.floor, "derivative_gap": c.derivative_gap,
                }),
                table: t,
                blocks: vec![],
            })
        }
        Command::ScanSpectrum { alpha, eps, grids } => {
            let alphas = pick(list_flag(alpha)?, &prm.alpha, vec![0.0, 0.5, 1.0, 2.0]);
            let epss = pick(list_flag(eps)?, &prm.eps, vec![1e-2, 1e-3, 1e-4]);
            let grids: Vec<usize> = match grids {
                Some(s) => parse_int_list(s)?.into_iter().map(|v| v.max(0) as usize).collect(),
                None => prm.grids.clone().unwrap_or_else(|| vec![96, 160, 256]),
            };
            let scale = cfg.grid.map_scale.unwrap_or(2.0);
            let points: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| epss.iter().map(move |&e| (a, e))).collect();
            let reports = par::try_map(&points, |&(a, e)| os::spectral_gap(p, &OsParams::new(a, e)?, &grids, scale))?;
            let mut header = vec!["alpha".to_string(), "eps".to_string()];
            header.extend(grids.iter().map(|n| format!("sigma_n{n}")));
            header.extend(["verdict".to_string(), "evidence_only".to_string()]);
            let mut t = Table { header, ..Table::default() };
            let mut pass = true;
            for r in &reports {
                let mut row = vec![num(r.alpha), num(r.eps)];
                row.extend(r.sigma_min.iter().map(|s| num(*s)));
                row.extend([format!("{:?}", r.verdict), r.evidence_only.to_string()]);
                t.push(row);
                pass &= r.evidence_only || r.verdict == GapVerdict::Open;
            }
            let open = reports.iter().filter(|r| r.verdict == GapVerdict::Open).count();
            Ok(Outcome {
                pass,
                verdict: format!("{open}/{} points gap-open", reports.len()),
                json: serde_json::to_value(&reports)?,
                table: t,
                blocks: vec![],
            })
        }
        Command::VerifyResolvent { nu, theta, n, forcing, large_theta, no_large_theta, no_high_frequency } => {
            let g = cfg.grid(192, 8.0)?;
            let sweep = ResolventSweep {
                nus: pick(list_flag(nu)?, &prm.nu, vec![1e-3, 1e-4, 1e-5]),
                theta: theta.or_else(|| prm.theta.as_ref().and_then(|t| t.first().copied())).unwrap_or(0.05),
                n_list: match n {
                    Some(s) => parse_int_list(s)?,
                    None => prm.n.clone().unwrap_or_else(|| vec![1, 2, 3, 4]),
                },
                high_frequency: !no_high_frequency,
                large_theta: (!no_large_theta).then_some(*large_theta),
                forcing: (*forcing).into(),
            };
            let r = ns::verify_resolvent_regimes(p, &sweep, &g)?;
            let mut t = Table::new(&[
                "regime", "nu", "theta", "n", "n_tilde", "u_l2", "du_l2", "f_l2", "lhs", "ratio", "divergence",
                "energy_gap",
            ]);
            for row in &r.rows {
                t.push([
                    format!("{:?}", row.regime),
                    num(row.nu),
                    num(row.theta),
                    row.n.to_string(),
                    num(row.n_tilde),
                    num(row.u_l2),
                    num(row.du_l2),
                    num(row.f_l2),
                    num(row.lhs),
                    num(row.ratio),
                    num(row.divergence),
                    num(row.energy_gap),
                ]);
            }
            let mut blocks = Vec::new();
            for (regime, rep) in &r.regimes {
                t.note(&rep.name, format!("pass={} spread={}", rep.pass, num(rep.spread)));
                let mut b = format!("[{regime:?}] {}", report_line(rep));
                for row in r.rows.iter().filter(|x| x.regime == *regime) {
                    let _ = write!(b, "\n  nu={:e} theta={} n={} ratio={:.4e}", row.nu, row.theta, row.n, row.ratio);
                }
                blocks.push(b);
            }
            Ok(Outcome {
                pass: r.pass,
                verdict: format!("{} regime blocks", r.regimes.len()),
                json: serde_json::to_value(&r)?,
                table: t,
                blocks,
            })
        }
        Command::NonlinearSolve { nu, theta, n_max, mode, shape, fraction, amplitude, samples, max_iter, newton } => {
            let g = cfg.grid(160, 8.0)?;
            let flow = FlowParams::new(
                nu.or_else(|| prm.nu.as_ref().and_then(|v| v.first().copied())).unwrap_or(1e-3),
                theta.or_else(|| prm.theta.as_ref().and_then(|v| v.first().copied())).unwrap_or(0.05),
                pick(*n_max, &prm.n_max, 4),
            )?;
            if mode.unsigned_abs() as usize > flow.n_max || *mode == 0 {
                return Err(Error::Config(format!("forced mode {mode} outside 1..={}", flow.n_max)));
            }
            let unit = Forcing::single_mode(&g, flow.nu, *mode, 1.0, (*shape).into())?;
            let (amp, contraction) = match amplitude {
                Some(a) => (*a, None),
                None => {
                    let c = ns::measure_contraction(p, &flow, &g, pick(*samples, &prm.samples, 8), cfg.seed)?;
                    (ns::margin_amplitude(p, &flow, &unit, c.k, *fraction, &g)?, Some(c))
                }
            };
            let f = unit.scaled(amp);
            let sol = ns::solve_nonlinear(p, &flow, &f, &g, tol.nonlinear, pick(*max_iter, &prm.max_iter, 60))?;
            let mut t = Table::new(&["iteration", "increment"]);
            for (i, h) in sol.history.iter().enumerate() {
                t.push([(i + 1).to_string(), num(*h)]);
            }
            let f_l2 = f.l2(&g, flow.nu, flow.theta);
            let c_thm = ns::theorem_constant(sol.x_norm.total, flow.nu, f_l2);
            t.note("amplitude", num(amp));
            t.note("x_norm", num(sol.x_norm.total));
            t.note("theorem_constant", num(c_thm));
            t.note("truncation_tail", num(sol.truncation_tail));
            let mut pass = true;
            let mut oracle = None;
            if *newton {
                let nw = ns::newton_oracle(p, &flow, &f, &g, 30)?;
                let gap = ns::x_norm(&nw.state.minus(&sol.state), &g).total / ns::x_norm(&nw.state, &g).total.max(f64::MIN_POSITIVE);
                t.note("newton_gap", num(gap));
                pass &= gap <= tol.oracle;
                oracle = Some(json!({"iterations": nw.iterations, "history": nw.history, "gap": gap}));
            }
            Ok(Outcome {
                pass,
                verdict: format!(
                    "converged in {} iterations, x_norm {:.4e}, C {:.4e}{}",
                    sol.iterations,
                    sol.x_norm.total,
                    c_thm,
                    if sol.truncation_warning { " (truncation tail above 1e-6)" } else { "" }
                ),
                json: json!({
                    "flow": flow, "amplitude": amp, "f_l2": f_l2, "theorem_constant": c_thm,
                    "contraction": contraction, "history": sol.history, "x_norm": sol.x_norm,
                    "truncation_tail": sol.truncation_tail, "newton": oracle, "state": sol.state,
                }),
                table: t,
                blocks: vec![],
            })
        }
    }
}

fn reports_outcome(reports: Vec<EstimateReport>, what: &str) -> Outcome {
    let pass = reports.iter().all(|r| r.pass);
    let failed = reports.iter().filter(|r| !r.pass).count();
    Outcome {
        pass,
        verdict: format!("{what}: {}/{} checks pass", reports.len() - failed, reports.len()),
        json: serde_json::to_value(&reports).unwrap_or(Value::Null),
        table: reports_table(&reports),
        blocks: reports.iter().map(report_line).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("1e-3, 1e-4").unwrap(), vec![1e-3, 1e-4]);
        assert_eq!(parse_int_list("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_int_list("2,5").unwrap(), vec![2, 5]);
        assert!(parse_list("").is_err());
        assert!(parse_int_list("4..1").is_err());
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(&["Y", "re_phi"]);
        t.push([num(0.5), num(-1.25e-7)]);
        t.push([num(2.0), num(f64::MIN_POSITIVE)]);
        t.note("residual", num(3e-12));
        let back = Table::from_csv(&t.to_csv().unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("re_phi").unwrap(), vec![-1.25e-7, f64::MIN_POSITIVE]);
        assert_eq!(back.trailer_value("residual"), Some("3e-12"));
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.params.nu = Some(vec![]);
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.tolerances.spread = 0.0;
        assert!(c.validate().is_err());
        let toml = "seed = 3\n[params]\nnu = [1e-3]\n[tolerances]\nspread = 5.0\n";
        let c: RunConfig = toml::from_str(toml).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.tolerances.spread, 5.0);
        assert_eq!(c.tolerances.exponent, 0.1);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    fn outcome(args: &[&str]) -> Result<Outcome> {
        let argv = std::iter::once("oss-stab").chain(args.iter().copied());
        execute(&Cli::try_parse_from(argv).unwrap())
    }

    fn scratch(name: &str) -> PathBuf {
        std::env::temp_dir().join(format!("oss-stab-{}-{name}", std::process::id()))
    }

    #[test]
    fn verify_profile_passes() {
        assert!(outcome(&["verify-profile"]).unwrap().pass);
        assert!(outcome(&["--profile", "exp", "verify-profile"]).unwrap().pass);
        assert_eq!(run(["oss-stab", "verify-profile", "--points", "2001"]), EXIT_PASS);
    }

    #[test]
    fn solve_os_artifact() {
        let path = scratch("solve.csv");
        let args = ["--grid-n", "96", "--out", path.to_str().unwrap(), "solve-os", "--alpha", "1", "--eps", "1e-3"];
        let out = outcome(&args).unwrap();
        assert!(out.pass);
        let t = Table::read(&path).unwrap();
        assert_eq!(t.header, ["Y", "re_phi", "im_phi", "re_w", "im_w"]);
        assert_eq!(t.rows.len(), 96);
        let residual: f64 = t.trailer_value("residual").unwrap().parse().unwrap();
        assert!(residual < 1e-8);
        assert_eq!(outcome(&args).unwrap().table, out.table);
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn resolvent_prints_three_regimes() {
        let out = outcome(&["--grid-n", "96", "verify-resolvent", "--nu", "1e-3", "--n", "1,2"]).unwrap();
        assert_eq!(out.blocks.len(), 3);
        for tag in ["[LowFreq]", "[HighFreq]", "[LargeTheta]"] {
            assert!(out.blocks.iter().any(|b| b.starts_with(tag)), "{tag}");
        }
    }

    #[test]
    fn toml_config_and_flag_override() {
        let path = scratch("run.toml");
        fs::write(&path, "seed = 11\n[profile]\nkind = \"exp\"\n[grid]\nn = 64\n").unwrap();
        let cli = Cli::try_parse_from(["oss-stab", "--config", path.to_str().unwrap(), "--grid-n", "80", "verify-profile"]).unwrap();
        let cfg = effective_config(&cli.global).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.profile.kind, ProfileKind::Exp);
        assert_eq!(cfg.grid.n, Some(80));
        fs::remove_file(path).unwrap();
    }

    #[test]
    fn bad_thread_counts() {
        assert!(matches!(par::parse_threads("0"), Err(Error::Config(_))));
        assert!(matches!(par::parse_threads("many"), Err(Error::Config(_))));
        assert_eq!(par::parse_threads(" 3 ").unwrap(), Some(3));
        assert_eq!(par::parse_threads("").unwrap(), None);
        assert_eq!(run(["oss-stab", "--threads", "0", "verify-profile"]), EXIT_USAGE);
        assert_eq!(run(["oss-stab", "no-such-command"]), EXIT_USAGE);
    }
}
