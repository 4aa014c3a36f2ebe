//! The `dilato` command line: instance generation, dilation construction, verification
//! sweeps and characteristic-function reports.
//!
//! Exit codes: 0 when every check passes or is skipped with a reason, 1 on a failed check or a
//! construction error, 2 on bad input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::ando::{build_ando_tuple, fundamental_ops};
use crate::douglas::{build_douglas_data, build_douglas_pair, douglas_degree, verify_douglas};
use crate::error::Error;
use crate::hardy::LinearOperator;
use crate::instance::{read_pair, to_json_matrix, InstanceFile, InstanceMeta};
use crate::linalg::{c64, identity, CMat, C64};
use crate::model::charfn::{char_eval, char_triple_from, interior_grid, BOUNDARY_SAMPLES};
use crate::model::coincidence::{search_coincidence, DEFAULT_ANGLES};
use crate::pairs::{random_pair, CommutingPair, Scheme};
use crate::report::{Bound, Check, SuiteReport};
use crate::schaffer::{build_schaffer_pair, compress_to_s, verify_schaffer};
use crate::suite::{run_batch, run_suite, InstanceReport, Suite, SuiteConfig, DEFAULT_DEGREE};

pub const DEGREE_ENV: &str = "DILATO_DEFAULT_N";
/// θ samples per CSV plot table.
pub const PLOT_SAMPLES: usize = 256;
/// Non-pure `Θ` is sampled just inside the circle, where it is still defined.
pub const PLOT_RADIUS_NON_PURE: f64 = 0.999;

#[derive(Debug, Parser)]
#[command(name = "dilato", version, about = "Explicit Andô dilations of commuting contraction pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded commuting contraction pair as a pair-v1 instance file.
    Generate(GenerateArgs),
    /// Build a Schäffer- or Douglas-model dilation and report its residuals.
    Dilate(DilateArgs),
    /// Run verification suites on an instance file or a seeded batch.
    Verify(VerifyArgs),
    /// Characteristic function samples and triple; optionally compare two instances.
    Char(CharArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Schaffer,
    Douglas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Poly,
    Rotation,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Poly => Scheme::PolyInOneMatrix,
            SchemeArg::Rotation => Scheme::DiagonalPlusRotation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Schaffer,
    Douglas,
    Uniqueness,
    Model,
    Bcl,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Schaffer => Suite::Schaffer,
            SuiteArg::Douglas => Suite::Douglas,
            SuiteArg::Uniqueness => Suite::Uniqueness,
            SuiteArg::Model => Suite::Model,
            SuiteArg::Bcl => Suite::Bcl,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Degree bound N of the truncated Hardy spaces (default 16, or $DILATO_DEFAULT_N).
    #[arg(short = 'N', long = "degree")]
    pub degree: Option<usize>,
    /// Replace every residual threshold below 0.5 with this value.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "poly")]
    pub scheme: SchemeArg,
    /// Instead of a fresh pair, write a seeded unitary conjugate of this instance.
    #[arg(long, value_name = "INSTANCE")]
    pub conjugate: Option<PathBuf>,
    /// Instance file to write; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DilateArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "schaffer")]
    pub model: ModelKind,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Instance file; omit when using --random.
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    /// Verify this many seeded instances instead of a file.
    #[arg(long, value_name = "COUNT")]
    pub random: Option<usize>,
    /// Largest dimension in a --random batch; instance i has dimension 1 + i mod dim.
    #[arg(long, default_value_t = 6)]
    pub dim: usize,
    /// Base seed for --random (instance i uses seed + i) and for auxiliary randomness.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fix the generation scheme of a --random batch; both alternate otherwise.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CharArgs {
    pub instance: PathBuf,
    /// Search for a coincidence witness between this instance and the first.
    #[arg(long, value_name = "INSTANCE")]
    pub compare: Option<PathBuf>,
    /// Write θ ↦ singular values of Θ(r e^{iθ}) as CSV.
    #[arg(long, value_name = "CSV")]
    pub emit_plot_data: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

/// Settings shared by every subcommand once flags and environment are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub degree: usize,
    pub tol: Option<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(common: &Common) -> Result<Self, CliError> {
        let degree = match common.degree {
            Some(n) => n,
            None => match std::env::var(DEGREE_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| input(Error::InvalidConfig(format!("{DEGREE_ENV}={v:?} is not a count"))))?,
                Err(_) => DEFAULT_DEGREE,
            },
        };
        if degree < 2 {
            return Err(input(Error::InvalidConfig(format!("degree bound must be at least 2, got {degree}"))));
        }
        if let Some(t) = common.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(input(Error::InvalidConfig(format!("--tol must be positive, got {t}"))));
            }
        }
        Ok(Self { degree, tol: common.tol, format: common.format, out: common.out.clone() })
    }

    /// Apply `--tol` to residual checks; norm bounds such as `‖F‖ ≤ 1` keep their thresholds.
    pub fn adjust(&self, checks: &mut [Check]) {
        if let Some(t) = self.tol {
            for c in checks.iter_mut().filter(|c| c.bound == Bound::AtMost && c.threshold < 0.5) {
                c.threshold = t;
                c.passed = c.value <= t;
            }
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Input(Error),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "input error: {e}"),
            CliError::Run(e) => write!(f, "error: {e}"),
        }
    }
}

fn input(e: Error) -> CliError {
    CliError::Input(e)
}

fn run_err(e: Error) -> CliError {
    CliError::Run(e)
}

/// A rendered command result.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub passed: bool,
}

impl Outcome {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(&self.json).expect("reports serialize") + "\n",
            Format::Text => self.text.clone(),
        }
    }
}

fn emit(body: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, body).map_err(|e| input(e.into())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<CommutingPair, CliError> {
    read_pair(path).map_err(input)
}

fn dense(op: &dyn LinearOperator) -> CMat {
    op.apply(&identity(op.ncols()))
}

fn checks_text(checks: &[Check]) -> String {
    checks.iter().map(|c| c.line() + "\n").collect()
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<Outcome, CliError> {
    let (pair, meta) = match &args.conjugate {
        Some(path) => {
            let base = load(path)?;
            let (pair, _) = crate::model::coincidence::conjugated(&base, args.seed).map_err(run_err)?;
            (pair, InstanceMeta { seed: Some(args.seed), scheme: None })
        }
        None => {
            if args.dim == 0 {
                return Err(input(Error::InvalidConfig("--dim must be positive".into())));
            }
            let scheme = Scheme::from(args.scheme);
            (random_pair(args.dim, args.seed, scheme), InstanceMeta { seed: Some(args.seed), scheme: Some(scheme) })
        }
    };
    let file = InstanceFile::from_pair(&pair, Some(meta));
    let commutator = crate::linalg::fro(&(pair.t1() * pair.t2() - pair.t2() * pair.t1()));
    let norms = [crate::linalg::op_norm(pair.t1()), crate::linalg::op_norm(pair.t2())];
    let text =
        format!("dim {}  commutator {:.3e}  ‖T1‖ {:.6}  ‖T2‖ {:.6}\n", pair.dim(), commutator, norms[0], norms[1]);
    Ok(Outcome { json: serde_json::to_value(&file).expect("instance serializes"), text, passed: commutator <= 1e-12 })
}

pub fn cmd_dilate(args: &DilateArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pair = load(&args.instance)?;
    let n = cfg.degree;
    let (mut doc, mut checks) = match args.model {
        ModelKind::Schaffer => {
            let tuple = build_ando_tuple(&pair).map_err(run_err)?;
            let fund = fundamental_ops(&pair, &tuple);
            let dil = build_schaffer_pair(&pair, &tuple, n).map_err(run_err)?;
            let (s1, s2) = compress_to_s(&dil, &fund, n);
            let checks = verify_schaffer(&pair, &tuple, &dil, &fund);
            let doc = json!({
                "model": "schaffer",
                "degree": n,
                "dims": { "h": dil.h_dim, "f": dil.f_dim, "defect": dil.d_dim, "space": dil.space_dim() },
                "matrices": {
                    "v1": to_json_matrix(&dil.v1),
                    "v2": to_json_matrix(&dil.v2),
                    "vs": to_json_matrix(&dil.vs),
                    "pi_lambda": to_json_matrix(&dil.pi_lambda),
                    "s1": to_json_matrix(&s1),
                    "s2": to_json_matrix(&s2),
                    "f1": to_json_matrix(&fund.f1),
                    "f2": to_json_matrix(&fund.f2),
                },
            });
            (doc, checks)
        }
        ModelKind::Douglas => {
            let data = build_douglas_data(&pair).map_err(run_err)?;
            let degree = douglas_degree(&pair, &data, n).map_err(run_err)?;
            let dil = build_douglas_pair(&pair, &data, degree).map_err(run_err)?;
            let checks = verify_douglas(&pair, &data, &dil);
            let doc = json!({
                "model": "douglas",
                "degree": degree,
                "dims": { "h": dil.h_dim, "hardy_fiber": dil.f_dim, "defect_adjoint": dil.d_dim, "r": dil.r_dim },
                "matrices": {
                    "v1d": to_json_matrix(&dense(&dil.v1d)),
                    "v2d": to_json_matrix(&dense(&dil.v2d)),
                    "pi_d": to_json_matrix(&dil.pi_d),
                    "pi_tilde": to_json_matrix(&dil.pi_tilde),
                    "gamma": to_json_matrix(&dil.gamma),
                    "x1": to_json_matrix(&data.x1),
                    "x2": to_json_matrix(&data.x2),
                    "g1": to_json_matrix(&data.g1),
                    "g2": to_json_matrix(&data.g2),
                },
            });
            (doc, checks)
        }
    };
    cfg.adjust(&mut checks);
    let passed = checks.iter().all(|c| c.passed);
    doc["checks"] = serde_json::to_value(&checks).expect("checks serialize");
    doc["passed"] = json!(passed);
    let mut text = format!("{} dilation, N = {}\n", doc["model"].as_str().unwrap(), doc["degree"]);
    let _ = writeln!(text, "dims {}", doc["dims"]);
    text += &checks_text(&checks);
    Ok(Outcome { json: doc, text, passed })
}

pub fn cmd_verify(args: &VerifyArgs, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let suite = Suite::from(args.suite);
    let mut reports: Vec<InstanceReport> = match (&args.instance, args.random) {
        (Some(_), Some(_)) => {
            return Err(input(Error::InvalidConfig("give either an instance file or --random, not both".into())))
        }
        (None, None) => {
            return Err(input(Error::InvalidConfig("nothing to verify: pass an instance or --random".into())))
        }
        (Some(path), None) => {
            let pair = load(path)?;
            let suites = run_suite(&pair, suite, &SuiteConfig { n: cfg.degree, seed: args.seed });
            vec![InstanceReport { index: 0, dim: pair.dim(), scheme: None, seed: None, suites }]
        }
        (None, Some(count)) => {
            if args.dim == 0 {
                return Err(input(Error::InvalidConfig("--dim must be positive".into())));
            }
            run_batch(count, args.dim, args.seed, args.scheme.map(Scheme::from), suite, cfg.degree)
        }
    };
    for r in &mut reports {
        for s in &mut r.suites {
            cfg.adjust(&mut s.checks);
        }
    }
    let summary = Summary::of(&reports);
    let text = verify_text(&reports, &summary);
    let passed = summary.failed == 0;
    let json = json!({ "suite": suite.name(), "degree": cfg.degree, "instances": reports, "summary": summary });
    Ok(Outcome { json, text, passed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Summary {
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped_suites: usize,
}

impl Summary {
    fn of(reports: &[InstanceReport]) -> Self {
        let failed = reports.iter().filter(|r| !r.passed()).count();
        Self {
            instances: reports.len(),
            passed: reports.len() - failed,
            failed,
            skipped_suites: reports.iter().flat_map(|r| &r.suites).filter(|s| s.skipped.is_some()).count(),
        }
    }
}

fn suite_text(out: &mut String, s: &SuiteReport, verbose: bool) {
    if let Some(e) = &s.error {
        let _ = writeln!(out, "  [{}] ERROR {e}", s.suite);
    } else if let Some(why) = &s.skipped {
        let _ = writeln!(out, "  [{}] skipped: {why}", s.suite);
    } else {
        let worst = s.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(out, "  [{}] {} checks, {} failed", s.suite, s.checks.len(), worst);
        for c in s.checks.iter().filter(|c| verbose || !c.passed) {
            let _ = writeln!(out, "    {}", c.line());
        }
    }
}

fn verify_text(reports: &[InstanceReport], summary: &Summary) -> String {
    let mut out = String::new();
    let verbose = reports.len() == 1;
    for r in reports {
        let mark = if r.passed() { "ok  " } else { "FAIL" };
        let _ = writeln!(out, "{mark} instance {} (dim {})", r.index, r.dim);
        if verbose || !r.passed() {
            for s in &r.suites {
                suite_text(&mut out, s, verbose);
            }
        }
    }
    let _ = writeln!(
        out,
        "{} instances: {} passed, {} failed, {} suites skipped",
        summary.instances, summary.passed, summary.failed, summary.skipped_suites
    );
    out
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn cmd_char(args: &CharArgs) -> Result<Outcome, CliError> {
    let pair = load(&args.instance)?;
    let data = build_douglas_data(&pair).map_err(run_err)?;
    let triple = char_triple_from(&pair, &data).map_err(run_err)?;
    let cf = &triple.theta;
    let theta0 = char_eval(cf, c64(0.0, 0.0)).map_err(run_err)?;
    let mut samples = Vec::new();
    for z in interior_grid(DEFAULT_ANGLES) {
        let th = char_eval(cf, z).map_err(run_err)?;
        samples.push(json!({ "z": complex_json(z), "theta": to_json_matrix(&th) }));
    }
    let boundary = if cf.pure {
        Some(crate::model::charfn::boundary_min_singular_value(cf, BOUNDARY_SAMPLES).map_err(run_err)?)
    } else {
        None
    };
    let (ds, d) = cf.shape();
    let mut doc = json!({
        "pure": cf.pure,
        "defect_dims": { "defect": d, "defect_adjoint": ds },
        "theta_at_zero": to_json_matrix(&theta0),
        "g1": to_json_matrix(&triple.g1),
        "g2": to_json_matrix(&triple.g2),
        "boundary_min_singular_value": boundary,
        "samples": samples,
    });
    let mut text = format!("pure {}  dim D_T {d}  dim D_T* {ds}\n", cf.pure);
    let _ = writeln!(text, "Theta(0) = {}", matrix_text(&theta0));
    let _ = writeln!(text, "G1 = {}", matrix_text(&triple.g1));
    let _ = writeln!(text, "G2 = {}", matrix_text(&triple.g2));
    if let Some(b) = boundary {
        let _ = writeln!(text, "min boundary singular value {b:.12}");
    }
    if let Some(other_path) = &args.compare {
        let other = load(other_path)?;
        let other_triple = char_triple_from(&other, &build_douglas_data(&other).map_err(run_err)?).map_err(run_err)?;
        let outcome = search_coincidence(&triple, &other_triple, args.seed);
        let _ = match &outcome {
            crate::model::SearchOutcome::Found { residual, .. } => {
                writeln!(text, "coincidence found, residual {residual:.3e}")
            }
            crate::model::SearchOutcome::NotFound { reason } => writeln!(text, "coincidence not found: {reason}"),
        };
        doc["coincidence"] = serde_json::to_value(&outcome).expect("outcome serializes");
    }
    if let Some(csv_path) = &args.emit_plot_data {
        let csv = plot_table(cf).map_err(run_err)?;
        std::fs::write(csv_path, csv).map_err(|e| input(e.into()))?;
    }
    Ok(Outcome { json: doc, text, passed: true })
}

fn matrix_text(m: &CMat) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let row: Vec<String> =
                (0..m.ncols()).map(|j| format!("{:.6}{:+.6}i", m[(i, j)].re, m[(i, j)].im)).collect();
            format!("[{}]", row.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// `theta,radius,sigma_1,…` rows, singular values in decreasing order.
pub fn plot_table(cf: &crate::model::CharFn) -> crate::error::Result<String> {
    let (ds, d) = cf.shape();
    let k = ds.min(d);
    let radius = if cf.pure { 1.0 } else { PLOT_RADIUS_NON_PURE };
    let mut out = String::from("theta,radius");
    for j in 1..=k {
        let _ = write!(out, ",sigma_{j}");
    }
    out.push('\n');
    for i in 0..PLOT_SAMPLES {
        let theta = std::f64::consts::TAU * i as f64 / PLOT_SAMPLES as f64;
        let th = char_eval(cf, C64::from_polar(radius, theta))?;
        let mut s: Vec<f64> = if k == 0 { vec![] } else { th.singular_values().iter().copied().collect() };
        s.sort_by(|a, b| b.total_cmp(a));
        let _ = write!(out, "{theta:.12},{radius}");
        for x in s {
            let _ = write!(out, ",{x:.15e}");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse `args`, run, print, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<i32, CliError> {
    let (outcome, format, out) = match command {
        Command::Generate(a) => {
            let outcome = cmd_generate(a)?;
            // the instance file is the product; residuals go to stderr
            eprint!("{}", outcome.text);
            let body = serde_json::to_string_pretty(&outcome.json).expect("instance serializes") + "\n";
            emit(&body, a.out.as_deref())?;
            return Ok(if outcome.passed { 0 } else { 1 });
        }
        Command::Dilate(a) => {
            let cfg = RunConfig::resolve(&a.common)?;
            (cmd_dilate(a, &cfg)?, cfg.format, cfg.out)
        }
        Command::Verify(a) => {
            let cfg = RunConfig::resolve(&a.common)?;
            (cmd_verify(a, &cfg)?, cfg.format, cfg.out)
        }
        Command::Char(a) => {
            let cfg = RunConfig::resolve(&a.common)?;
            (cmd_char(a)?, cfg.format, cfg.out)
        }
    };
    emit(&outcome.render(format), out.as_deref())?;
    Ok(if outcome.passed { 0 } else { 1 })
}
