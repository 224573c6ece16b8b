//! Command-line front end: argument parsing, backend selection, dispatch
//! and report serialization.
//!
//! Every report is a JSON object carrying `schema_version`. Exit codes:
//! 0 in orbit or success, 2 boundary, 3 outside the relaxation (or failing a
//! model condition), 4 indeterminate, 64 parse or usage error, 65 dimension
//! or field mismatch, 1 any other failure.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rankn::invariants::{self, CovariantSummary};
use rankn::latent::{self, ModelReport};
use rankn::membership::{self, ClassifyOptions, MembershipReport, Tri, Verdict, DEFAULT_TOL};
use rankn::real;
use rankn::scalar::parse_rational;
use rankn::{families, AnyTensor, Axis, Error, Field, Rational, RealField, Tensor3};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_MISMATCH: i32 = 65;

#[derive(Parser, Debug)]
#[command(name = "rankn", version, about = "Dense-orbit membership, covariants and tangles for n x n x n tensors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Arithmetic backend. Defaults to exact for rational and gaussian input, float otherwise.
    #[arg(long, global = true, value_enum)]
    pub backend: Option<Backend>,

    /// Float tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Compact single-line JSON (the default).
    #[arg(long, global = true, conflicts_with = "pretty")]
    pub json: bool,

    /// Indented JSON.
    #[arg(long, global = true)]
    pub pretty: bool,

    /// Run the command on every `*.json` file in a directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub batch: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Kn,
    KnEps,
    KnPrime,
    Werner,
    L,
    LEps,
    /// Unit diagonal tensor.
    Diag,
    /// Real canonical tensor with `k` conjugate pairs.
    Jk,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Multilinear rank, commutation, h/f status, tangles and verdict.
    Analyze(InputArgs),
    /// Rank-n decomposition of an in-orbit tensor.
    Decompose(InputArgs),
    /// Signature and component of a real tensor.
    ClassifyReal(InputArgs),
    /// Latent-class model membership for a tensor or a table of counts.
    CheckModel {
        #[command(flatten)]
        input: InputArgs,
        /// Require strict inequalities.
        #[arg(long)]
        strict: bool,
    },
    /// Emit a tensor from a named family.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        /// Dimension; defaults to 3, or to the fixed size of werner (2) and l (3).
        #[arg(long)]
        n: Option<usize>,
        /// Perturbation parameter, `p/q`.
        #[arg(long, default_value = "1/2")]
        eps: String,
        /// Number of conjugate pairs for `jk`.
        #[arg(long, default_value_t = 0)]
        k: usize,
    },
    /// Covariants h and f per axis, tangle and Cayley hyperdeterminant.
    Invariants(InputArgs),
}

#[derive(clap::Args, Debug, Clone)]
pub struct InputArgs {
    /// Tensor JSON file, or `-` for stdin.
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
}

/// A finished run: the text for stdout, diagnostics for stderr and the exit code.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            };
        }
    };
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> Outcome {
    let (report, code) = match &cli.batch {
        Some(dir) => run_batch(cli, dir),
        None => {
            let input = match &cli.command {
                Command::Gen { .. } => None,
                other => Some(input_of(other).input.clone()),
            };
            run_one(cli, input.as_deref())
        }
    };
    let stdout = render(&report, cli.pretty);
    let stderr = report
        .get("error")
        .and_then(|e| e.get("message"))
        .and_then(Value::as_str)
        .map(|m| format!("error: {m}\n"))
        .unwrap_or_default();
    Outcome { stdout, stderr, code }
}

fn render(v: &Value, pretty: bool) -> String {
    let mut s = if pretty { serde_json::to_string_pretty(v) } else { serde_json::to_string(v) }
        .expect("reports serialize");
    s.push('\n');
    s
}

fn input_of(cmd: &Command) -> &InputArgs {
    match cmd {
        Command::Analyze(a) | Command::Decompose(a) | Command::ClassifyReal(a) | Command::Invariants(a) => a,
        Command::CheckModel { input, .. } => input,
        Command::Gen { .. } => unreachable!("gen takes no input"),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Analyze(_) => "analyze",
        Command::Decompose(_) => "decompose",
        Command::ClassifyReal(_) => "classify-real",
        Command::CheckModel { .. } => "check-model",
        Command::Gen { .. } => "gen",
        Command::Invariants(_) => "invariants",
    }
}

fn run_batch(cli: &Cli, dir: &Path) -> (Value, i32) {
    if matches!(cli.command, Command::Gen { .. }) {
        return error_report("gen", &CliError::Usage("--batch does not apply to gen".into()));
    }
    let mut files: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(e) => return error_report(command_name(&cli.command), &CliError::Usage(format!("{}: {e}", dir.display()))),
    };
    files.sort();
    let results: Vec<(Value, i32)> = files
        .par_iter()
        .map(|path| {
            let (report, code) = run_one(cli, Some(path));
            let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (json!({ "file": name, "exit_code": code, "report": report }), code)
        })
        .collect();
    let code = results.iter().map(|(_, c)| *c).max().unwrap_or(EXIT_OK);
    let items: Vec<Value> = results.into_iter().map(|(v, _)| v).collect();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command_name(&cli.command),
        "batch": items,
        "exit_code": code,
    });
    (report, code)
}

/// Failures the CLI reports as JSON.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                Error::Parse(_) => EXIT_USAGE,
                Error::Dimension(_) | Error::NotSquare { .. } | Error::UnsupportedDimension { .. } | Error::Field(_) => {
                    EXIT_MISMATCH
                }
                Error::NotInOrbit(_) => Verdict::OutsideRelaxation.exit_code(),
                Error::Indeterminate(_) => Verdict::Indeterminate.exit_code(),
                _ => EXIT_FAILURE,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                Error::Parse(_) => "parse",
                Error::Dimension(_) | Error::NotSquare { .. } | Error::UnsupportedDimension { .. } => "dimension",
                Error::Field(_) => "field",
                Error::NotInOrbit(_) => "not_in_orbit",
                Error::Indeterminate(_) => "indeterminate",
                _ => "internal",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn error_report(command: &str, e: &CliError) -> (Value, i32) {
    let code = e.code();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "error": { "kind": e.kind(), "message": e.message() },
        "exit_code": code,
    });
    (report, code)
}

fn run_one(cli: &Cli, input: Option<&Path>) -> (Value, i32) {
    let name = command_name(&cli.command);
    match dispatch(cli, input) {
        Ok((mut body, code)) => {
            let mut doc = Map::new();
            doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
            doc.insert("command".into(), json!(name));
            if let Value::Object(fields) = body.take() {
                doc.extend(fields);
            }
            doc.insert("exit_code".into(), json!(code));
            (Value::Object(doc), code)
        }
        Err(e) => error_report(name, &e),
    }
}

fn options(cli: &Cli) -> ClassifyOptions {
    ClassifyOptions { tol: cli.tol, seed: cli.seed, ..ClassifyOptions::default() }
}

fn read_input(path: Option<&Path>) -> Result<Value, CliError> {
    let path = path.ok_or_else(|| CliError::Usage("missing --input".into()))?;
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Io(format!("stdin: {e}")))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Core(Error::Parse(e.to_string())))
}

/// Chooses the backend and converts the tensor for it.
fn prepare(input: AnyTensor, requested: Option<Backend>, warnings: &mut Vec<String>) -> Result<AnyTensor, CliError> {
    let default = if input.is_exact() { Backend::Exact } else { Backend::Float };
    match (requested.unwrap_or(default), input) {
        (Backend::Exact, t @ (AnyTensor::Rational(_) | AnyTensor::Gaussian(_))) => Ok(t),
        (Backend::Exact, _) => Err(Error::Field("the exact backend needs rational or gaussian entries".into()).into()),
        (Backend::Float, AnyTensor::Rational(t)) => {
            warnings.push("float backend requested on exact input; exactness is lost".into());
            Ok(AnyTensor::Real(t.map(|q| q.to_f64())))
        }
        (Backend::Float, AnyTensor::Gaussian(t)) => {
            warnings.push("float backend requested on exact input; exactness is lost".into());
            Ok(AnyTensor::Complex(t.to_complex64()))
        }
        (Backend::Float, t) => Ok(t),
    }
}

/// Real view: gaussian and complex inputs are accepted when every entry is real.
fn real_view(t: AnyTensor) -> Result<AnyTensor, CliError> {
    match t {
        AnyTensor::Gaussian(g) => {
            if !g.is_real() {
                return Err(Error::Field("input has non-real entries".into()).into());
            }
            Ok(AnyTensor::Rational(g.map(|z| z.re.clone())))
        }
        AnyTensor::Complex(c) => {
            if !c.is_real() {
                return Err(Error::Field("input has non-real entries".into()).into());
            }
            Ok(AnyTensor::Real(c.map(|z| z.re)))
        }
        other => Ok(other),
    }
}

macro_rules! with_tensor {
    ($t:expr, $p:ident => $body:expr) => {
        match $t {
            AnyTensor::Rational($p) => $body,
            AnyTensor::Gaussian($p) => $body,
            AnyTensor::Real($p) => $body,
            AnyTensor::Complex($p) => $body,
        }
    };
}

macro_rules! with_real_tensor {
    ($t:expr, $p:ident => $body:expr) => {
        match $t {
            AnyTensor::Rational($p) => $body,
            AnyTensor::Real($p) => $body,
            _ => unreachable!("real_view returns real fields only"),
        }
    };
}

fn backend_name(t: &AnyTensor) -> &'static str {
    if t.is_exact() {
        "exact"
    } else {
        "float"
    }
}

fn dispatch(cli: &Cli, input: Option<&Path>) -> Result<(Value, i32), CliError> {
    let opts = options(cli);
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(CliError::Usage("--tol must be a positive number".into()));
    }
    if let Command::Gen { family, n, eps, k } = &cli.command {
        let t = generate(*family, *n, eps, *k)?;
        return Ok((json!({ "family": family_name(*family), "tensor": t }), EXIT_OK));
    }
    let doc = read_input(input)?;
    let mut warnings = Vec::new();
    let (body, code) = match &cli.command {
        Command::CheckModel { strict, .. } => {
            let tensor = if let Some(counts) = doc.get("counts") {
                let counts: Vec<Vec<Vec<u64>>> = serde_json::from_value(counts.clone())
                    .map_err(|e| Error::Parse(format!("`counts` must be a cube of non-negative integers: {e}")))?;
                let (t, w) = latent::tensor_from_counts(&counts)?;
                warnings.extend(w);
                AnyTensor::Rational(t)
            } else {
                tensor_doc(&doc)?
            };
            let t = prepare(real_view(tensor)?, cli.backend, &mut warnings)?;
            let report: ModelReport = with_real_tensor!(&t, p => latent::check_membership(p, *strict, &opts))?;
            let code = match report.passed {
                Tri::Yes => EXIT_OK,
                Tri::No => Verdict::OutsideRelaxation.exit_code(),
                Tri::Indeterminate => Verdict::Indeterminate.exit_code(),
            };
            (json!({ "report": report }), code)
        }
        Command::ClassifyReal(_) => {
            let t = prepare(real_view(tensor_doc(&doc)?)?, cli.backend, &mut warnings)?;
            let membership = with_real_tensor!(&t, p => membership::classify(p, &ClassifyOptions { decompose: false, ..opts.clone() }));
            if membership.verdict != Verdict::InOrbit {
                let code = membership.verdict.exit_code();
                (json!({ "verdict": membership.verdict, "membership": membership }), code)
            } else {
                let report = with_real_tensor!(&t, p => real::signature(p, &opts))?;
                (json!({ "verdict": Verdict::InOrbit, "signature": report }), EXIT_OK)
            }
        }
        Command::Analyze(_) => {
            let t = prepare(tensor_doc(&doc)?, cli.backend, &mut warnings)?;
            with_tensor!(&t, p => analyze(p, &opts, backend_name(&t)))
        }
        Command::Decompose(_) => {
            let t = prepare(tensor_doc(&doc)?, cli.backend, &mut warnings)?;
            with_tensor!(&t, p => decompose(p, &opts, &mut warnings))
        }
        Command::Invariants(_) => {
            let t = prepare(tensor_doc(&doc)?, cli.backend, &mut warnings)?;
            (with_tensor!(&t, p => invariants_report(p)), EXIT_OK)
        }
        Command::Gen { .. } => unreachable!("handled above"),
    };
    let mut body = body;
    if let Value::Object(m) = &mut body {
        let t_backend = match cli.backend {
            Some(Backend::Exact) => "exact",
            Some(Backend::Float) => "float",
            None => "auto",
        };
        m.insert("backend_requested".into(), json!(t_backend));
        m.insert("warnings".into(), json!(warnings));
    }
    Ok((body, code))
}

/// Accepts a bare tensor document or one wrapped as `{"tensor": ..}` (the `gen` output).
fn tensor_doc(doc: &Value) -> Result<AnyTensor, CliError> {
    let inner = match doc.get("tensor") {
        Some(t) if doc.get("entries").is_none() => t,
        _ => doc,
    };
    Ok(AnyTensor::from_json(inner)?)
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Kn => "kn",
        Family::KnEps => "kn-eps",
        Family::KnPrime => "kn-prime",
        Family::Werner => "werner",
        Family::L => "l",
        Family::LEps => "l-eps",
        Family::Diag => "diag",
        Family::Jk => "jk",
    }
}

fn generate(family: Family, n: Option<usize>, eps: &str, k: usize) -> Result<Value, CliError> {
    let eps: Rational = parse_rational(eps)?;
    let fixed = |want: usize| -> Result<(), CliError> {
        match n {
            Some(m) if m != want => {
                Err(Error::Dimension(format!("family {} has n = {want}", family_name(family))).into())
            }
            _ => Ok(()),
        }
    };
    let n = n.unwrap_or(3);
    if n == 0 {
        return Err(Error::Dimension("n must be at least 1".into()).into());
    }
    let t: Tensor3<Rational> = match family {
        Family::Kn => families::gen_kn(n)?,
        Family::KnEps => families::gen_kn_eps(n, &eps)?,
        Family::KnPrime => families::gen_kn_prime(n)?,
        Family::Werner => {
            fixed(2)?;
            families::gen_werner()
        }
        Family::L => {
            fixed(3)?;
            families::gen_l()
        }
        Family::LEps => {
            fixed(3)?;
            families::gen_l_eps(&eps)
        }
        Family::Diag => Tensor3::unit_diagonal(n),
        Family::Jk => real::gen_jk(n, k)?.1,
    };
    Ok(t.to_json())
}

fn analyze<F: Field>(p: &Tensor3<F>, opts: &ClassifyOptions, backend: &str) -> (Value, i32) {
    let n = p.n();
    let (r1, r2, r3) = p.multilinear_rank(opts.tol);
    let report: MembershipReport = membership::classify(p, opts);
    let mut inv = Map::new();
    if n == 2 {
        inv.insert("cayley_delta".into(), scalar_or_error(invariants::cayley_delta(p)));
    }
    if n == 3 || n == 4 {
        inv.insert("tangle".into(), scalar_or_error(invariants::tangle(p)));
    }
    let h_status: Vec<Value> = report
        .axes
        .iter()
        .map(|a| {
            json!({
                "axis": a.axis,
                "h_nonzero": a.slice_nonsingular,
                "f_nonzero": a.f.as_ref().map(|f| f.nonzero),
            })
        })
        .collect();
    let code = report.verdict.exit_code();
    let body = json!({
        "n": n,
        "backend": backend,
        "multilinear_rank": [r1, r2, r3],
        "covariant_status": h_status,
        "invariants": Value::Object(inv),
        "verdict": report.verdict,
        "membership": report,
    });
    (body, code)
}

fn decompose<F: Field>(p: &Tensor3<F>, opts: &ClassifyOptions, warnings: &mut Vec<String>) -> (Value, i32) {
    let result = if F::EXACT {
        match membership::decompose_exact(p, opts) {
            Ok(d) => Ok((d.to_json(), d.residual, "exact")),
            Err(Error::NonRationalSpectrum) => {
                warnings.push("slice spectrum is not rational; decomposed in floating point".into());
                membership::decompose_any(p, opts).map(|d| (d.to_json(), d.residual, "float"))
            }
            Err(e) => Err(e),
        }
    } else {
        membership::decompose_any(p, opts).map(|d| (d.to_json(), d.residual, "float"))
    };
    match result {
        Ok((d, residual, backend)) => (
            json!({
                "n": p.n(),
                "backend": backend,
                "verdict": Verdict::InOrbit,
                "decomposition": d,
                "residual": residual,
            }),
            EXIT_OK,
        ),
        Err(e) => {
            let report = membership::classify(p, &ClassifyOptions { decompose: false, ..opts.clone() });
            let code = report.verdict.exit_code();
            (
                json!({
                    "n": p.n(),
                    "verdict": report.verdict,
                    "reason": e.to_string(),
                    "membership": report,
                }),
                code,
            )
        }
    }
}

fn scalar_or_error<F: Field>(v: rankn::Result<F>) -> Value {
    match v {
        Ok(x) => x.to_json(),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn covariant_or_error<F: Field>(v: rankn::Result<invariants::CovariantValue<F>>) -> Value {
    match v {
        Ok(c) => serde_json::to_value(CovariantSummary::from(&c)).expect("summary serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn invariants_report<F: Field>(p: &Tensor3<F>) -> Value {
    let n = p.n();
    let axes: Vec<Value> = [Axis::One, Axis::Two, Axis::Three]
        .into_iter()
        .map(|axis| {
            json!({
                "axis": axis.number(),
                "h": covariant_or_error(invariants::h(p, axis)),
                "f": covariant_or_error(invariants::f(p, axis)),
            })
        })
        .collect();
    let mut body = json!({ "n": n, "axes": axes });
    if n == 2 {
        body["cayley_delta"] = scalar_or_error(invariants::cayley_delta(p));
    }
    if n == 3 || n == 4 {
        body["tangle"] = scalar_or_error(invariants::tangle(p));
    }
    body
}
