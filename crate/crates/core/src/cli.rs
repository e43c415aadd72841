//! Command-line front end. Every command writes one JSON
//! [`ExperimentReport`]; the exit code is 0 on pass, 1 on a violation and
//! 2 on usage or input errors.

use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::acceptance;
use crate::certify::derivative::DERIVATIVE_TOL;
use crate::certify::{
    affine_certificate, amplified_positivity, block_concavity_construction, certify_concave,
    certify_derivative, certify_monotone, choi_of_linear_map, derivative_criterion, is_cp, lipschitz_probe,
    re_independence_test, DerivativeMap, FnMap, KrausMap, LinearMap, DEFAULT_LAMBDAS, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::free::domain::sample_point;
use crate::free::{check_free_axioms, check_similarity_invariance, lookup, FreeFunctionSpec};
use crate::hypograph::check_matrix_convexity;
use crate::json::{parse_matrix, parse_tuple};
use crate::linalg::{CMatrix, OperatorTuple, Tol};
use crate::means::{agh_probe, agh_search};
use crate::pluri::{bank_field, linearity_test, pluriharmonic_residual, ScalarField};
use crate::report::CertificateReport;
use crate::sampling;

#[derive(Debug, Parser)]
#[command(name = "realmono", version, about = "Numerical lab for real operator monotone free functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    /// Zoo member id (see `realmono zoo`)
    #[arg(long, conflicts_with = "spec")]
    pub zoo: Option<String>,
    /// Free function spec JSON file
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Comma-separated matrix sizes
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, env = "REALMONO_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Override the command's default tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write per-trial margins as CSV (certificate commands only)
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    Identity,
    Transpose,
    Kraus,
    Derivative,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the shipped free functions
    Zoo,
    /// Sample A ≤_Re B and check F(A) ≤_Re F(B)
    CheckMonotone(Common),
    /// Check the real concavity inequality
    CheckConcave {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDAS)]
        lambdas: Vec<f64>,
    },
    /// Direct-sum and unitary-invariance residuals
    CheckFreeAxioms(Common),
    /// Similarity-invariance residuals
    CheckSimilarity(Common),
    /// DF(X)[H] ≥_Re 0 for real-positive H
    DerivativeCriterion {
        #[command(flatten)]
        common: Common,
        /// Fixed base point (tuple JSON); sampled per trial otherwise
        #[arg(long)]
        at: Option<PathBuf>,
    },
    /// Choi matrix and complete positivity of a linear map
    Choi {
        #[arg(long, value_enum)]
        map: MapKind,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Kraus factors (tuple JSON of m×n matrices) for `--map kraus`
        #[arg(long)]
        kraus: Option<PathBuf>,
        /// Base point for `--map derivative` (tuple JSON)
        #[arg(long)]
        at: Option<PathBuf>,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Does Re F depend on Im X?
    ReIndependence(Common),
    /// Fit F ≈ a₀I + Σ aⱼXⱼ
    AffineFit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        probes: usize,
    },
    /// Verify the block-unitary concavity construction
    BlockConstruction {
        /// Tuple JSON; sampled when omitted
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare difference quotients of Re F with 2M/r
    LipschitzProbe {
        #[command(flatten)]
        common: Common,
        /// Center tuple JSON; defaults to `center-scale · I` at the first dim
        #[arg(long)]
        center: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        center_scale: f64,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
    },
    /// Harmonic ≤ geometric ≤ arithmetic, for given or sampled pairs
    AghProbe {
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sampled matrix convexity of the real hypograph
    HypographConvexity(Common),
    /// max |∂ⱼ∂̄ₖ Re f| at seeded points
    Pluriharmonic {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Three-stage linearity test of a holomorphic field
    LinearityTest {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 60)]
        probes: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the acceptance suite
    VerifyAll {
        #[arg(long, env = "REALMONO_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// Name of a field in the holomorphic test bank
    #[arg(long, conflicts_with = "field_file")]
    pub field: Option<String>,
    /// ScalarField JSON file
    #[arg(long)]
    pub field_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// What every command emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub passed: bool,
    pub result: Value,
    /// Seconds since the epoch; ignored when comparing replays.
    pub timestamp: u64,
}

impl ExperimentReport {
    /// The report without its timestamp, for replay comparisons.
    pub fn replay_key(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        v.as_object_mut().expect("object").remove("timestamp");
        v.to_string()
    }
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn resolve_spec(args: &SpecArgs) -> Result<(FreeFunctionSpec, String)> {
    match (&args.zoo, &args.spec) {
        (Some(id), _) => Ok((lookup(id)?.spec, id.clone())),
        (None, Some(path)) => Ok((FreeFunctionSpec::from_json(&read(path)?)?, path.display().to_string())),
        (None, None) => Err(Error::Config("pass --zoo <id> or --spec <file>".into())),
    }
}

fn resolve_field(args: &FieldArgs) -> Result<ScalarField> {
    match (&args.field, &args.field_file) {
        (Some(name), _) => bank_field(name),
        (None, Some(path)) => ScalarField::from_json(&read(path)?),
        (None, None) => Err(Error::Config("pass --field <name> or --field-file <file>".into())),
    }
}

fn check_run(run: &RunArgs) -> Result<()> {
    if run.trials == 0 {
        return Err(Error::Config("--trials must be at least 1".into()));
    }
    if run.dims.is_empty() || run.dims.contains(&0) {
        return Err(Error::Config("--dims must list positive sizes".into()));
    }
    Ok(())
}

struct Outcome {
    source: Option<String>,
    tol: Option<f64>,
    passed: bool,
    result: Value,
    certificate: Option<CertificateReport>,
}

fn certificate(source: String, tol: f64, rep: CertificateReport) -> Result<Outcome> {
    Ok(Outcome {
        source: Some(source),
        tol: Some(tol),
        passed: rep.passed(),
        result: serde_json::to_value(&rep)?,
        certificate: Some(rep),
    })
}

fn plain(source: Option<String>, tol: Option<f64>, passed: bool, result: Value) -> Outcome {
    Outcome {
        source,
        tol,
        passed,
        result,
        certificate: None,
    }
}

fn run_args(command: &Command) -> Option<&RunArgs> {
    match command {
        Command::Zoo | Command::VerifyAll { .. } => None,
        Command::CheckMonotone(c)
        | Command::CheckFreeAxioms(c)
        | Command::CheckSimilarity(c)
        | Command::ReIndependence(c)
        | Command::HypographConvexity(c) => Some(&c.run),
        Command::CheckConcave { common, .. }
        | Command::DerivativeCriterion { common, .. }
        | Command::AffineFit { common, .. }
        | Command::LipschitzProbe { common, .. } => Some(&common.run),
        Command::Choi { run, .. }
        | Command::BlockConstruction { run, .. }
        | Command::AghProbe { run, .. }
        | Command::Pluriharmonic { run, .. }
        | Command::LinearityTest { run, .. } => Some(run),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Zoo => "zoo",
        Command::CheckMonotone(_) => "check-monotone",
        Command::CheckConcave { .. } => "check-concave",
        Command::CheckFreeAxioms(_) => "check-free-axioms",
        Command::CheckSimilarity(_) => "check-similarity",
        Command::DerivativeCriterion { .. } => "derivative-criterion",
        Command::Choi { .. } => "choi",
        Command::ReIndependence(_) => "re-independence",
        Command::AffineFit { .. } => "affine-fit",
        Command::BlockConstruction { .. } => "block-construction",
        Command::LipschitzProbe { .. } => "lipschitz-probe",
        Command::AghProbe { .. } => "agh-probe",
        Command::HypographConvexity(_) => "hypograph-convexity",
        Command::Pluriharmonic { .. } => "pluriharmonic",
        Command::LinearityTest { .. } => "linearity-test",
        Command::VerifyAll { .. } => "verify-all",
    }
}

fn choi_outcome(map: &dyn LinearMap, label: &str, run: &RunArgs) -> Result<(bool, Value)> {
    match choi_of_linear_map(map, label) {
        Ok(ch) if !ch.hermitian => Ok((
            false,
            json!({ "choi": ch, "cp": null, "reason": "the map does not preserve Hermiticity, so it is not completely positive" }),
        )),
        Ok(ch) => {
            let rep = is_cp(&ch, run.tol.map(Tol::Abs).unwrap_or(Tol::Auto))?;
            Ok((rep.verdict.holds, json!({ "choi": ch, "cp": rep })))
        }
        // derivatives of non-holomorphic functions are only real-linear
        Err(Error::Contract(why)) if label.starts_with("D") => {
            let tol = run.tol.unwrap_or(DERIVATIVE_TOL);
            let levels = (1..=4)
                .map(|m| amplified_positivity(map, m, run.trials.min(100), run.seed).map(|w| (m, w)))
                .collect::<Result<Vec<_>>>()?;
            let worst = levels.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
            Ok((
                worst >= -tol,
                json!({ "real_linear": true, "reason": why, "amplified_margins": levels, "worst_margin": worst }),
            ))
        }
        Err(e) => Err(e),
    }
}

fn dispatch(command: &Command) -> Result<Outcome> {
    match command {
        Command::Zoo => {
            let rows: Vec<Value> = crate::free::zoo()
                .into_iter()
                .map(|e| json!({ "id": e.id, "summary": e.summary, "arity": e.spec.arity, "domain": e.spec.domain }))
                .collect();
            Ok(plain(None, None, true, Value::Array(rows)))
        }
        Command::CheckMonotone(c) => {
            let (f, src) = resolve_spec(&c.spec)?;
            let tol = c.run.tol.unwrap_or(DEFAULT_TOL);
            certificate(src, tol, certify_monotone(&f, &c.run.dims, c.run.trials, c.run.seed, tol)?)
        }
        Command::CheckConcave { common: c, lambdas } => {
            let (f, src) = resolve_spec(&c.spec)?;
            let tol = c.run.tol.unwrap_or(DEFAULT_TOL);
            certificate(src, tol, certify_concave(&f, &c.run.dims, c.run.trials, c.run.seed, tol, lambdas)?)
        }
        Command::CheckFreeAxioms(c) => {
            let (f, src) = resolve_spec(&c.spec)?;
            let mut reports = Vec::new();
            for &n in &c.run.dims {
                let (ds, un) = check_free_axioms(&f, n, c.run.trials, c.run.seed)?;
                reports.push(ds);
                reports.push(un);
            }
            let passed = reports.iter().all(|r| r.passed);
            Ok(plain(Some(src), None, passed, serde_json::to_value(reports)?))
        }
        Command::CheckSimilarity(c) => {
            let (f, src) = resolve_spec(&c.spec)?;
            let reports = c
                .run
                .dims
                .iter()
                .map(|&n| check_similarity_invariance(&f, n, c.run.trials, c.run.seed))
                .collect::<Result<Vec<_>>>()?;
            let passed = reports.iter().all(|r| r.passed);
            Ok(plain(Some(src), None, passed, serde_json::to_value(reports)?))
        }
        Command::DerivativeCriterion { common: c, at } => {
            let (f, src) = resolve_spec(&c.spec)?;
            let tol = c.run.tol.unwrap_or(DERIVATIVE_TOL);
            let rep = match at {
                Some(path) => derivative_criterion(&f, &parse_tuple(&read(path)?)?, c.run.trials, c.run.seed, tol)?,
                None => certify_derivative(&f, &c.run.dims, c.run.trials, c.run.seed, tol)?,
            };
            certificate(src, tol, rep)
        }
        Command::Choi { map, n, kraus, at, spec, run } => {
            let (passed, result, source) = match map {
                MapKind::Identity => {
                    let m = FnMap { n: *n, m: *n, f: |x: &CMatrix| x.clone() };
                    let (p, v) = choi_outcome(&m, "identity", run)?;
                    (p, v, None)
                }
                MapKind::Transpose => {
                    let m = FnMap { n: *n, m: *n, f: |x: &CMatrix| x.transpose() };
                    let (p, v) = choi_outcome(&m, "transpose", run)?;
                    (p, v, None)
                }
                MapKind::Kraus => {
                    let path = kraus
                        .as_ref()
                        .ok_or_else(|| Error::Config("--map kraus needs --kraus <file>".into()))?;
                    let m = KrausMap::new(parse_tuple_rect(&read(path)?)?)?;
                    let (p, v) = choi_outcome(&m, "kraus", run)?;
                    (p, v, Some(path.display().to_string()))
                }
                MapKind::Derivative => {
                    let (f, src) = resolve_spec(spec)?;
                    if f.arity != 1 {
                        return Err(Error::Config(format!("--map derivative needs a one-variable function; `{}` has arity {}", f.name, f.arity)));
                    }
                    let x = match at {
                        Some(path) => parse_tuple(&read(path)?)?,
                        // Hermitian base points keep the derivative Hermiticity-preserving
                        None => sample_point(&mut sampling::rng(run.seed), crate::free::Domain::HermitianPd, *n, f.arity),
                    };
                    let m = DerivativeMap { f: &f, x };
                    let (p, v) = choi_outcome(&m, &format!("D{}", f.name), run)?;
                    (p, v, Some(src))
                }
            };
            Ok(plain(source, run.tol, passed, result))
        }
        Command::ReIndependence(c) => {
            let (f, src) = resolve_spec(&c.spec)?;
            let tol = c.run.tol.unwrap_or(DEFAULT_TOL);
            certificate(src, tol, re_independence_test(&f, &c.run.dims, c.run.trials, c.run.seed, tol)?)
        }
        Command::AffineFit { common: c, probes } => {
            let (f, src) = resolve_spec(&c.spec)?;
            let tol = c.run.tol.unwrap_or(1e-8);
            let (fit, rep) = affine_certificate(&f, *probes, c.run.seed, tol)?;
            let mut out = certificate(src, tol, rep)?;
            out.result = json!({ "fit": fit, "certificate": out.result });
            Ok(out)
        }
        Command::BlockConstruction { a, b, lambda, eps, run } => {
            let tol = run.tol.unwrap_or(1e-10);
            let reports = match (a, b) {
                (Some(pa), Some(pb)) => {
                    vec![block_concavity_construction(&parse_tuple(&read(pa)?)?, &parse_tuple(&read(pb)?)?, *lambda, *eps, tol)?]
                }
                _ => (0..run.trials)
                    .map(|t| {
                        let mut r = sampling::trial_rng(run.seed, t as u64);
                        let n = run.dims[t % run.dims.len()];
                        let a = sample_point(&mut r, crate::free::Domain::PRe, n, 1);
                        let b = sample_point(&mut r, crate::free::Domain::PRe, n, 1);
                        block_concavity_construction(&a, &b, *lambda, *eps, tol)
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let passed = reports.iter().all(|r| r.passed);
            Ok(plain(None, Some(tol), passed, serde_json::to_value(reports)?))
        }
        Command::LipschitzProbe { common: c, center, center_scale, radius } => {
            let (f, src) = resolve_spec(&c.spec)?;
            let tol = c.run.tol.unwrap_or(DEFAULT_TOL);
            let center = match center {
                Some(path) => parse_tuple(&read(path)?)?,
                None => OperatorTuple::identities(c.run.dims[0], f.arity).scale(*center_scale),
            };
            let rep = lipschitz_probe(&f, &center, *radius, c.run.trials, c.run.seed, tol)?;
            // an unmet hypothesis is not a violation of the bound
            let passed = rep.passed.unwrap_or(true);
            Ok(plain(Some(src), Some(tol), passed, serde_json::to_value(rep)?))
        }
        Command::AghProbe { a, b, run } => {
            let tol = run.tol.unwrap_or(DEFAULT_TOL);
            match (a, b) {
                (Some(pa), Some(pb)) => {
                    let rep = agh_probe(&parse_matrix(&read(pa)?)?, &parse_matrix(&read(pb)?)?, tol)?;
                    Ok(plain(None, Some(tol), rep.holds(), serde_json::to_value(rep)?))
                }
                _ => {
                    let rep = agh_search(&run.dims, run.trials, run.seed, tol)?;
                    Ok(plain(None, Some(tol), rep.found_at.is_none(), serde_json::to_value(rep)?))
                }
            }
        }
        Command::HypographConvexity(c) => {
            let (f, src) = resolve_spec(&c.spec)?;
            let tol = c.run.tol.unwrap_or(DEFAULT_TOL);
            certificate(src, tol, check_matrix_convexity(&f, &c.run.dims, c.run.trials, c.run.seed, tol)?)
        }
        Command::Pluriharmonic { field, run } => {
            let f = resolve_field(field)?;
            let tol = run.tol.unwrap_or(1e-6);
            let u = f.real_part();
            let mut r = sampling::rng(run.seed);
            let mut worst: f64 = 0.0;
            for _ in 0..run.trials {
                worst = worst.max(pluriharmonic_residual(&u, &f.sample_point(&mut r, 0.8), None)?);
            }
            Ok(plain(
                Some(f.name.clone()),
                Some(tol),
                worst <= tol,
                json!({ "field": f.name, "points": run.trials, "max_residual": worst }),
            ))
        }
        Command::LinearityTest { field, probes, run } => {
            let f = resolve_field(field)?;
            let tol = run.tol.unwrap_or(1e-6);
            let rep = linearity_test(&f, *probes, run.seed, tol)?;
            Ok(plain(Some(f.name.clone()), Some(tol), rep.linear, serde_json::to_value(rep)?))
        }
        Command::VerifyAll { seed, .. } => {
            let results = acceptance::run_all(*seed);
            let passed = results.iter().all(|r| r.passed);
            Ok(plain(None, None, passed, serde_json::to_value(results)?))
        }
    }
}

/// Tuples of equally shaped, possibly rectangular matrices (Kraus factors).
fn parse_tuple_rect(s: &str) -> Result<Vec<CMatrix>> {
    let items: Vec<crate::json::MatrixJson> = serde_json::from_str(s)?;
    items.iter().map(CMatrix::try_from).collect()
}

/// Runs a parsed command and assembles its report; `--out` and `--csv`
/// are not written here.
pub fn run(cli: &Cli) -> Result<(ExperimentReport, Option<CertificateReport>)> {
    if let Some(run) = run_args(&cli.command) {
        check_run(run)?;
    }
    let out = dispatch(&cli.command)?;
    let (dims, trials, seed) = match (&cli.command, run_args(&cli.command)) {
        (_, Some(r)) => (r.dims.clone(), r.trials, r.seed),
        (Command::VerifyAll { seed, .. }, None) => (Vec::new(), 0, *seed),
        _ => (Vec::new(), 0, 0),
    };
    let report = ExperimentReport {
        config: ExperimentConfig {
            command: command_name(&cli.command).to_string(),
            source: out.source,
            dims,
            trials,
            seed,
            tol: out.tol,
        },
        passed: out.passed,
        result: out.result,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    Ok((report, out.certificate))
}

fn emit(cli: &Cli, report: &ExperimentReport, cert: Option<&CertificateReport>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    let out = match &cli.command {
        Command::VerifyAll { out, .. } => out.as_ref(),
        c => run_args(c).and_then(|r| r.out.as_ref()),
    };
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => {
            use std::io::Write;
            // a closed pipe (e.g. `| head`) is not an error
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    if let Some(path) = run_args(&cli.command).and_then(|r| r.csv.as_ref()) {
        match cert {
            Some(c) => fs::write(path, c.margins_csv())?,
            None => eprintln!("note: --csv is only written by certificate commands"),
        }
    }
    if let Command::VerifyAll { .. } = cli.command {
        if let Some(rows) = report.result.as_array() {
            for row in rows {
                if let Ok(r) = serde_json::from_value::<acceptance::CriterionResult>(row.clone()) {
                    eprintln!("{r}");
                }
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs, writes output and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli).and_then(|(report, cert)| emit(&cli, &report, cert.as_ref()).map(|_| report.passed)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

