//! `chordgeom`: chord integrals, chord measures and chord Minkowski solvers
//! from the command line. Every command prints one JSON report.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use chordgeom::body::{Body, BodySpec};
use chordgeom::chord::{
    chord_closed, chord_line_mc, chord_riesz_double, chord_volume_form, default_line_samples, ChordEstimate, ChordMethod,
};
use chordgeom::concentration::sharpness_sequence;
use chordgeom::dualv::{dual_v, riesz_dual_v};
use chordgeom::measure::{
    chord_integral_quadrature, chord_measure_polytope, cone_chord_measure, lp_chord_measure, DiscreteSphericalMeasure,
    MeasureConfig,
};
use chordgeom::potential::FacetPotential;
use chordgeom::solve::{
    solve_chord_log_minkowski, solve_chord_minkowski, validate_chord_data, validate_log_data, SolverConfig,
};
use chordgeom::sphere::SphereQuadrature;
use chordgeom::verify::{CheckRecord, Suite};
use chordgeom::GeomError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}, column {column}: {message}")]
    Schema { path: PathBuf, line: usize, column: usize, message: String },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "chordgeom", version, about = "Chord integrals, chord measures and chord Minkowski problems")]
struct Cli {
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the main table as CSV instead of the JSON report.
    #[arg(long, global = true)]
    csv: bool,
    /// Leave wall_time_ms out of the report.
    #[arg(long, global = true)]
    omit_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chord integral I_q(K).
    Chord(ChordArgs),
    /// Dual quermassintegral Ṽ_q(K, z).
    Dualv(DualvArgs),
    /// Chord, cone-chord or L_p chord measure of a polytope.
    Measure(MeasureArgs),
    /// Solve a discrete chord Minkowski or log-Minkowski problem.
    Solve(SolveArgs),
    /// Run a check suite.
    Check(CheckArgs),
    /// Ratios along the thin-box sharpness family.
    Sharpness(SharpnessArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    LineMc,
    VolumeForm,
    RieszDouble,
    ClosedForm,
    FacetQuadrature,
}

#[derive(Args, Debug)]
struct ChordArgs {
    body: PathBuf,
    #[arg(long)]
    q: f64,
    #[arg(long, value_enum, default_value = "line-mc")]
    method: MethodArg,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SchemeArg {
    /// Product (n ≤ 3) or Monte Carlo sphere rule.
    Sphere,
    /// Riesz potential Monte Carlo.
    Riesz,
    /// Deterministic facet potential (polytopes, n ≤ 3).
    Potential,
}

#[derive(Args, Debug)]
struct DualvArgs {
    body: PathBuf,
    /// Comma-separated point coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Vec<f64>,
    #[arg(long)]
    q: f64,
    #[arg(long, value_enum, default_value = "sphere")]
    scheme: SchemeArg,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    body: PathBuf,
    #[arg(long)]
    q: f64,
    /// Cone-chord measure G_q.
    #[arg(long, conflicts_with = "lp")]
    cone: bool,
    /// L_p chord measure F_{p,q}.
    #[arg(long)]
    lp: Option<f64>,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ProblemArg {
    Chord,
    Log,
}

#[derive(Args, Debug)]
struct SolveArgs {
    measure: PathBuf,
    #[arg(long, value_enum, default_value = "chord")]
    problem: ProblemArg,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    grad_tol: Option<f64>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SuiteArg {
    Identities,
    Variational,
    Concentration,
    Limits,
    SolverRoundtrip,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Identities => Suite::Identities,
            SuiteArg::Variational => Suite::Variational,
            SuiteArg::Concentration => Suite::Concentration,
            SuiteArg::Limits => Suite::Limits,
            SuiteArg::SolverRoundtrip => Suite::SolverRoundtrip,
        }
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(value_enum)]
    suite: SuiteArg,
    #[arg(long, default_value_t = 3)]
    n: usize,
}

#[derive(Args, Debug)]
struct SharpnessArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// Largest j; the sequence is 1, 2, 4, … up to jmax.
    #[arg(long, default_value_t = 16)]
    jmax: u32,
}

/// Config file schema (all keys optional).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    samples: Option<usize>,
    measure: Option<MeasureConfig>,
    solver: Option<SolverConfig>,
}

struct Settings {
    seed: u64,
    samples: Option<usize>,
    measure: MeasureConfig,
    solver: SolverConfig,
}

#[derive(Debug, Serialize)]
struct Report {
    command: String,
    inputs: Value,
    seeds: Vec<u64>,
    results: Value,
    checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<u64>,
    version: String,
}

struct Output {
    command: &'static str,
    inputs: Value,
    results: Value,
    checks: Vec<CheckRecord>,
    csv: String,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn read_body(path: &Path) -> CliResult<(BodySpec, Body)> {
    let spec: BodySpec = read_json(path)?;
    let body = Body::try_from(&spec)?;
    Ok((spec, body))
}

fn polytope_of(body: &Body) -> CliResult<chordgeom::HPolytope> {
    match body {
        Body::HPolytope(p) => Ok(p.clone()),
        Body::VPolytope(v) => Ok(v.hrep().clone()),
        _ => Err(CliError::Input(format!("this command needs a polytope, got a {}", body.kind()))),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn csv_rows(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn checks_csv(checks: &[CheckRecord]) -> String {
    csv_rows(
        "name,outcome,observed,bound,tolerance",
        checks.iter().map(|c| {
            let outcome = if c.passed() { "pass" } else { "fail" };
            format!("\"{}\",{outcome},{:e},{:e},{:e}", c.name.replace('"', "'"), c.observed, c.bound, c.tolerance)
        }),
    )
}

fn measure_csv(mu: &DiscreteSphericalMeasure) -> String {
    let n = mu.dim();
    let header: Vec<String> = (1..=n).map(|i| format!("u{i}")).chain(["mass".to_string()]).collect();
    csv_rows(
        &header.join(","),
        mu.atoms().iter().map(|a| a.u.as_slice().iter().chain([&a.mass]).map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")),
    )
}

fn cmd_chord(a: &ChordArgs, s: &Settings) -> CliResult<Output> {
    let (spec, body) = read_body(&a.body)?;
    let n = body.dim();
    let samples = a.samples.or(s.samples);
    let est: ChordEstimate = match a.method {
        MethodArg::LineMc => chord_line_mc(&body, a.q, samples.unwrap_or_else(|| default_line_samples(n)), s.seed)?,
        MethodArg::VolumeForm => {
            // Each sample point gets a fresh random rotation, so a coarse rule suffices.
            let quad = if n <= 3 { SphereQuadrature::product(n, 16) } else { SphereQuadrature::monte_carlo(n, 4096, s.seed) };
            chord_volume_form(&body, a.q, samples.unwrap_or(20_000), &quad, s.seed)?
        }
        MethodArg::RieszDouble => chord_riesz_double(&body, a.q, samples.unwrap_or(1_000_000), s.seed)?,
        MethodArg::ClosedForm => chord_closed(&body, a.q)
            .ok_or_else(|| CliError::Input(format!("no closed form for a {} at q = {}", body.kind(), a.q)))?,
        MethodArg::FacetQuadrature => {
            let p = polytope_of(&body)?;
            let v = chord_integral_quadrature(&p, a.q, s.measure.order)?;
            ChordEstimate { method: ChordMethod::FacetQuadrature, ..ChordEstimate::exact(v, a.q) }
        }
    };
    let csv = csv_rows(
        "method,q,value,std_error,samples,seed",
        [format!("{},{},{:e},{:e},{},{}", to_value(&est.method).as_str().unwrap_or(""), est.q, est.value, est.std_error, est.samples, est.seed)],
    );
    Ok(Output {
        command: "chord",
        inputs: json!({ "body": spec, "q": a.q, "method": a.method, "samples": samples }),
        results: to_value(&est),
        checks: Vec::new(),
        csv,
    })
}

fn cmd_dualv(a: &DualvArgs, s: &Settings) -> CliResult<Output> {
    let (spec, body) = read_body(&a.body)?;
    let n = body.dim();
    if a.z.len() != n {
        return Err(CliError::Input(format!("--z needs {n} coordinates, got {}", a.z.len())));
    }
    let (value, std_error) = match a.scheme {
        SchemeArg::Sphere => (dual_v(&body, &a.z, a.q, &SphereQuadrature::default_for(n, s.seed))?, 0.0),
        SchemeArg::Riesz => {
            let r = riesz_dual_v(&body, &a.z, a.q, a.samples.or(s.samples).unwrap_or(200_000), s.seed)?;
            (r.value, r.std_error)
        }
        SchemeArg::Potential => {
            let p = polytope_of(&body)?;
            if !p.contains(&a.z) {
                return Err(GeomError::PointOutside.into());
            }
            let skip = (0..p.len()).find(|&j| (p.offsets()[j] - chordgeom::linalg::dot(p.normals()[j].as_slice(), &a.z)).abs() <= 1e-12 * p.diameter());
            (FacetPotential::new(&p, a.q + 1.0)?.dual_v(&a.z, skip), 0.0)
        }
    };
    Ok(Output {
        command: "dualv",
        inputs: json!({ "body": spec, "z": a.z, "q": a.q, "scheme": a.scheme }),
        results: json!({ "value": value, "std_error": std_error }),
        checks: Vec::new(),
        csv: csv_rows("q,value,std_error", [format!("{},{value:e},{std_error:e}", a.q)]),
    })
}

fn cmd_measure(a: &MeasureArgs, s: &Settings) -> CliResult<Output> {
    let (spec, body) = read_body(&a.body)?;
    let p = polytope_of(&body)?;
    let cfg = MeasureConfig { seed: s.seed, ..s.measure };
    let (kind, mu) = if a.cone {
        ("cone_chord", cone_chord_measure(&p, a.q, &cfg)?)
    } else if let Some(lp) = a.lp {
        ("lp_chord", lp_chord_measure(&p, lp, a.q, &cfg)?)
    } else {
        ("chord", chord_measure_polytope(&p, a.q, &cfg)?)
    };
    Ok(Output {
        command: "measure",
        inputs: json!({ "body": spec, "q": a.q, "cone": a.cone, "lp": a.lp, "measure": cfg }),
        results: json!({ "kind": kind, "total_mass": mu.total_mass(), "measure": mu }),
        checks: Vec::new(),
        csv: measure_csv(&mu),
    })
}

fn cmd_solve(a: &SolveArgs, s: &Settings) -> CliResult<Output> {
    let mu: DiscreteSphericalMeasure = read_json(&a.measure)?;
    let mut cfg = SolverConfig { q: a.q, seed: s.seed, ..s.solver };
    if let Some(v) = a.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = a.residual_tol {
        cfg.residual_tol = v;
    }
    if let Some(v) = a.grad_tol {
        cfg.grad_tol = v;
    }
    let mut results = serde_json::Map::new();
    let outcome = match a.problem {
        ProblemArg::Chord => {
            let v = validate_chord_data(&mu, 1e-6_f64.max(cfg.measure_tol_budget))?;
            results.insert("validation".into(), to_value(&v));
            if !v.ok {
                return Err(CliError::Input(format!("measure violates the existence conditions: {:?}", v.violations)));
            }
            solve_chord_minkowski(&mu, &cfg)
        }
        ProblemArg::Log => {
            cfg.symmetric = true;
            let v = validate_log_data(&mu, a.q)?;
            results.insert("validation".into(), to_value(&v));
            solve_chord_log_minkowski(&mu, &cfg)
        }
    };
    let inputs = json!({ "measure": mu, "problem": a.problem, "solver": cfg });
    let bound = cfg.residual_tol + cfg.measure_tol_budget;
    let (checks, csv) = match outcome {
        Ok(r) => {
            let spec = BodySpec::from(&Body::HPolytope(r.body.clone()));
            let csv = csv_rows(
                "facet,offset",
                r.body.offsets().iter().enumerate().map(|(i, h)| format!("{i},{h:e}")),
            );
            results.insert("body".into(), to_value(&spec));
            results.insert("residual".into(), json!(r.residual));
            results.insert("scale_lambda".into(), json!(r.scale_lambda));
            results.insert("iterations".into(), json!(r.iterations));
            results.insert("gradient_norm".into(), json!(r.gradient_norm));
            results.insert("unmatched_atoms".into(), json!(r.unmatched_atoms));
            results.insert("objective_trace".into(), json!(r.objective_trace));
            (vec![CheckRecord::at_most("residual", r.residual, bound, 0.0)], csv)
        }
        Err(e @ (GeomError::NonConvergence { .. } | GeomError::CollapseDetected { .. } | GeomError::DegenerateDrift { .. })) => {
            results.insert("error".into(), json!(e.to_string()));
            let observed = match e {
                GeomError::NonConvergence { residual, .. } => residual,
                _ => f64::INFINITY,
            };
            let c = CheckRecord::at_most("residual", observed, bound, 0.0);
            let csv = checks_csv(std::slice::from_ref(&c));
            (vec![c], csv)
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Output { command: "solve", inputs, results: Value::Object(results), checks, csv })
}

fn cmd_check(a: &CheckArgs, s: &Settings) -> CliResult<Output> {
    let suite = Suite::from(a.suite);
    let checks = suite.run(a.n, s.seed)?;
    let passed = checks.iter().filter(|c| c.passed()).count();
    Ok(Output {
        command: "check",
        inputs: json!({ "suite": suite.name(), "n": a.n }),
        results: json!({ "passed": passed, "total": checks.len() }),
        csv: checks_csv(&checks),
        checks,
    })
}

fn cmd_sharpness(a: &SharpnessArgs, s: &Settings) -> CliResult<Output> {
    let js: Vec<u32> = std::iter::successors(Some(1u32), |j| j.checked_mul(2)).take_while(|j| *j <= a.jmax).collect();
    let cfg = MeasureConfig { seed: s.seed, ..MeasureConfig::fast() };
    let t = sharpness_sequence(a.k, a.q, a.n, &js, &cfg)?;
    let checks = vec![
        CheckRecord::at_least("monotone", t.monotone() as u8 as f64, 1.0, 0.0),
        CheckRecord::at_least("final ratio / limit", t.final_fraction(), 0.95, 0.0),
    ];
    Ok(Output {
        command: "sharpness",
        inputs: json!({ "n": a.n, "k": a.k, "q": a.q, "jmax": a.jmax }),
        csv: csv_rows("j,ratio", t.rows.iter().map(|r| format!("{},{:e}", r.j, r.ratio))),
        results: to_value(&t),
        checks,
    })
}

fn settings(cli: &Cli) -> CliResult<(Settings, Option<usize>)> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(file.threads);
    Ok((
        Settings {
            seed: cli.seed.or(file.seed).unwrap_or(0),
            samples: file.samples,
            measure: file.measure.unwrap_or_default(),
            solver: file.solver.unwrap_or_default(),
        },
        threads,
    ))
}

fn run(cli: &Cli) -> CliResult<(Report, String)> {
    let start = Instant::now();
    let (s, threads) = settings(cli)?;
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Input("--threads must be positive".into()));
        }
        // Ignore the error when a pool already exists (tests call run twice).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let out = match &cli.command {
        Command::Chord(a) => cmd_chord(a, &s)?,
        Command::Dualv(a) => cmd_dualv(a, &s)?,
        Command::Measure(a) => cmd_measure(a, &s)?,
        Command::Solve(a) => cmd_solve(a, &s)?,
        Command::Check(a) => cmd_check(a, &s)?,
        Command::Sharpness(a) => cmd_sharpness(a, &s)?,
    };
    let report = Report {
        command: out.command.into(),
        inputs: out.inputs,
        seeds: vec![s.seed],
        results: out.results,
        checks: out.checks,
        wall_time_ms: (!cli.omit_timing).then(|| start.elapsed().as_millis() as u64),
        version: VERSION.into(),
    };
    Ok((report, out.csv))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, csv)) => {
            if cli.csv {
                print!("{csv}");
            } else {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            }
            if report.checks.iter().all(|c| c.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
