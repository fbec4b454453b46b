//! The `nilpotentizer` command line: scenario in, `report.json` and CSV tables out.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::cone::{build_cone, compute_rx};
use crate::error::Error;
use crate::gh::{convergence_study, default_schedule, GhOptions};
use crate::grassmann::{diagnostics_csv, limit_along_path, ApproachPath};
use crate::metrics::{quasi_norm_element, DistanceOptions, GroupoidPoint, ManifoldMetric, QuasiNormOptions, SolveStatus};
use crate::selftest;
use crate::vfields::{build_natural_map, hormander_check};

pub use config::{parse_config, ConfigError, ConfigIssue, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Validate,
    Cones,
    Distance,
    Quasinorm,
    Gh,
    Selftest,
}

#[derive(Debug, Parser)]
#[command(name = "nilpotentizer", version, about = "Tangent cones and nilpotent approximation of polynomial sub-Riemannian structures")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Scenario file (JSON); optional for `selftest`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Restrict `cones` or `gh` to one named path.
    #[arg(long)]
    pub path: Option<String>,
    /// Scale parameter for `distance` and `quasinorm`.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parse { .. } | Error::DimensionMismatch(_) | Error::InvalidArgument(_) | Error::AlgebraMismatch { .. } => {
                CliError::Config(msg)
            }
            Error::Internal(_) => CliError::Internal(msg),
            _ => CliError::Numeric(msg),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub status: &'static str,
    pub inputs_hash: String,
    pub seed: u64,
    pub outputs: Value,
    pub tables: Vec<String>,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

/// What a command produced: JSON outputs, named CSV tables, warnings, and
/// whether any numeric check failed.
#[derive(Default)]
struct Outcome {
    outputs: Value,
    tables: Vec<(String, String)>,
    warnings: Vec<String>,
    failures: Vec<String>,
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn execute(args: &Args) -> Result<i32, CliError> {
    if let Some(n) = args.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    let text = match &args.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?),
        None if args.command == Command::Selftest => None,
        None => return Err(CliError::Config("--config is required".into())),
    };
    let cfg = match &text {
        Some(t) => Some(parse_config(t)?),
        None => None,
    };
    let seed = args.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);

    let outcome = match (args.command, &cfg) {
        (Command::Selftest, _) => cmd_selftest(),
        (cmd, Some(c)) => match cmd {
            Command::Validate => cmd_validate(c),
            Command::Cones => cmd_cones(c, args.path.as_deref()),
            Command::Distance => cmd_distance(c, args.t, seed),
            Command::Quasinorm => cmd_quasinorm(c, args.t, seed),
            Command::Gh => cmd_gh(c, args.path.as_deref(), seed),
            Command::Selftest => unreachable!(),
        },
        (_, None) => unreachable!(),
    }?;

    let mut hasher = Sha256::new();
    hasher.update(format!("{:?}\0", args.command).as_bytes());
    hasher.update(text.as_deref().unwrap_or("").as_bytes());
    hasher.update(format!("\0{:?}\0{:?}\0{seed}", args.path, args.t).as_bytes());
    let inputs_hash = hex::encode(hasher.finalize());

    let tables_dir = args.out.join("tables");
    fs::create_dir_all(&tables_dir).map_err(|e| io_error(&tables_dir, e))?;
    let mut table_names = Vec::new();
    for (name, csv) in &outcome.tables {
        let p = tables_dir.join(format!("{name}.csv"));
        fs::write(&p, csv).map_err(|e| io_error(&p, e))?;
        table_names.push(format!("tables/{name}.csv"));
    }
    let failed = !outcome.failures.is_empty();
    let mut warnings = outcome.warnings;
    warnings.extend(outcome.failures.iter().map(|f| format!("failure: {f}")));
    let report = RunReport {
        command: args.command,
        status: if failed { "numeric failure" } else { "ok" },
        inputs_hash,
        seed,
        outputs: outcome.outputs,
        tables: table_names,
        wall_time: start.elapsed().as_secs_f64(),
        warnings,
    };
    let p = args.out.join("report.json");
    let body = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    fs::write(&p, body).map_err(|e| io_error(&p, e))?;

    for f in &outcome.failures {
        eprintln!("failure: {f}");
    }
    println!("{:?}: {} ({:.2} s), report at {}", args.command, report.status, report.wall_time, p.display());
    Ok(if failed { EXIT_NUMERIC } else { EXIT_OK })
}

fn io_error(p: &Path, e: std::io::Error) -> CliError {
    CliError::Internal(format!("{}: {e}", p.display()))
}

fn to_json<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Internal(e.to_string()))
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(header).map_err(internal)?;
    for r in rows {
        w.write_record(r).map_err(internal)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

/// Tensor grid `lo..=hi` with `steps` points per axis.
fn grid(dim: usize, lo: f64, hi: f64, steps: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = if steps <= 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
    };
    let mut pts = vec![Vec::new()];
    for _ in 0..dim {
        pts = pts.into_iter().flat_map(|p| axis.iter().map(move |&a| [p.clone(), vec![a]].concat())).collect();
    }
    pts
}

fn cmd_validate(c: &ScenarioConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let nm = match build_natural_map(&c.structure) {
        Ok(nm) => nm,
        Err(Error::Internal(m)) => {
            out.failures.push(m);
            out.outputs = json!({ "bracket_compatible": false });
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    };
    let alg = nm.algebra();
    let validation = alg.validate();
    if !validation.is_valid() {
        out.failures.push(format!("{} structure-constant violations", validation.violations.len()));
    }
    let v = &c.studies.validate;
    let mut points = grid(c.structure.dim_m(), v.lo, v.hi, v.steps);
    points.extend(c.points.iter().cloned());
    let h = hormander_check(&c.structure, &points)?;
    if !h.ok() {
        let first = &h.ranks[h.deficient[0]];
        out.failures.push(format!(
            "Hormander condition fails at {} of {} points (first {:?}, rank {} < {})",
            h.deficient.len(),
            points.len(),
            first.0,
            first.1,
            h.dim_m
        ));
    }
    let rows: Vec<Vec<String>> = h.ranks.iter().map(|(p, r)| vec![fmt_point(p), r.to_string()]).collect();
    out.tables.push(("hormander".into(), csv_table(&["point", "rank"], &rows)?));
    out.outputs = json!({
        "algebra": { "dim": alg.dim(), "weights": alg.weights(), "depth": alg.depth() },
        "algebra_valid": validation.is_valid(),
        "violations": validation.violations.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>(),
        "bracket_compatible": true,
        "hormander": { "points": points.len(), "deficient": h.deficient.len(), "dim_m": h.dim_m },
    });
    Ok(out)
}

fn selected_paths<'a>(c: &'a ScenarioConfig, name: Option<&str>) -> Result<Vec<&'a ApproachPath>, CliError> {
    match name {
        Some(n) => c.path(n).map(|p| vec![p]).ok_or_else(|| CliError::Config(format!("no path named {n:?}"))),
        None => Ok(c.paths.iter().collect()),
    }
}

fn cmd_cones(c: &ScenarioConfig, name: Option<&str>) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let nm = build_natural_map(&c.structure)?;
    let tol = &c.tolerances;
    let mut limits = Vec::new();
    for p in selected_paths(c, name)? {
        match limit_along_path(&nm, p, tol.rank, tol.cauchy) {
            Ok((h, diag)) => {
                let sub = nm.algebra().is_subalgebra(&h, tol.subalgebra)?;
                if !sub.is_subalgebra {
                    out.failures.push(format!("path {}: limit is not a subalgebra (residual {:.2e})", p.name, sub.residual));
                }
                let cone = match build_cone(nm.algebra(), &h) {
                    Ok(cone) => json!({ "complement": cone.complement(), "graded": cone.is_graded(), "dim": cone.dim() }),
                    Err(e) => {
                        out.warnings.push(format!("path {}: no cone ({e})", p.name));
                        Value::Null
                    }
                };
                out.tables.push((format!("cones_{}", p.name), diagnostics_csv(&diag)?));
                limits.push(json!({
                    "path": p.name,
                    "dim": h.dim(),
                    "basis": h.basis_vectors(),
                    "converged_at": diag.converged_at,
                    "final_gap": diag.gaps.last().map(|g| g.2),
                    "subalgebra_residual": sub.residual,
                    "cone": cone,
                }));
            }
            Err(e) => {
                out.failures.push(format!("path {}: {e}", p.name));
                limits.push(json!({ "path": p.name, "error": e.to_string() }));
            }
        }
    }
    let mut sections = Vec::new();
    if name.is_none() {
        for x in &c.points {
            let rx = compute_rx(&nm, x)?;
            sections.push(json!({ "point": x, "rx": to_json(&rx)? }));
        }
    }
    out.outputs = json!({ "limits": limits, "rx": sections });
    Ok(out)
}

fn pair_study(c: &ScenarioConfig, quasi: bool) -> Result<&config::PairStudy, CliError> {
    let (study, key) = if quasi { (&c.studies.quasinorm, "quasinorm") } else { (&c.studies.distance, "distance") };
    study.as_ref().ok_or_else(|| CliError::Config(format!("/studies/{key}: missing study")))
}

fn check_t(t: f64) -> Result<f64, CliError> {
    if t > 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(CliError::Config(format!("--t must be positive, got {t}")))
    }
}

fn cmd_distance(c: &ScenarioConfig, t: Option<f64>, seed: u64) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let study = pair_study(c, false)?;
    let t = check_t(t.unwrap_or(study.t))?;
    let nm = build_natural_map(&c.structure)?;
    let metric = ManifoldMetric::new(&c.structure, &nm)?;
    let opts = DistanceOptions { starts: study.starts, endpoint_tol: c.tolerances.endpoint, seed, ..Default::default() };
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (i, (x, y)) in study.pairs.iter().enumerate() {
        let r = metric.distance(x, y, t, &opts, None)?;
        if r.status != SolveStatus::Converged {
            out.failures.push(format!("pair {i}: solver did not converge (residual {:.2e})", r.residual));
        }
        rows.push(vec![fmt_point(x), fmt_point(y), t.to_string(), r.value.to_string(), r.d1.to_string(), r.residual.to_string()]);
        results.push(json!({ "x": x, "y": y, "t": t, "distance": r.value, "d1": r.d1, "residual": r.residual, "status": to_json(&r.status)?, "controls": r.controls }));
    }
    out.tables.push(("distance".into(), csv_table(&["x", "y", "t", "distance", "d1", "residual"], &rows)?));
    out.outputs = json!({ "distances": results });
    Ok(out)
}

fn cmd_quasinorm(c: &ScenarioConfig, t: Option<f64>, seed: u64) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let study = pair_study(c, true)?;
    let t = check_t(t.unwrap_or(study.t))?;
    let nm = build_natural_map(&c.structure)?;
    let opts = QuasiNormOptions { starts: study.starts, endpoint_tol: c.tolerances.endpoint, seed, ..Default::default() };
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (i, (x, y)) in study.pairs.iter().enumerate() {
        let g = GroupoidPoint::Manifold { y: y.clone(), x: x.clone(), t };
        match quasi_norm_element(&nm, &g, &opts) {
            Ok(r) => {
                rows.push(vec![fmt_point(x), fmt_point(y), t.to_string(), r.value.to_string(), r.residual.to_string()]);
                results.push(json!({ "x": x, "y": y, "t": t, "quasinorm": r.value, "minimizer": r.minimizer, "residual": r.residual }));
            }
            Err(e) => {
                out.failures.push(format!("pair {i}: {e}"));
                results.push(json!({ "x": x, "y": y, "t": t, "error": e.to_string() }));
            }
        }
    }
    out.tables.push(("quasinorm".into(), csv_table(&["x", "y", "t", "quasinorm", "residual"], &rows)?));
    out.outputs = json!({ "quasinorms": results });
    Ok(out)
}

fn cmd_gh(c: &ScenarioConfig, name: Option<&str>, seed: u64) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let study = &c.studies.gh;
    let path = match name.or(study.path.as_deref()) {
        Some(n) => c.path(n).ok_or_else(|| CliError::Config(format!("no path named {n:?}")))?,
        None => c.paths.first().ok_or_else(|| CliError::Config("/paths: the gh study needs a path".into()))?,
    };
    let nm = build_natural_map(&c.structure)?;
    let opts = GhOptions { seed, ..Default::default() };
    let table = convergence_study(&nm, &c.structure, path, study.radius, study.n, &default_schedule(study.rows), &opts)?;
    for r in table.rows.iter().filter(|r| r.flagged) {
        out.warnings.push(format!("t = {:e}: {} unconverged pairs", r.t, r.unconverged_pairs));
    }
    if !table.is_monotone(2.0 * crate::metrics::SOLVER_TOL) {
        out.warnings.push(format!("distortion increases by {:.2e} between rows", table.max_increase));
    }
    out.tables.push((format!("gh_{}", path.name), table.to_csv()?));
    out.outputs = to_json(&table)?;
    Ok(out)
}

fn cmd_selftest() -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for id in 1..=11 {
        let r = selftest::run_criterion(id);
        println!("{}", r.line());
        if !r.passed {
            out.failures.push(format!("criterion {id}: {}", r.detail));
        }
        rows.push(vec![id.to_string(), r.name.clone(), r.passed.to_string(), format!("{:.3}", r.seconds), r.detail.clone()]);
        results.push(r);
    }
    out.tables.push(("selftest".into(), csv_table(&["criterion", "name", "passed", "seconds", "detail"], &rows)?));
    out.outputs = json!({ "criteria": to_json(&results)? });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_corners() {
        let g = grid(2, -1.0, 1.0, 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![-1.0, -1.0]);
        assert_eq!(g[8], vec![1.0, 1.0]);
        assert_eq!(grid(1, 0.0, 2.0, 1), vec![vec![1.0]]);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::Parse { pos: 1, msg: "x".into() }).exit_code(), EXIT_CONFIG);
        assert_eq!(CliError::from(Error::NoConvergence { gaps: vec![] }).exit_code(), EXIT_NUMERIC);
        assert_eq!(CliError::from(Error::Internal("x".into())).exit_code(), EXIT_INTERNAL);
    }

    #[test]
    fn missing_config_is_a_config_error() {
        assert_eq!(run(["nilpotentizer", "validate"]), EXIT_CONFIG);
        assert_eq!(run(["nilpotentizer", "bogus"]), EXIT_CONFIG);
    }
}
