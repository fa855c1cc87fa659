//! Argument types, report format and dispatch behind the `sympack` binary.
//!
//! Every subcommand produces a [`Report`]: the parsed configuration, one
//! entry per check with its measured value and threshold, a free-form
//! result, and wall-clock timing. Apart from `timing` the report depends
//! only on the configuration, so two runs with the same flags are
//! byte-identical once that field is dropped.
//!
//! Exit codes: `0` when every check passes, `1` when a check fails or a
//! computation cannot be certified, `2` for invalid configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::assembly::{embed_measure, EmbeddingPlan};
use crate::audit::{self, DEFECT_TOL_TRANSITION};
use crate::error::{Error, Result};
use crate::fibers::{
    phi_iota_a, phi_std, rho_a, rho_fiber_solve, step_halving_study, torus_dimension,
    BracketReport, EmbeddedChart, FiberSolution, PolydiskChart,
};
use crate::folding::{build_polydisk_embedding, Membership};
use crate::geometry::{PieceTable, SymplecticMap, SEAM_TOL};
use crate::measure::{indexed_rng, sample, MeasureSpec};
use crate::quasistate::{
    indicator, pushforward_eval, special_fiber_component, superheavy_check, zeta_integral, zeta_median, CellFunction,
    DiscreteMeasure, DiscreteMeasureSpec, DiscreteSpace, Poly,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "SYMPACK_THREADS";

/// Measure used by `involutivity --map embedded` when none is given.
const DEFAULT_EMBED_MEASURE: &str = include_str!("../data/three-atoms.json");

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "sympack", version, about = "Folding embeddings, discrete quasi-states and cutoff fibers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Command {
    /// Build the polydisk-into-cube folding embedding and audit it.
    Fold(FoldArgs),
    /// Embed a long box into a neighborhood of a measure and certify coverage.
    Embed(EmbedArgs),
    /// Evaluate the median quasi-state on a discretized sphere.
    Qs(QsArgs),
    /// Solve for the fiber of the cutoff moment map.
    Fibers(FibersArgs),
    /// Certify involutivity of a moment-type map by finite differences.
    Involutivity(InvolutivityArgs),
    /// Check the symplectic defect of a map described by a piece table.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FoldArgs {
    /// Odd cube side, at least 5.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Half the ambient dimension, at least 2.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Samples per slab check; coverage and defect use ten times as many.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Samples for the injectivity check (default: 100 x samples).
    #[arg(long)]
    pub injectivity_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Required confirmed fraction in the coverage window.
    #[arg(long, default_value_t = 0.99)]
    pub min_coverage: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// CSV of domain samples, their images and defects.
    #[arg(long)]
    pub dump_points: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EmbedArgs {
    /// Measure JSON (atoms and uniform boxes with decimal-string masses).
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo samples from the measure.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Domain samples for the defect and injectivity summaries.
    #[arg(long, default_value_t = 10_000)]
    pub audit_samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of the Monte Carlo samples and their verdicts.
    #[arg(long)]
    pub dump_points: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QsOp {
    Median,
    Integral,
    Superheavy,
    Pushforward,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct QsArgs {
    #[arg(long, default_value = "cube-sphere:32")]
    pub space: String,
    /// Cell measure JSON, or `uniform`.
    #[arg(long, default_value = "uniform")]
    pub measure: String,
    /// Cell function CSV (`cell,value`), or `height`.
    #[arg(long, default_value = "height")]
    pub function: String,
    #[arg(long, value_enum)]
    pub op: QsOp,
    /// Coefficients of `h`, increasing degree, for `pushforward`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub poly: Option<Vec<f64>>,
    /// CSV of cell indices tested by `superheavy` (default: the special fiber component of the function).
    #[arg(long)]
    pub set: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FibersArgs {
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub a: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub c: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// The standard moment map on `C^n`.
    Std,
    /// `rho_a` composed with the standard moment map.
    Rho,
    /// The cutoff moment map pushed through the assembled embedding.
    Embedded,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InvolutivityArgs {
    #[arg(long, value_enum)]
    pub map: MapKind,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Finite-difference step (default: 1e-5, or eta/200 for `embedded`).
    #[arg(long)]
    pub step: Option<f64>,
    /// Number of step halvings in the convergence study.
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    /// Complex dimension for `std` and `rho`.
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Cutoff radii `a_j` (default: all 1, or 0.9 b_j for `embedded`).
    #[arg(long, value_delimiter = ',')]
    pub a: Option<Vec<f64>>,
    /// Measure for `embedded` (default: the bundled three-atom measure).
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Bracket bound (default: 1e-8, or 1e-4 for `embedded`).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    /// Piece table JSON.
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    /// How `measured` is compared with `threshold`.
    pub relation: &'static str,
    pub threshold: f64,
}

impl Check {
    fn le(name: &str, measured: f64, threshold: f64) -> Self {
        Check { name: name.into(), pass: measured <= threshold, measured, relation: "<=", threshold }
    }
    fn ge(name: &str, measured: f64, threshold: f64) -> Self {
        Check { name: name.into(), pass: measured >= threshold, measured, relation: ">=", threshold }
    }
    fn gt(name: &str, measured: f64, threshold: f64) -> Self {
        Check { name: name.into(), pass: measured > threshold, measured, relation: ">", threshold }
    }
    fn eq(name: &str, measured: f64, threshold: f64) -> Self {
        Check { name: name.into(), pass: measured == threshold, measured, relation: "==", threshold }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub config: Command,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub result: Value,
    pub timing: Timing,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }

    /// The report without the `timing` field.
    pub fn deterministic_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        v.as_object_mut().expect("object").remove("timing");
        v
    }

    fn out_path(&self) -> Option<&Path> {
        match &self.config {
            Command::Fold(a) => a.report.as_deref(),
            Command::Embed(a) => a.out.as_deref(),
            Command::Qs(a) => a.out.as_deref(),
            Command::Fibers(a) => a.out.as_deref(),
            Command::Involutivity(a) => a.out.as_deref(),
            Command::Verify(a) => a.out.as_deref(),
        }
    }
}

/// Exit code for an error raised while running a subcommand.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::BadK(_)
        | Error::BadDimension(_)
        | Error::InvalidMeasure(_)
        | Error::EpsilonTooSmall(_)
        | Error::NotSolid => EXIT_CONFIG,
        _ => EXIT_CHECK_FAILED,
    }
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| config(format!("cannot write {}: {e}", path.display())))
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let csv_err = |e: csv::Error| config(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| config(format!("cannot write {}: {e}", path.display())))
}

fn coord_header(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

fn need_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(config(format!("{name} must be positive, got {x}")))
    }
}

fn need_count(name: &str, n: usize) -> Result<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(config(format!("{name} must be at least 1")))
    }
}

/// Caps the global worker pool at `SYMPACK_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| config(format!("{THREADS_ENV}={v:?} is not a count")))?;
    need_count(THREADS_ENV, n)?;
    // A pool built earlier in the process stays in place.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one subcommand and assembles its report. Output files requested by
/// the configuration (point dumps) are written here; the report itself is
/// written by [`execute`].
pub fn run(cli: &Cli) -> Result<Report> {
    let start = Instant::now();
    let (checks, result) = match &cli.command {
        Command::Fold(a) => run_fold(a)?,
        Command::Embed(a) => run_embed(a)?,
        Command::Qs(a) => run_qs(a)?,
        Command::Fibers(a) => run_fibers(a)?,
        Command::Involutivity(a) => run_involutivity(a)?,
        Command::Verify(a) => run_verify(a)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(Report {
        version: env!("CARGO_PKG_VERSION"),
        config: cli.command.clone(),
        checks,
        pass,
        result,
        timing: Timing { elapsed_ms: start.elapsed().as_secs_f64() * 1e3 },
    })
}

/// Parses `args`, runs, writes the report, and returns the exit code.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let outcome = configure_threads().and_then(|_| run(&cli));
    match outcome {
        Ok(report) => {
            let text = serde_json::to_string_pretty(&report).expect("reports serialize");
            match report.out_path() {
                Some(p) => {
                    if let Err(e) = write_text(p, &text) {
                        eprintln!("error: {e}");
                        return EXIT_CONFIG;
                    }
                }
                None => println!("{text}"),
            }
            for c in &report.checks {
                eprintln!(
                    "{} {}: {:e} {} {:e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.relation,
                    c.threshold
                );
            }
            report.exit_code()
        }
        Err(e) => {
            let code = exit_code_for(&e);
            let err = json!({ "error": e.to_string(), "exit_code": code });
            eprintln!("{}", serde_json::to_string_pretty(&err).expect("json"));
            code
        }
    }
}

type Outcome = (Vec<Check>, Value);

fn run_fold(a: &FoldArgs) -> Result<Outcome> {
    need_count("samples", a.samples)?;
    if !(a.min_coverage > 0.0 && a.min_coverage <= 1.0) {
        return Err(config("min-coverage must lie in (0, 1]"));
    }
    let e = build_polydisk_embedding(a.k, a.n)?;
    let many = 10 * a.samples;
    let entry = audit::entry_slab(&e, a.samples, a.seed);
    let exit = audit::exit_slab(&e, a.samples, a.seed.wrapping_add(1));
    let coverage = audit::interior_coverage(&e, 2.0, a.k as f64 - 2.0, 0.05, many, a.seed.wrapping_add(2), a.min_coverage);
    let defect = audit::fold_defect(&e, many, a.seed.wrapping_add(3));
    let lift = audit::lift_placement(&e, (a.samples / 10).max(1), a.seed.wrapping_add(4));
    let inj_n = a.injectivity_samples.unwrap_or(100 * a.samples);
    need_count("injectivity-samples", inj_n)?;
    let inj_pts = audit::domain_points(&e, inj_n, a.seed.wrapping_add(5));
    let injectivity = audit::injectivity(&e, &inj_pts, 1e-3, 1e-6);

    let checks = vec![
        Check::le("entry_slab_identity", entry.max_error, entry.tol),
        Check::le("exit_slab_translation", exit.max_error, exit.tol),
        Check::ge("interior_coverage", coverage.fraction, a.min_coverage),
        Check::eq("false_in_verdicts", coverage.false_in as f64, 0.0),
        Check::le("defect_body", defect.body.max, defect.body.tol),
        Check::le("defect_transition", defect.transition.max, defect.transition.tol),
        Check::eq("defect_failures", (defect.body.failures + defect.transition.failures) as f64, 0.0),
        Check::eq("lift_misplaced_cubes", lift.failed_cubes.len() as f64, 0.0),
        Check::eq("injectivity_collisions", injectivity.collisions as f64, 0.0),
    ];
    if let Some(path) = &a.dump_points {
        let pts = audit::domain_points(&e, a.samples, a.seed.wrapping_add(6));
        let rows: Vec<Vec<String>> = pts
            .par_iter()
            .map(|z| {
                let w = e.eval(z).unwrap_or_else(|_| vec![f64::NAN; z.len()]);
                let d = e.defect(z).unwrap_or(f64::NAN);
                z.iter().chain(&w).chain(std::iter::once(&d)).map(|x| x.to_string()).collect()
            })
            .collect();
        let mut header = coord_header("z", 2 * a.n);
        header.extend(coord_header("w", 2 * a.n));
        header.push("defect".into());
        write_csv(path, &header, &rows)?;
    }
    let result = json!({
        "alpha": e.alpha,
        "band_length": e.base().band_length,
        "entry": entry,
        "exit": exit,
        "coverage": coverage,
        "defect": defect,
        "lift": lift,
        "injectivity": injectivity,
    });
    Ok((checks, result))
}

/// Uniform samples of the long box `(0, beta) x (0, eta)^{N-1}`.
pub fn box_points(plan: &EmbeddingPlan, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..samples)
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let mut z = vec![plan.beta * rng.gen::<f64>()];
            z.extend((1..plan.dim).map(|_| plan.eta * rng.gen::<f64>()));
            z
        })
        .collect()
}

fn run_embed(a: &EmbedArgs) -> Result<Outcome> {
    need_count("samples", a.samples)?;
    need_count("audit-samples", a.audit_samples)?;
    if !(a.epsilon > 0.0 && a.epsilon < 1.0) {
        return Err(config("epsilon must lie in (0, 1)"));
    }
    let mu = MeasureSpec::from_json(&read_text(&a.measure)?)?;
    let (total, coverage) = embed_measure(&mu, a.epsilon, a.samples, a.seed)?;
    let plan = total.plan().clone();
    let pts = box_points(&plan, a.audit_samples, a.seed.wrapping_add(1));
    let defect = audit::defect_stats(&total, &pts, DEFECT_TOL_TRANSITION);
    // Separation and collision radius scale with the box thickness.
    let injectivity = audit::injectivity(&total, &pts, 1e-3 * plan.eta, 1e-6 * plan.eta);
    let mc_floor = 1.0 - a.epsilon - 3.0 * coverage.mc_sigma;
    let covered_atoms = coverage.atoms.iter().filter(|x| x.covered).count();
    let checks = vec![
        Check::gt("exact_coverage_bound", coverage.exact_bound, 1.0 - a.epsilon),
        Check::ge("mc_coverage", coverage.mc_fraction, mc_floor),
        Check::eq("atoms_covered", covered_atoms as f64, coverage.atoms.len() as f64),
        Check::le("defect", defect.max, defect.tol),
        Check::eq("defect_failures", defect.failures as f64, 0.0),
        Check::eq("injectivity_collisions", injectivity.collisions as f64, 0.0),
    ];
    if let Some(path) = &a.dump_points {
        let xs = sample(&mu, a.samples, a.seed);
        let rows: Vec<Vec<String>> = xs
            .par_iter()
            .map(|x| {
                let verdict = match total.covers(x) {
                    Membership::In { .. } => "in",
                    Membership::Out => "out",
                    Membership::Unknown => "unknown",
                };
                let mut r: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                r.push(verdict.into());
                r
            })
            .collect();
        let mut header = coord_header("x", mu.dim);
        header.push("verdict".into());
        write_csv(path, &header, &rows)?;
    }
    let result = json!({
        "plan": plan,
        "coverage": coverage,
        "defect": defect,
        "injectivity": injectivity,
    });
    Ok((checks, result))
}

fn load_cell_measure(space: &DiscreteSpace, arg: &str) -> Result<DiscreteMeasure> {
    let spec = if arg == "uniform" {
        DiscreteMeasureSpec::Uniform { seed: 0 }
    } else {
        serde_json::from_str(&read_text(Path::new(arg))?).map_err(|e| config(format!("measure {arg}: {e}")))?
    };
    DiscreteMeasure::from_spec(space, &spec)
}

fn load_cell_function(space: &DiscreteSpace, arg: &str) -> Result<CellFunction> {
    if arg == "height" {
        return Ok(CellFunction::height(space));
    }
    let file = fs::File::open(arg).map_err(|e| config(format!("cannot read {arg}: {e}")))?;
    CellFunction::from_csv(file, space.len())
}

fn load_cells(path: &Path) -> Result<Vec<usize>> {
    let text = read_text(path)?;
    let mut cells = Vec::new();
    for (i, line) in text.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
        match line.split(',').next().expect("split yields a field").trim().parse::<usize>() {
            Ok(c) => cells.push(c),
            Err(_) if i == 0 => {}
            Err(_) => return Err(config(format!("{}: bad cell index {line:?}", path.display()))),
        }
    }
    Ok(cells)
}

fn run_qs(a: &QsArgs) -> Result<Outcome> {
    let space = DiscreteSpace::from_tag(&a.space)?;
    let mu = load_cell_measure(&space, &a.measure)?;
    let f = load_cell_function(&space, &a.function)?;
    Ok(match a.op {
        QsOp::Median => {
            let m = zeta_median(&space, &mu, &f)?;
            (Vec::new(), json!({ "value": m.value, "cell": m.cell }))
        }
        QsOp::Integral => {
            let v = zeta_integral(&space, &mu, &f)?;
            (Vec::new(), json!({ "value": v }))
        }
        QsOp::Superheavy => {
            let cells = match &a.set {
                Some(p) => load_cells(p)?,
                None => special_fiber_component(&space, &mu, &f)?,
            };
            let set = indicator(&space, &cells)?;
            let heavy = superheavy_check(&space, &mu, &set)?;
            let checks = vec![Check::eq("superheavy", heavy as u8 as f64, 1.0)];
            (checks, json!({ "superheavy": heavy, "cells": cells, "mass": mu.measure_of(&set) }))
        }
        QsOp::Pushforward => {
            let coeffs = a.poly.clone().ok_or_else(|| config("pushforward needs --poly"))?;
            let h = Poly::new(coeffs);
            let v = pushforward_eval(&space, &mu, &f, &h)?;
            let z = zeta_median(&space, &mu, &f)?.value;
            let expect = h.eval(z);
            let checks = vec![Check::eq("ring_homomorphism", v, expect)];
            (checks, json!({ "value": v, "median": z, "h_of_median": expect }))
        }
    })
}

fn run_fibers(a: &FibersArgs) -> Result<Outcome> {
    let result = match rho_fiber_solve(&a.a, &a.c) {
        Ok(FiberSolution::ComplementOfBox) => {
            json!({ "kind": "complement_of_box", "alpha": Value::Null, "residual": 0.0 })
        }
        Ok(sol @ FiberSolution::Product { .. }) => {
            let FiberSolution::Product { alpha, residual } = &sol else { unreachable!() };
            json!({
                "kind": "product",
                "alpha": alpha,
                "residual": residual,
                "torus_dimension": torus_dimension(alpha),
                "points": sol.points().len(),
            })
        }
        Err(Error::NotInImage) => json!({ "kind": "empty", "alpha": Value::Null, "residual": Value::Null }),
        Err(Error::BisectionStall) => {
            let checks = vec![Check::eq("solver_certified", 0.0, 1.0)];
            return Ok((checks, json!({ "kind": "stall", "alpha": Value::Null, "residual": Value::Null })));
        }
        Err(e) => return Err(e),
    };
    Ok((Vec::new(), result))
}

/// Uniform samples of the polydisk `P(fill a_1, .., fill a_n)`.
pub fn polydisk_points(a: &[f64], n: usize, fill: f64, seed: u64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            a.iter()
                .flat_map(|&aj| {
                    let r = (fill * aj * rng.gen::<f64>()).sqrt();
                    let th = std::f64::consts::TAU * rng.gen::<f64>();
                    [r * th.cos(), r * th.sin()]
                })
                .collect::<Vec<f64>>()
        })
        .collect()
}

fn run_involutivity(a: &InvolutivityArgs) -> Result<Outcome> {
    need_count("points", a.points)?;
    need_count("levels", a.levels)?;
    need_count("dim", a.dim)?;
    need_positive("epsilon", a.epsilon)?;
    let study: Vec<BracketReport>;
    let mut checks = Vec::new();
    let mut extra = json!({});
    match a.map {
        MapKind::Std | MapKind::Rho => {
            let radii = a.a.clone().unwrap_or_else(|| vec![1.0; a.dim]);
            if radii.len() != a.dim || radii.iter().any(|x| !(*x > 0.0)) {
                return Err(config(format!("--a needs {} positive entries", a.dim)));
            }
            let step = a.step.unwrap_or(1e-5);
            need_positive("step", step)?;
            let fill = if a.map == MapKind::Std { 1.0 } else { 0.8 };
            let pts = polydisk_points(&radii, a.points, fill, a.seed);
            study = if a.map == MapKind::Std {
                step_halving_study(&|z: &[f64]| Ok(phi_std(z)), &pts, step, a.levels)
            } else {
                step_halving_study(&|z: &[f64]| Ok(rho_a(&radii, &phi_std(z))), &pts, step, a.levels)
            };
            let last = study.last().expect("levels >= 1");
            checks.push(Check::le("max_bracket", last.max_bracket, a.tol.unwrap_or(1e-8)));
        }
        MapKind::Embedded => {
            let text = match &a.measure {
                Some(p) => read_text(p)?,
                None => DEFAULT_EMBED_MEASURE.to_string(),
            };
            let mu = MeasureSpec::from_json(&text)?;
            let chart = EmbeddedChart::new(crate::assembly::build_total_embedding(&mu, a.epsilon)?);
            let b = chart.radii_squared();
            let radii = a.a.clone().unwrap_or_else(|| b.iter().map(|x| 0.9 * x).collect());
            let eta = chart.total.plan().eta;
            let step = a.step.unwrap_or(eta / 200.0);
            need_positive("step", step)?;
            let pts = chart.sample_image(a.points, a.seed, 0.1, 0.85)?;
            let phi = |z: &[f64]| phi_iota_a(&chart, &radii, z);
            phi(&pts[0])?;
            study = step_halving_study(&phi, &pts, step, a.levels);
            let tol = a.tol.unwrap_or(1e-4);
            let last = study.last().expect("levels >= 1");
            checks.push(Check::le("max_bracket", last.max_bracket, tol));
            checks.push(Check::le("max_normalized_bracket", last.max_normalized, tol));
            let ratios: Vec<f64> = study.windows(2).map(|w| w[0].max_normalized / w[1].max_normalized).collect();
            for (i, r) in ratios.iter().enumerate() {
                // Halving the step of a second-order stencil divides its error by about four.
                checks.push(Check::gt(&format!("halving_ratio_{}", i + 1), *r, 3.0));
            }
            extra = json!({ "eta": eta, "b": b, "a": radii, "halving_ratios": ratios });
        }
    }
    Ok((checks, json!({ "study": study, "map": extra })))
}

/// Samples strictly inside a piece domain, `margin` from its faces.
fn domain_samples(min: &[f64], max: &[f64], n: usize, seed: u64, margin: f64) -> Result<Vec<Vec<f64>>> {
    if min.iter().zip(max).any(|(lo, hi)| !(hi - lo > 2.0 * margin)) {
        return Err(config("piece domain is too thin to sample"));
    }
    Ok((0..n)
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            min.iter().zip(max).map(|(lo, hi)| lo + margin + (hi - lo - 2.0 * margin) * rng.gen::<f64>()).collect()
        })
        .collect())
}

fn run_verify(a: &VerifyArgs) -> Result<Outcome> {
    need_count("samples", a.samples)?;
    need_positive("tol", a.tol)?;
    let table: PieceTable = serde_json::from_str(&read_text(&a.map)?)
        .map_err(|e| config(format!("piece table {}: {e}", a.map.display())))?;
    if table.pieces.is_empty() {
        return Err(config("piece table has no pieces"));
    }
    let map = table.build()?;
    let margin = 1e3 * SEAM_TOL;
    // A composition is sampled on the domain of the factor applied first.
    let domains: Vec<usize> =
        if table.compose { vec![table.pieces.len() - 1] } else { (0..table.pieces.len()).collect() };
    let mut per_piece = Vec::new();
    let mut max_defect = 0.0f64;
    let mut failures = 0usize;
    let mut max_inverse_error: Option<f64> = None;
    for (j, &p) in domains.iter().enumerate() {
        let d = &table.pieces[p].domain;
        let share = a.samples / domains.len() + usize::from(j < a.samples % domains.len());
        let pts = domain_samples(&d.min, &d.max, share, a.seed.wrapping_add(p as u64), margin)?;
        let stats = audit::defect_stats(map.as_ref(), &pts, a.tol);
        max_defect = max_defect.max(stats.max);
        failures += stats.failures;
        for z in &pts {
            let Ok(w) = map.eval(z) else { continue };
            if let Some(Ok(back)) = map.inverse(&w) {
                let err = back.iter().zip(z).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                max_inverse_error = Some(max_inverse_error.unwrap_or(0.0).max(err));
            }
        }
        per_piece.push(json!({ "piece": p, "defect": stats }));
    }
    let mut checks = vec![Check::le("defect", max_defect, a.tol), Check::eq("defect_failures", failures as f64, 0.0)];
    if let Some(err) = max_inverse_error {
        checks.push(Check::le("inverse_round_trip", err, 1e-8));
    }
    Ok((checks, json!({ "dim": table.dim, "compose": table.compose, "pieces": per_piece })))
}
