//! `socopf` command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | output could not be written |
//! | 2 | usage error, unreadable or invalid case, invalid options or grid |
//! | 3 | solver failure (or every sweep cell failed) |
//! | 4 | penalty loop hit its iteration cap without closing the gaps |

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use socopf::model::PenaltyTarget;
use socopf::sweep::{default_load_grid, format_sci, metadata_line, run_load_sweep, GapMetric, SweepError};
use socopf::tra::{penalty_sweep_csv, trace_csv, TraIterate};
use socopf::{
    kkt_residuals, load_case_with, penalty_sweep, run_tra, scale_loads, solve_case, CostBasis, GapUnits, IngestError,
    Network, PenaltySpec, SolveError, SolverOptions, TraError, TraOptions, DEFAULT_GAP_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "socopf", version, about = "Loss-cone relaxation of AC optimal power flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one case and report its relaxation gaps.
    Solve(SolveArgs),
    /// Gap tables over a grid of load levels.
    SweepLoad(SweepLoadArgs),
    /// Raise the reactive-loss penalty until the gaps close.
    Tra(TraArgs),
    /// Independent solves over a grid of penalty coefficients.
    SweepPenalty(SweepPenaltyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Unit mode for reported gaps.
    #[arg(long, default_value = "pu")]
    pub units: GapUnits,
    /// How gencost coefficients apply to per-unit dispatch.
    #[arg(long, default_value = "native")]
    pub cost_basis: CostBasis,
    /// Loss term the penalty acts on: q_loss or pq_loss.
    #[arg(long, default_value = "q_loss")]
    pub target: PenaltyTarget,
    /// Gap tolerance (p.u.).
    #[arg(long, default_value_t = DEFAULT_GAP_TOL)]
    pub gap_tol: f64,
    /// Worker threads for sweeps; defaults to one per core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Accepted for scripting; nothing in the tool is randomized.
    #[arg(long)]
    pub seed_free: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub load: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub xi: f64,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepLoadArgs {
    /// Case file; repeat for several columns.
    #[arg(long)]
    pub case: Vec<PathBuf>,
    /// Comma-separated load factors; 5%..100% in 5% steps by default.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub xi: f64,
    /// Output directory for gap_po.csv, gap_qo.csv and sweep_meta.json.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TraArgs {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub load: f64,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub xi0: f64,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub dxi: f64,
    #[arg(long, default_value_t = 40)]
    pub kmax: usize,
    /// Output directory for trace.csv and solution.json; trace goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepPenaltyArgs {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub load: f64,
    /// Comma-separated penalty coefficients.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid: Vec<f64>,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(code: i32, error: impl Into<anyhow::Error>) -> Self {
        Self { code, error: error.into() }
    }
}

type Outcome = Result<i32, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_USAGE, anyhow::anyhow!("{msg}"))
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(EXIT_IO, anyhow::anyhow!("cannot write {}: {e}", path.display()))
}

/// `Variant: message`, so scripts can match on the error kind.
fn ingest_failure(e: IngestError) -> Failure {
    let debug = format!("{e:?}");
    let kind = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("IngestError").to_string();
    Failure::new(EXIT_USAGE, anyhow::anyhow!("{kind}: {e}"))
}

fn solve_failure(e: SolveError) -> Failure {
    match e {
        SolveError::Model(m) => usage(m),
        other => Failure::new(EXIT_SOLVER, other),
    }
}

/// Parse `args` (including the program name), run the command and return its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

pub fn execute(cli: Cli) -> Outcome {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::SweepLoad(a) => cmd_sweep_load(&a),
        Command::Tra(a) => cmd_tra(&a),
        Command::SweepPenalty(a) => cmd_sweep_penalty(&a),
    }
}

impl Common {
    fn check(&self) -> Result<(), Failure> {
        if !(self.gap_tol > 0.0 && self.gap_tol.is_finite()) {
            return Err(usage(format!("--gap-tol must be positive, got {}", self.gap_tol)));
        }
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(usage("--threads must be at least 1"));
            }
            // Only the first configuration in a process takes effect.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(())
    }

    fn unit_scale(&self, net: &Network) -> f64 {
        match self.units {
            GapUnits::Pu => 1.0,
            GapUnits::Mva => net.base_mva,
        }
    }

    fn load(&self, path: &Path, factor: f64) -> Result<Network, Failure> {
        let net = load_case_with(path, self.cost_basis).map_err(ingest_failure)?;
        scale_loads(&net, factor).map_err(ingest_failure)
    }
}

fn check_xi(xi: f64) -> Result<(), Failure> {
    if xi >= 0.0 && xi.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--xi must be finite and >= 0, got {xi}")))
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

fn unix_time() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn cmd_solve(a: &SolveArgs) -> Outcome {
    a.common.check()?;
    check_xi(a.xi)?;
    let net = a.common.load(&a.case, a.load)?;
    let penalty = PenaltySpec { xi: a.xi, target: a.common.target };
    let solved = solve_case(&net, &penalty, &SolverOptions::default()).map_err(solve_failure)?;
    let residuals = kkt_residuals(&solved.program, &solved.result).map_err(|e| Failure::new(EXIT_SOLVER, e))?;
    let f = solved.solution.objective;
    let f_m = f + penalty.term(&solved.solution.p_loss, &solved.solution.q_loss);
    let gaps =
        socopf::line_gaps_with_tol(&solved.solution, &net, a.common.gap_tol).in_units(a.common.units, net.base_mva);

    let report = json!({
        "tool_version": socopf::sweep::TOOL_VERSION,
        "case": net.name,
        "load_factor": a.load,
        "cost_basis": a.common.cost_basis,
        "penalty": penalty,
        "status": solved.result.status,
        "iterations": solved.result.iterations,
        "solve_time": solved.result.solve_time,
        "objective": f,
        "penalized_objective": f_m,
        "residuals": residuals,
        "gaps": gaps,
        "solution": solved.solution,
    });
    eprintln!(
        "{}: status {}, f = {f}, f^M = {f_m}, gap_po_max = {}, gap_qo_max = {} ({})",
        net.name,
        solved.result.status,
        format_sci(gaps.gap_po_max),
        format_sci(gaps.gap_qo_max),
        a.common.units
    );
    match &a.out {
        Some(path) => write(path, &to_json(&report))?,
        None => println!("{}", to_json(&report)),
    }
    Ok(EXIT_OK)
}

pub fn cmd_sweep_load(a: &SweepLoadArgs) -> Outcome {
    a.common.check()?;
    check_xi(a.xi)?;
    if a.case.is_empty() {
        return Err(usage("at least one --case is required"));
    }
    let grid = if a.grid.is_empty() { default_load_grid() } else { a.grid.clone() };
    let cases = a
        .case
        .iter()
        .map(|p| load_case_with(p, a.common.cost_basis).map_err(ingest_failure))
        .collect::<Result<Vec<_>, _>>()?;
    let penalty = PenaltySpec { xi: a.xi, target: a.common.target };
    let mut sweep = run_load_sweep(&cases, &grid, &penalty, &SolverOptions::default(), None).map_err(|e| match e {
        SweepError::Pool(_) => Failure::new(EXIT_SOLVER, e),
        other => usage(other),
    })?;
    sweep.tolerance = a.common.gap_tol;

    for metric in [GapMetric::Active, GapMetric::Reactive] {
        let path = a.out.join(format!("{}.csv", metric.key()));
        write(&path, &sweep.table(metric, a.common.units).to_csv())?;
    }
    let cells: Vec<_> = sweep
        .cells
        .iter()
        .map(|c| {
            let mut v = json!({ "case": sweep.cases[c.case], "load": sweep.grid[c.load] });
            match &c.outcome {
                Ok(s) => v["stats"] = json!(s),
                Err(e) => v["error"] = json!(e),
            }
            v
        })
        .collect();
    let meta = json!({
        "tool_version": socopf::sweep::TOOL_VERSION,
        "timestamp_unix": unix_time(),
        "cost_basis": a.common.cost_basis,
        "penalty": penalty,
        "tolerance": sweep.tolerance,
        "units": a.common.units,
        "cases": sweep.cases,
        "grid": sweep.grid,
        "failed": sweep.n_failed(),
        "cells": cells,
    });
    write(&a.out.join("sweep_meta.json"), &to_json(&meta))?;

    eprintln!("{} cells, {} failed", sweep.cells.len(), sweep.n_failed());
    if sweep.all_failed() {
        return Err(Failure::new(EXIT_SOLVER, anyhow::anyhow!("every sweep cell failed")));
    }
    Ok(EXIT_OK)
}

fn scaled_iterates(iterates: &[TraIterate], scale: f64) -> Vec<TraIterate> {
    iterates
        .iter()
        .map(|it| TraIterate { gap_po_max: it.gap_po_max * scale, gap_qo_max: it.gap_qo_max * scale, ..*it })
        .collect()
}

pub fn cmd_tra(a: &TraArgs) -> Outcome {
    a.common.check()?;
    let net = a.common.load(&a.case, a.load)?;
    let opts = TraOptions {
        xi0: a.xi0,
        dxi: a.dxi,
        gap_tol_po: a.common.gap_tol,
        gap_tol_qo: a.common.gap_tol,
        k_max: a.kmax,
        target: a.common.target,
    };
    let scale = a.common.unit_scale(&net);
    let meta = metadata_line(&[
        ("case", net.name.clone()),
        ("load", a.load.to_string()),
        ("xi0", a.xi0.to_string()),
        ("dxi", a.dxi.to_string()),
        ("kmax", a.kmax.to_string()),
        ("target", a.common.target.to_string()),
        ("tol", format_sci(a.common.gap_tol)),
        ("units", a.common.units.to_string()),
        ("cost_basis", a.common.cost_basis.to_string()),
    ]);
    let emit_trace = |iterates: &[TraIterate]| -> Result<(), Failure> {
        let csv = format!("{meta}\n{}", trace_csv(&scaled_iterates(iterates, scale)));
        match &a.out {
            Some(dir) => write(&dir.join("trace.csv"), &csv),
            None => {
                print!("{csv}");
                Ok(())
            }
        }
    };

    let res = match run_tra(&net, &opts, &SolverOptions::default()) {
        Ok(r) => r,
        Err(TraError::SolveFailed { k, xi, source, iterates }) => {
            emit_trace(&iterates)?;
            return Err(Failure::new(EXIT_SOLVER, anyhow::anyhow!("solve {k} (xi = {xi}) failed: {source}")));
        }
        Err(TraError::Model(e)) => return Err(usage(e)),
        Err(e) => return Err(usage(e)),
    };
    emit_trace(&res.iterates)?;
    if let Some(dir) = &a.out {
        let report = json!({
            "tool_version": socopf::sweep::TOOL_VERSION,
            "case": net.name,
            "load_factor": a.load,
            "cost_basis": a.common.cost_basis,
            "options": opts,
            "converged": res.converged,
            "iterations": res.iterates.len(),
            "last_xi": res.last_xi,
            "final_xi": res.final_xi,
            "gaps": res.gaps.in_units(a.common.units, net.base_mva),
            "solution": res.solution,
        });
        write(&dir.join("solution.json"), &to_json(&report))?;
    }
    eprintln!(
        "{}: {} after {} solve(s), last xi = {}, gap_po_max = {}, gap_qo_max = {}",
        net.name,
        if res.converged { "converged" } else { "not converged" },
        res.iterates.len(),
        res.last_xi,
        format_sci(res.gaps.gap_po_max * scale),
        format_sci(res.gaps.gap_qo_max * scale)
    );
    Ok(if res.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn cmd_sweep_penalty(a: &SweepPenaltyArgs) -> Outcome {
    a.common.check()?;
    let net = a.common.load(&a.case, a.load)?;
    let entries = penalty_sweep(&net, &a.grid, a.common.target, &SolverOptions::default()).map_err(|e| match e {
        TraError::InvalidGrid if a.grid.is_empty() => usage("--grid needs at least one coefficient"),
        other => usage(other),
    })?;
    let meta = metadata_line(&[
        ("case", net.name.clone()),
        ("load", a.load.to_string()),
        ("target", a.common.target.to_string()),
        ("tol", format_sci(a.common.gap_tol)),
        ("units", a.common.units.to_string()),
        ("cost_basis", a.common.cost_basis.to_string()),
    ]);
    let csv = format!("{meta}\n{}", penalty_sweep_csv(&entries, a.common.unit_scale(&net)));
    match &a.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    let failed = entries.iter().filter(|e| e.outcome.is_err()).count();
    if failed == entries.len() {
        return Err(Failure::new(EXIT_SOLVER, anyhow::anyhow!("every penalty solve failed")));
    }
    Ok(EXIT_OK)
}
