//! Load-level sweeps and the gap tables they produce.
//!
//! A sweep solves every (case, load factor) cell independently on a bounded
//! worker pool, then assembles one [`SweepTable`] per gap metric. Rows are
//! load levels, columns are cases. A failed cell is written as
//! [`FAILED_CELL`] and does not stop the sweep.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rayon::prelude::*;

use crate::case::{scale_loads, IngestError};
use crate::feasibility::{GapUnits, DEFAULT_GAP_TOL};
use crate::model::PenaltySpec;
use crate::solver::SolverOptions;
use crate::{solve_case, Network};

/// Cell text for a solve that did not finish Optimal.
pub const FAILED_CELL: &str = "FAILED";

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest accepted load factor.
pub const MAX_LOAD_FACTOR: f64 = 10.0;

/// Scientific notation with three significant digits and a signed two-digit
/// exponent, e.g. `3.24E-02`.
pub fn format_sci(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    let v = if v == 0.0 { 0.0 } else { v };
    let raw = format!("{v:.2E}");
    let (mantissa, exp) = raw.split_once('E').expect("E format always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

/// Load factor as a percent label: `0.05` → `5%`, `0.125` → `12.5%`.
pub fn percent_label(factor: f64) -> String {
    let pct = (factor * 100.0 * 1e6).round() / 1e6;
    format!("{pct}%")
}

/// 5%, 10%, ..., 100%.
pub fn default_load_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 20.0).collect()
}

/// `# socopf <version>; key=value; ...`
pub fn metadata_line(fields: &[(&str, String)]) -> String {
    let mut line = format!("# socopf {TOOL_VERSION}");
    for (k, v) in fields {
        line.push_str(&format!("; {k}={v}"));
    }
    line
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapMetric {
    Active,
    Reactive,
}

impl GapMetric {
    pub fn key(self) -> &'static str {
        match self {
            GapMetric::Active => "gap_po",
            GapMetric::Reactive => "gap_qo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("no cases given")]
    NoCases,
    #[error("load grid is empty")]
    EmptyGrid,
    #[error("load factor {0} outside (0, {MAX_LOAD_FACTOR}]")]
    BadFactor(f64),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub gap_po_max: f64,
    pub gap_qo_max: f64,
    pub objective: f64,
    pub iterations: u32,
    pub solve_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub case: usize,
    pub load: usize,
    /// Error text when the cell failed.
    pub outcome: Result<CellStats, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSweep {
    pub cases: Vec<String>,
    pub base_mva: Vec<f64>,
    pub grid: Vec<f64>,
    pub penalty: PenaltySpec,
    pub tolerance: f64,
    /// Sorted by (case, load level) index.
    pub cells: Vec<SweepCell>,
}

/// Solve every (case, load factor) pair. `threads = None` uses the global pool.
pub fn run_load_sweep(
    cases: &[Network],
    grid: &[f64],
    penalty: &PenaltySpec,
    solver_opts: &SolverOptions,
    threads: Option<usize>,
) -> Result<LoadSweep, SweepError> {
    if cases.is_empty() {
        return Err(SweepError::NoCases);
    }
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    if let Some(&f) = grid.iter().find(|f| !(**f > 0.0 && **f <= MAX_LOAD_FACTOR)) {
        return Err(SweepError::BadFactor(f));
    }

    let jobs: Vec<(usize, usize)> = (0..cases.len()).flat_map(|c| (0..grid.len()).map(move |l| (c, l))).collect();
    let run = || -> Vec<SweepCell> {
        jobs.par_iter()
            .map(|&(c, l)| SweepCell {
                case: c,
                load: l,
                outcome: solve_cell(&cases[c], grid[l], penalty, solver_opts),
            })
            .collect()
    };
    let mut cells = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SweepError::Pool(e.to_string()))?
            .install(run),
        None => run(),
    };
    cells.sort_by_key(|c| (c.case, c.load));

    Ok(LoadSweep {
        cases: cases.iter().map(|n| n.name.clone()).collect(),
        base_mva: cases.iter().map(|n| n.base_mva).collect(),
        grid: grid.to_vec(),
        penalty: *penalty,
        tolerance: DEFAULT_GAP_TOL,
        cells,
    })
}

fn solve_cell(net: &Network, factor: f64, penalty: &PenaltySpec, opts: &SolverOptions) -> Result<CellStats, String> {
    let scaled = scale_loads(net, factor).map_err(|e: IngestError| e.to_string())?;
    let s = solve_case(&scaled, penalty, opts).map_err(|e| e.to_string())?;
    Ok(CellStats {
        gap_po_max: s.gaps.gap_po_max,
        gap_qo_max: s.gaps.gap_qo_max,
        objective: s.solution.objective,
        iterations: s.result.iterations,
        solve_time: s.result.solve_time,
    })
}

impl LoadSweep {
    pub fn n_failed(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    pub fn all_failed(&self) -> bool {
        self.n_failed() == self.cells.len()
    }

    pub fn table(&self, metric: GapMetric, units: GapUnits) -> SweepTable {
        let mut cells = vec![vec![None; self.cases.len()]; self.grid.len()];
        for cell in &self.cells {
            let scale = match units {
                GapUnits::Pu => 1.0,
                GapUnits::Mva => self.base_mva[cell.case],
            };
            cells[cell.load][cell.case] = cell.outcome.as_ref().ok().map(|s| {
                scale
                    * match metric {
                        GapMetric::Active => s.gap_po_max,
                        GapMetric::Reactive => s.gap_qo_max,
                    }
            });
        }
        SweepTable {
            metric,
            loads: self.grid.clone(),
            cases: self.cases.clone(),
            cells,
            penalty: self.penalty,
            tolerance: self.tolerance,
            units,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub metric: GapMetric,
    /// Row labels (load factors).
    pub loads: Vec<f64>,
    /// Column labels.
    pub cases: Vec<String>,
    /// `cells[row][col]`; `None` marks a failed solve.
    pub cells: Vec<Vec<Option<f64>>>,
    pub penalty: PenaltySpec,
    pub tolerance: f64,
    pub units: GapUnits,
}

impl SweepTable {
    pub fn metadata(&self) -> String {
        metadata_line(&[
            ("metric", self.metric.key().to_string()),
            ("xi", self.penalty.xi.to_string()),
            ("target", self.penalty.target.to_string()),
            ("tol", format_sci(self.tolerance)),
            ("units", self.units.to_string()),
        ])
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.metadata();
        out.push('\n');
        out.push_str("load");
        for c in &self.cases {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (load, row) in self.loads.iter().zip(&self.cells) {
            out.push_str(&percent_label(*load));
            for cell in row {
                out.push(',');
                match cell {
                    Some(v) => out.push_str(&format_sci(*v)),
                    None => out.push_str(FAILED_CELL),
                }
            }
            out.push('\n');
        }
        out
    }
}
