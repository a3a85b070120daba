//! Kappa sweeps and stakeholder metrics: Transco profit, social
//! welfare and participant benefits per grid point, the
//! participant-optimal kappa, and CSV/summary report emission.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp_market::fmt6;
use crate::milp::{
    recompute_metrics_from_primal, solve_planning, MilpError, PlanningSolution, YearMetrics,
};
use crate::network_model::CaseStudy;
use crate::solver::SolverConfig;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("grid: {0}")]
    Grid(String),
    #[error("solution for kappa={kappa} failed certification: {detail}")]
    Uncertified { kappa: f64, detail: String },
    #[error("metrics identity violated: {0}")]
    Identity(String),
    #[error("empty sweep table")]
    Empty,
    #[error(transparent)]
    Milp(#[from] MilpError),
}

/// Stakeholder economics for one kappa. All totals are discounted money
/// except `change_in_surplus`, which is the plain sum
/// psi * (S_t - S_1) over t >= 2 driving the fee.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub kappa: f64,
    pub tp: f64,
    pub sw: f64,
    pub benefits: f64,
    pub fee_total: f64,
    pub ms_total: f64,
    pub cost_total: f64,
    pub change_in_surplus: f64,
    /// MW added per line id (absent lines built nothing).
    pub expansion_mw: BTreeMap<u32, f64>,
    pub per_year: Vec<YearMetrics>,
}

/// Metrics recomputed from the solution's primal quantities and prices,
/// not from the embedded surplus expressions. Fails if the solution is
/// uncertified or the additive identity breaks.
pub fn evaluate_metrics(
    case: &CaseStudy,
    solution: &PlanningSolution,
) -> Result<MetricsRow, AnalysisError> {
    if !solution.certified() {
        return Err(AnalysisError::Uncertified {
            kappa: solution.kappa,
            detail: format!("{:?} / {:?}", solution.certificate, solution.audit),
        });
    }
    let m = recompute_metrics_from_primal(case, &solution.plan, &solution.outcome);
    let rel = (m.sw - m.tp - m.benefits).abs() / (1.0 + m.sw.abs());
    if rel > 1e-6 {
        return Err(AnalysisError::Identity(format!(
            "sw != tp + benefits (relative residual {rel:.3e})"
        )));
    }
    let psi = case.horizon.psi;
    let base = m.per_year[0].s_l + m.per_year[0].s_g;
    let change_in_surplus: f64 =
        m.per_year[1..].iter().map(|y| psi * (y.s_l + y.s_g - base)).sum();
    let mut expansion_mw = BTreeMap::new();
    for sel in &solution.plan.selections {
        let line = case.lines.iter().find(|l| l.id == sel.line).unwrap();
        expansion_mw.insert(sel.line, line.lumps[sel.lump_index]);
    }
    Ok(MetricsRow {
        kappa: solution.kappa,
        tp: m.tp,
        sw: m.sw,
        benefits: m.benefits,
        fee_total: m.fee_npv,
        ms_total: m.ms_npv,
        cost_total: m.cost_npv,
        change_in_surplus,
        expansion_mw,
        per_year: m.per_year,
    })
}

/// Largest violation of the fee recursion across a row's years:
/// Phi_1 = 0 and Phi_t - Phi_{t-1} = kappa * psi * (S_t - S_{t-1}).
pub fn fee_recursion_residual(case: &CaseStudy, kappa: f64, per_year: &[YearMetrics]) -> f64 {
    let psi = case.horizon.psi;
    let mut r = per_year[0].fee.abs();
    for w in per_year.windows(2) {
        let delta = (w[1].s_l + w[1].s_g) - (w[0].s_l + w[0].s_g);
        r = r.max((w[1].fee - w[0].fee - kappa * psi * delta).abs());
    }
    r
}

/// One grid point; failed solves are recorded, never dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub row: Result<MetricsRow, String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn solved(&self) -> impl Iterator<Item = (&SweepRow, &MetricsRow)> {
        self.rows.iter().filter_map(|r| r.row.as_ref().ok().map(|m| (r, m)))
    }

    pub fn failures(&self) -> Vec<(f64, &str)> {
        self.rows
            .iter()
            .filter_map(|r| r.row.as_ref().err().map(|e| (r.kappa, e.as_str())))
            .collect()
    }
}

/// Parses "lo:hi:step" into an ascending grid, endpoints included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, AnalysisError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(AnalysisError::Grid(format!("'{spec}' is not lo:hi:step")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| AnalysisError::Grid(format!("'{p}': {e}"))))
        .collect::<Result<_, _>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || lo > hi {
        return Err(AnalysisError::Grid(format!("need lo <= hi and step > 0 in '{spec}'")));
    }
    let mut grid = Vec::new();
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    for i in 0..=n {
        grid.push((lo + i as f64 * step).min(hi));
    }
    if (hi - grid[grid.len() - 1]).abs() > 1e-9 {
        grid.push(hi);
    }
    Ok(grid)
}

fn validate_grid(grid: &[f64]) -> Result<(), AnalysisError> {
    if grid.is_empty() {
        return Err(AnalysisError::Empty);
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(AnalysisError::Grid("grid must be strictly increasing".into()));
        }
    }
    if grid[0] < 0.0 || grid[grid.len() - 1] > 1.0 {
        return Err(AnalysisError::Grid("grid must lie within [0, 1]".into()));
    }
    Ok(())
}

/// Solves the planning problem for each kappa on the grid. Rows are
/// computed in parallel (`parallelism` threads, 0 = rayon default) and
/// assembled in grid order, so output is independent of parallelism.
pub fn sweep_kappa(
    case: &CaseStudy,
    grid: &[f64],
    cfg: &SolverConfig,
    parallelism: usize,
) -> Result<SweepTable, AnalysisError> {
    validate_grid(grid)?;
    let solve_point = |&kappa: &f64| -> SweepRow {
        let mut point_case = case.clone();
        point_case.policy.kappa = kappa;
        match solve_planning(&point_case, cfg) {
            Ok(solution) => SweepRow {
                kappa,
                wall_time_s: solution.wall_time_s,
                row: evaluate_metrics(&point_case, &solution).map_err(|e| e.to_string()),
            },
            Err(e) => SweepRow { kappa, row: Err(e.to_string()), wall_time_s: 0.0 },
        }
    };
    let rows = if parallelism == 1 {
        grid.iter().map(solve_point).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| AnalysisError::Grid(format!("thread pool: {e}")))?;
        pool.install(|| grid.par_iter().map(solve_point).collect())
    };
    Ok(SweepTable { rows })
}

/// Row with the highest participant benefits; ties go to the smallest
/// kappa.
pub fn participant_optimal_kappa(table: &SweepTable) -> Result<&MetricsRow, AnalysisError> {
    let mut best: Option<&MetricsRow> = None;
    for (_, m) in table.solved() {
        let better = match best {
            None => true,
            Some(b) => m.benefits > b.benefits + 1e-9 * (1.0 + b.benefits.abs()),
        };
        if better {
            best = Some(m);
        }
    }
    best.ok_or(AnalysisError::Empty)
}

/// CSV with fixed column order; one expansion column per line in case
/// order. Floats carry 6 significant digits.
pub fn emit_report(case: &CaseStudy, table: &SweepTable) -> String {
    let mut header =
        String::from("kappa,tp,sw,benefits,fee,ms,cost,change_in_surplus");
    for line in &case.lines {
        header.push_str(&format!(",expansion_{}", line.id));
    }
    let mut out = header;
    out.push('\n');
    for (_, m) in table.solved() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}",
            fmt6(m.kappa),
            fmt6(m.tp),
            fmt6(m.sw),
            fmt6(m.benefits),
            fmt6(m.fee_total),
            fmt6(m.ms_total),
            fmt6(m.cost_total),
            fmt6(m.change_in_surplus)
        ));
        for line in &case.lines {
            out.push_str(&format!(",{}", fmt6(*m.expansion_mw.get(&line.id).unwrap_or(&0.0))));
        }
        out.push('\n');
    }
    out
}

/// Three-row summary (kappa = 1, participant-optimal kappa, kappa = 0)
/// plus any failed grid points. Rows for 1 and 0 use the nearest solved
/// grid point.
pub fn summary_block(table: &SweepTable) -> Result<String, AnalysisError> {
    let nearest = |target: f64| -> Option<&MetricsRow> {
        table
            .solved()
            .map(|(_, m)| m)
            .min_by(|a, b| {
                (a.kappa - target).abs().partial_cmp(&(b.kappa - target).abs()).unwrap()
            })
    };
    let star = participant_optimal_kappa(table)?;
    let mut out = String::from("label,kappa,tp,sw,benefits\n");
    for (label, m) in [
        ("kappa=1", nearest(1.0).ok_or(AnalysisError::Empty)?),
        ("kappa*", star),
        ("kappa=0", nearest(0.0).ok_or(AnalysisError::Empty)?),
    ] {
        out.push_str(&format!(
            "{label},{},{},{},{}\n",
            fmt6(m.kappa),
            fmt6(m.tp),
            fmt6(m.sw),
            fmt6(m.benefits)
        ));
    }
    let failures = table.failures();
    if !failures.is_empty() {
        out.push_str("failures:\n");
        for (kappa, err) in failures {
            out.push_str(&format!("  kappa={}: {err}\n", fmt6(kappa)));
        }
    }
    Ok(out)
}
