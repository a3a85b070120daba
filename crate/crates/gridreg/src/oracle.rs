//! Independent brute-force reference for the planning MILP. Enumerates
//! expansion plans, clears the market LP for each, applies the fee
//! recursion on the primal outcome and ranks plans by Transco profit.
//! Deliberately shares no reformulation code with the MILP path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp_market::{fmt6, solve_wsm, ExpansionPlan, MarketError, Selection};
use crate::milp::{recompute_metrics_from_primal, PlanMetrics};
use crate::network_model::CaseStudy;
use crate::solver::{SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{count} candidate plans exceed the budget of {budget}")]
    Budget { count: u128, budget: usize },
    #[error("market: {0}")]
    Market(#[from] MarketError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
}

pub const DEFAULT_PLAN_BUDGET: usize = 100_000;

/// Counts plans without materialising them: each line independently
/// stays as-is or picks one (year >= 2, lump) pair.
pub fn count_plans(case: &CaseStudy) -> u128 {
    case.lines.iter().fold(1u128, |acc, line| {
        let per_line = 1 + (case.horizon.years as u128 - 1) * line.lumps.len() as u128;
        acc.saturating_mul(per_line)
    })
}

/// All expansion plans in deterministic lexicographic order (by line,
/// then year, then lump, with "no expansion" first for each line).
pub fn enumerate_plans(case: &CaseStudy, budget: usize) -> Result<Vec<ExpansionPlan>, OracleError> {
    let count = count_plans(case);
    if count > budget as u128 {
        return Err(OracleError::Budget { count, budget });
    }
    let mut plans = vec![ExpansionPlan::empty()];
    for line in &case.lines {
        let mut next = Vec::with_capacity(plans.len());
        for base in &plans {
            next.push(base.clone());
            for year in 2..=case.horizon.years {
                for lump_index in 0..line.lumps.len() {
                    let mut plan = base.clone();
                    plan.selections.push(Selection { line: line.id, year, lump_index });
                    next.push(plan);
                }
            }
        }
        plans = next;
    }
    Ok(plans)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanEvaluation {
    pub id: usize,
    pub plan: ExpansionPlan,
    pub metrics: PlanMetrics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    pub best: PlanEvaluation,
    pub table: Vec<PlanEvaluation>,
    /// True when another plan ties the winner's profit within tolerance;
    /// dual degeneracy can then make fee-dependent metrics ambiguous.
    pub degenerate: bool,
}

/// True if `a` beats `b` under the documented tie-break: higher profit,
/// then fewer megawatts built, then earlier enumeration order.
fn beats(case: &CaseStudy, a: &PlanEvaluation, b: &PlanEvaluation, tol: f64) -> bool {
    if (a.metrics.tp - b.metrics.tp).abs() > tol {
        return a.metrics.tp > b.metrics.tp;
    }
    let (mwa, mwb) = (a.plan.total_mw(case), b.plan.total_mw(case));
    if mwa != mwb {
        return mwa < mwb;
    }
    a.id < b.id
}

pub fn brute_force(
    case: &CaseStudy,
    cfg: &SolverConfig,
    budget: usize,
) -> Result<OracleResult, OracleError> {
    let plans = enumerate_plans(case, budget)?;
    let table: Vec<PlanEvaluation> = plans
        .into_par_iter()
        .enumerate()
        .map(|(id, plan)| {
            let outcome = solve_wsm(case, &plan, cfg)?;
            let metrics = recompute_metrics_from_primal(case, &plan, &outcome);
            Ok(PlanEvaluation { id, plan, metrics })
        })
        .collect::<Result<_, OracleError>>()?;
    let mut best = &table[0];
    for row in &table[1..] {
        let tol = 1e-6 * (1.0 + best.metrics.tp.abs());
        if beats(case, row, best, tol) {
            best = row;
        }
    }
    let tol = 1e-6 * (1.0 + best.metrics.tp.abs());
    let degenerate = table
        .iter()
        .any(|row| row.id != best.id && (row.metrics.tp - best.metrics.tp).abs() <= tol);
    Ok(OracleResult { best: best.clone(), table, degenerate })
}

/// One CSV row per (plan, selected line); plans without expansion emit a
/// single row with empty line/year/lump fields.
pub fn per_plan_table(case: &CaseStudy, result: &OracleResult) -> String {
    let mut out = String::from("plan_id,line,year,lump_mw,profit,welfare,fee_total,ms_total,cost_total\n");
    for row in &result.table {
        let m = &row.metrics;
        let tail = format!(
            "{},{},{},{},{}",
            fmt6(m.tp),
            fmt6(m.sw),
            fmt6(m.fee_npv),
            fmt6(m.ms_npv),
            fmt6(m.cost_npv)
        );
        if row.plan.selections.is_empty() {
            out.push_str(&format!("{},,,,{tail}\n", row.id));
        } else {
            for sel in &row.plan.selections {
                let line = case.lines.iter().find(|l| l.id == sel.line).unwrap();
                out.push_str(&format!(
                    "{},{},{},{},{tail}\n",
                    row.id,
                    sel.line,
                    sel.year,
                    fmt6(line.lumps[sel.lump_index])
                ));
            }
        }
    }
    out
}
