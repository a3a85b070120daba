//! Single-level reformulation of the planning problem. The market
//! clearing LP is embedded through its optimality conditions (primal
//! feasibility, dual feasibility, one global strong-duality equality),
//! with products of expansion binaries and capacity multipliers replaced
//! by big-M envelope variables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::duality::{self, DualCertificate};
use crate::lp_market::{
    build_wsm_lp, compute_surpluses, ExpansionPlan, MarketOutcome, Selection, SurplusReport,
};
use crate::network_model::{AgentKind, CaseStudy};
use crate::solver::{
    optimize, Model, ModelBuilder, Rel, Sense, SolveResult, SolverConfig, SolverError, Status,
    VarId, VarKind,
};

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error(
        "policy.big_m = {big_m} is below 2 * max |bid price| = {needed}; \
         capacity multipliers may be clipped"
    )]
    BigMTooSmall { big_m: f64, needed: f64 },
    #[error("planning solve ended with status {0:?}")]
    BadStatus(Status),
    #[error("case: {0}")]
    Case(String),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MilpOptions {
    /// Skips the assembly-time lower bound on big-M. Only for tests that
    /// deliberately study undersized envelopes.
    pub skip_big_m_guard: bool,
}

/// Variable handles into the assembled model. Map keys follow the
/// clearing LP: (year, period, line/node) plus expansion keys
/// (year, line, lump) and envelope keys (year, period, line, build year,
/// lump).
#[derive(Debug)]
pub struct MilpIndex {
    pub dispatch: Vec<VarId>,
    pub flow: BTreeMap<(u32, u32, u32), VarId>,
    pub angle: BTreeMap<(u32, u32, u32), VarId>,
    pub phi_max: Vec<VarId>,
    pub phi_min: Vec<VarId>,
    pub price: BTreeMap<(u32, u32, u32), VarId>,
    pub gamma: BTreeMap<(u32, u32, u32), VarId>,
    pub mu_max: BTreeMap<(u32, u32, u32), VarId>,
    pub mu_min: BTreeMap<(u32, u32, u32), VarId>,
    pub xi_max: BTreeMap<(u32, u32, u32), VarId>,
    pub xi_min: BTreeMap<(u32, u32, u32), VarId>,
    pub chi: BTreeMap<(u32, u32), VarId>,
    /// Lump selection binaries; year-1 entries exist but are fixed to 0.
    pub build: BTreeMap<(u32, u32, usize), VarId>,
    /// Line expansion indicators, same year-1 convention.
    pub expand: BTreeMap<(u32, u32), VarId>,
    pub y_max: BTreeMap<(u32, u32, u32, u32, usize), VarId>,
    pub y_min: BTreeMap<(u32, u32, u32, u32, usize), VarId>,
    /// Per-year accounting: consumer surplus, producer surplus (both in
    /// per-period units), merchandising surplus (same), fee and
    /// investment cost (money).
    pub sl: BTreeMap<u32, VarId>,
    pub sg: BTreeMap<u32, VarId>,
    pub ms: BTreeMap<u32, VarId>,
    pub fee: BTreeMap<u32, VarId>,
    pub cost: BTreeMap<u32, VarId>,
}

pub struct MilpProblem {
    pub model: Model,
    pub index: MilpIndex,
}

const INF: f64 = f64::INFINITY;

pub fn assemble_milp(case: &CaseStudy, opts: &MilpOptions) -> Result<MilpProblem, MilpError> {
    case.validate().map_err(|e| MilpError::Case(e.to_string()))?;
    let big_m = case.policy.big_m;
    let needed = 2.0 * case.max_abs_bid_price();
    if !opts.skip_big_m_guard && big_m < needed {
        return Err(MilpError::BigMTooSmall { big_m, needed });
    }
    let kappa = case.policy.kappa;
    let psi = case.horizon.psi;
    let reference = case.reference_node();
    let mut b = ModelBuilder::new(Sense::Maximize);

    let mut index = MilpIndex {
        dispatch: Vec::new(),
        flow: BTreeMap::new(),
        angle: BTreeMap::new(),
        phi_max: Vec::new(),
        phi_min: Vec::new(),
        price: BTreeMap::new(),
        gamma: BTreeMap::new(),
        mu_max: BTreeMap::new(),
        mu_min: BTreeMap::new(),
        xi_max: BTreeMap::new(),
        xi_min: BTreeMap::new(),
        chi: BTreeMap::new(),
        build: BTreeMap::new(),
        expand: BTreeMap::new(),
        y_max: BTreeMap::new(),
        y_min: BTreeMap::new(),
        sl: BTreeMap::new(),
        sg: BTreeMap::new(),
        ms: BTreeMap::new(),
        fee: BTreeMap::new(),
        cost: BTreeMap::new(),
    };

    // primal and dual variables of the embedded clearing problem
    for (i, bid) in case.bids.iter().enumerate() {
        index.dispatch.push(b.add_var(
            format!("q[{i}]"),
            VarKind::Continuous,
            bid.q_min,
            bid.q_max,
            0.0,
        )?);
        index.phi_max.push(b.add_var(
            format!("phimax[{i}]"),
            VarKind::Continuous,
            0.0,
            INF,
            0.0,
        )?);
        index.phi_min.push(b.add_var(
            format!("phimin[{i}]"),
            VarKind::Continuous,
            0.0,
            INF,
            0.0,
        )?);
    }
    for t in case.horizon.years_iter() {
        for s in case.horizon.periods_iter() {
            for line in &case.lines {
                let k = (t, s, line.id);
                index
                    .flow
                    .insert(k, b.add_var(format!("f[{t},{s},{}]", line.id), VarKind::Continuous, -INF, INF, 0.0)?);
                index
                    .gamma
                    .insert(k, b.add_var(format!("gamma[{t},{s},{}]", line.id), VarKind::Continuous, -INF, INF, 0.0)?);
                index
                    .mu_max
                    .insert(k, b.add_var(format!("mumax[{t},{s},{}]", line.id), VarKind::Continuous, 0.0, big_m, 0.0)?);
                index
                    .mu_min
                    .insert(k, b.add_var(format!("mumin[{t},{s},{}]", line.id), VarKind::Continuous, 0.0, big_m, 0.0)?);
            }
            for node in &case.nodes {
                let k = (t, s, node.id);
                let (lo, hi) = if node.id == reference {
                    (0.0, 0.0)
                } else {
                    (-node.theta_max, node.theta_max)
                };
                index
                    .angle
                    .insert(k, b.add_var(format!("theta[{t},{s},{}]", node.id), VarKind::Continuous, lo, hi, 0.0)?);
                index
                    .price
                    .insert(k, b.add_var(format!("pi[{t},{s},{}]", node.id), VarKind::Continuous, -INF, INF, 0.0)?);
                if node.id != reference {
                    index
                        .xi_max
                        .insert(k, b.add_var(format!("ximax[{t},{s},{}]", node.id), VarKind::Continuous, 0.0, INF, 0.0)?);
                    index
                        .xi_min
                        .insert(k, b.add_var(format!("ximin[{t},{s},{}]", node.id), VarKind::Continuous, 0.0, INF, 0.0)?);
                }
            }
            index
                .chi
                .insert((t, s), b.add_var(format!("chi[{t},{s}]"), VarKind::Continuous, -INF, INF, 0.0)?);
        }
    }

    // expansion binaries; year 1 is pre-existing and fixed closed
    for t in case.horizon.years_iter() {
        let ub = if t == 1 { 0.0 } else { 1.0 };
        for line in &case.lines {
            index.expand.insert(
                (t, line.id),
                b.add_var(format!("u[{t},{}]", line.id), VarKind::Binary, 0.0, ub, 0.0)?,
            );
            for j in 0..line.lumps.len() {
                index.build.insert(
                    (t, line.id, j),
                    b.add_var(format!("bF[{t},{},{j}]", line.id), VarKind::Binary, 0.0, ub, 0.0)?,
                );
            }
        }
    }

    // envelope variables for the products bF * mu in the dual objective
    for t in case.horizon.years_iter().skip(1) {
        for s in case.horizon.periods_iter() {
            for line in &case.lines {
                for th in 2..=t {
                    for j in 0..line.lumps.len() {
                        let k = (t, s, line.id, th, j);
                        index.y_max.insert(
                            k,
                            b.add_var(
                                format!("ymax[{t},{s},{},{th},{j}]", line.id),
                                VarKind::Continuous,
                                0.0,
                                INF,
                                0.0,
                            )?,
                        );
                        index.y_min.insert(
                            k,
                            b.add_var(
                                format!("ymin[{t},{s},{},{th},{j}]", line.id),
                                VarKind::Continuous,
                                0.0,
                                INF,
                                0.0,
                            )?,
                        );
                    }
                }
            }
        }
    }

    // per-year accounting variables carrying the objective
    for t in case.horizon.years_iter() {
        let disc = case.horizon.discount(t);
        index.sl.insert(t, b.add_var(format!("SL[{t}]"), VarKind::Continuous, -INF, INF, 0.0)?);
        index.sg.insert(t, b.add_var(format!("SG[{t}]"), VarKind::Continuous, -INF, INF, 0.0)?);
        index.ms.insert(t, b.add_var(format!("MS[{t}]"), VarKind::Continuous, -INF, INF, disc * psi)?);
        index.fee.insert(t, b.add_var(format!("PHI[{t}]"), VarKind::Continuous, -INF, INF, disc)?);
        index.cost.insert(t, b.add_var(format!("C[{t}]"), VarKind::Continuous, 0.0, INF, -disc)?);
    }

    // primal feasibility: nodal balance, flow definition, flow limits
    // with plan-dependent capacity
    for t in case.horizon.years_iter() {
        for s in case.horizon.periods_iter() {
            for node in &case.nodes {
                let mut terms = Vec::new();
                for (i, bid) in case.bids.iter().enumerate() {
                    if bid.year == t && bid.period == s && bid.node == node.id {
                        let sign = match bid.kind {
                            AgentKind::Generator => -1.0,
                            AgentKind::Consumer => 1.0,
                        };
                        terms.push((index.dispatch[i], sign));
                    }
                }
                for line in &case.lines {
                    if line.from == node.id {
                        terms.push((index.flow[&(t, s, line.id)], 1.0));
                    }
                    if line.to == node.id {
                        terms.push((index.flow[&(t, s, line.id)], -1.0));
                    }
                }
                b.add_constraint(format!("bal[{t},{s},{}]", node.id), terms, Rel::Eq, 0.0)?;
            }
            for line in &case.lines {
                let k = (t, s, line.id);
                b.add_constraint(
                    format!("fdef[{t},{s},{}]", line.id),
                    vec![
                        (index.flow[&k], 1.0),
                        (index.angle[&(t, s, line.from)], -line.susceptance),
                        (index.angle[&(t, s, line.to)], line.susceptance),
                    ],
                    Rel::Eq,
                    0.0,
                )?;
                for (name, fsign) in [("fub", 1.0), ("flb", -1.0)] {
                    let mut terms = vec![(index.flow[&k], fsign)];
                    for th in 2..=t {
                        for (j, &lump) in line.lumps.iter().enumerate() {
                            terms.push((index.build[&(th, line.id, j)], -lump));
                        }
                    }
                    b.add_constraint(
                        format!("{name}[{t},{s},{}]", line.id),
                        terms,
                        Rel::Le,
                        line.capacity,
                    )?;
                }
            }
        }
    }

    // dual feasibility: stationarity in dispatch, flow and angle
    for (i, bid) in case.bids.iter().enumerate() {
        let pi = index.price[&(bid.year, bid.period, bid.node)];
        let (pi_coef, rhs) = match bid.kind {
            AgentKind::Generator => (-1.0, -bid.price),
            AgentKind::Consumer => (1.0, bid.price),
        };
        b.add_constraint(
            format!("dstat_q[{i}]"),
            vec![(pi, pi_coef), (index.phi_max[i], 1.0), (index.phi_min[i], -1.0)],
            Rel::Eq,
            rhs,
        )?;
    }
    for t in case.horizon.years_iter() {
        for s in case.horizon.periods_iter() {
            for line in &case.lines {
                let k = (t, s, line.id);
                b.add_constraint(
                    format!("dstat_f[{t},{s},{}]", line.id),
                    vec![
                        (index.price[&(t, s, line.from)], 1.0),
                        (index.price[&(t, s, line.to)], -1.0),
                        (index.gamma[&k], 1.0),
                        (index.mu_max[&k], 1.0),
                        (index.mu_min[&k], -1.0),
                    ],
                    Rel::Eq,
                    0.0,
                )?;
            }
            for node in &case.nodes {
                let mut terms = Vec::new();
                for line in &case.lines {
                    if line.from == node.id {
                        terms.push((index.gamma[&(t, s, line.id)], line.susceptance));
                    }
                    if line.to == node.id {
                        terms.push((index.gamma[&(t, s, line.id)], -line.susceptance));
                    }
                }
                if node.id == reference {
                    terms.push((index.chi[&(t, s)], -1.0));
                } else {
                    terms.push((index.xi_min[&(t, s, node.id)], 1.0));
                    terms.push((index.xi_max[&(t, s, node.id)], -1.0));
                }
                b.add_constraint(format!("dstat_th[{t},{s},{}]", node.id), terms, Rel::Eq, 0.0)?;
            }
        }
    }

    // envelope rows: y <= M bF, y <= mu, y >= mu - M (1 - bF)
    for (&(t, s, l, th, j), &ymax) in &index.y_max {
        let ymin = index.y_min[&(t, s, l, th, j)];
        let bf = index.build[&(th, l, j)];
        for (tag, y, mu) in [("max", ymax, index.mu_max[&(t, s, l)]), ("min", ymin, index.mu_min[&(t, s, l)])] {
            b.add_constraint(
                format!("env{tag}_cap[{t},{s},{l},{th},{j}]"),
                vec![(y, 1.0), (bf, -big_m)],
                Rel::Le,
                0.0,
            )?;
            b.add_constraint(
                format!("env{tag}_mu[{t},{s},{l},{th},{j}]"),
                vec![(y, 1.0), (mu, -1.0)],
                Rel::Le,
                0.0,
            )?;
            b.add_constraint(
                format!("env{tag}_lo[{t},{s},{l},{th},{j}]"),
                vec![(mu, 1.0), (y, -1.0), (bf, big_m)],
                Rel::Le,
                big_m,
            )?;
        }
    }

    // strong duality: primal welfare minus dual objective equals zero
    {
        let mut terms = Vec::new();
        for (i, bid) in case.bids.iter().enumerate() {
            let sign = match bid.kind {
                AgentKind::Generator => -1.0,
                AgentKind::Consumer => 1.0,
            };
            terms.push((index.dispatch[i], sign * bid.price));
            terms.push((index.phi_max[i], -bid.q_max));
            terms.push((index.phi_min[i], bid.q_min));
        }
        for (&(t, s, l), &mu) in &index.mu_max {
            let cap = case.lines.iter().find(|x| x.id == l).unwrap().capacity;
            terms.push((mu, -cap));
            terms.push((index.mu_min[&(t, s, l)], -cap));
        }
        for (&(t, s, n), &xi) in &index.xi_max {
            let theta_max = case.nodes.iter().find(|x| x.id == n).unwrap().theta_max;
            terms.push((xi, -theta_max));
            terms.push((index.xi_min[&(t, s, n)], -theta_max));
        }
        for (&(_, _, l, _, j), &ymax) in &index.y_max {
            let lump = case.lines.iter().find(|x| x.id == l).unwrap().lumps[j];
            terms.push((ymax, -lump));
        }
        for (&(_, _, l, _, j), &ymin) in &index.y_min {
            let lump = case.lines.iter().find(|x| x.id == l).unwrap().lumps[j];
            terms.push((ymin, -lump));
        }
        b.add_constraint("strong_duality", terms, Rel::Eq, 0.0)?;
    }

    // expansion logic: one lump if and only if expanded, one expansion
    // per line over the horizon
    for t in case.horizon.years_iter() {
        for line in &case.lines {
            let mut terms: Vec<(VarId, f64)> =
                (0..line.lumps.len()).map(|j| (index.build[&(t, line.id, j)], 1.0)).collect();
            terms.push((index.expand[&(t, line.id)], -1.0));
            b.add_constraint(format!("lump_link[{t},{}]", line.id), terms, Rel::Eq, 0.0)?;
        }
    }
    for line in &case.lines {
        let terms: Vec<(VarId, f64)> = case
            .horizon
            .years_iter()
            .map(|t| (index.expand[&(t, line.id)], 1.0))
            .collect();
        b.add_constraint(format!("once[{}]", line.id), terms, Rel::Le, 1.0)?;
    }

    // accounting definitions
    for t in case.horizon.years_iter() {
        let mut sl_terms = vec![(index.sl[&t], 1.0)];
        let mut sg_terms = vec![(index.sg[&t], 1.0)];
        let mut ms_terms = vec![(index.ms[&t], 1.0), (index.sl[&t], 1.0), (index.sg[&t], 1.0)];
        for (i, bid) in case.bids.iter().enumerate() {
            if bid.year != t {
                continue;
            }
            let (acc, welfare_sign) = match bid.kind {
                AgentKind::Generator => (&mut sg_terms, -1.0),
                AgentKind::Consumer => (&mut sl_terms, 1.0),
            };
            acc.push((index.phi_max[i], -bid.q_max));
            acc.push((index.phi_min[i], bid.q_min));
            ms_terms.push((index.dispatch[i], -welfare_sign * bid.price));
        }
        b.add_constraint(format!("def_SL[{t}]"), sl_terms, Rel::Eq, 0.0)?;
        b.add_constraint(format!("def_SG[{t}]"), sg_terms, Rel::Eq, 0.0)?;
        b.add_constraint(format!("def_MS[{t}]"), ms_terms, Rel::Eq, 0.0)?;

        let mut cost_terms = vec![(index.cost[&t], 1.0)];
        for line in &case.lines {
            cost_terms.push((index.expand[&(t, line.id)], -psi * line.k_fix));
            for (j, &lump) in line.lumps.iter().enumerate() {
                cost_terms.push((index.build[&(t, line.id, j)], -psi * line.k_var * lump));
            }
        }
        b.add_constraint(format!("def_C[{t}]"), cost_terms, Rel::Eq, 0.0)?;

        if t == 1 {
            b.add_constraint("def_PHI[1]", vec![(index.fee[&1], 1.0)], Rel::Eq, 0.0)?;
        } else {
            b.add_constraint(
                format!("def_PHI[{t}]"),
                vec![
                    (index.fee[&t], 1.0),
                    (index.fee[&(t - 1)], -1.0),
                    (index.sl[&t], -kappa * psi),
                    (index.sg[&t], -kappa * psi),
                    (index.sl[&(t - 1)], kappa * psi),
                    (index.sg[&(t - 1)], kappa * psi),
                ],
                Rel::Eq,
                0.0,
            )?;
        }
    }

    Ok(MilpProblem { model: b.build(), index })
}

/// Reads the embedded clearing solution (primal and dual) out of a MILP
/// solve.
pub fn extract_embedded_outcome(
    case: &CaseStudy,
    problem: &MilpProblem,
    result: &SolveResult,
) -> MarketOutcome {
    let ix = &problem.index;
    let grab3 = |m: &BTreeMap<(u32, u32, u32), VarId>| {
        m.iter().map(|(&k, &v)| (k, result.value(v))).collect::<BTreeMap<_, _>>()
    };
    let mut xi_max = grab3(&ix.xi_max);
    let mut xi_min = grab3(&ix.xi_min);
    let reference = case.reference_node();
    for t in case.horizon.years_iter() {
        for s in case.horizon.periods_iter() {
            xi_max.insert((t, s, reference), 0.0);
            xi_min.insert((t, s, reference), 0.0);
        }
    }
    let dispatch: Vec<f64> = ix.dispatch.iter().map(|&v| result.value(v)).collect();
    let objective = case
        .bids
        .iter()
        .zip(&dispatch)
        .map(|(bid, &q)| match bid.kind {
            AgentKind::Generator => -bid.price * q,
            AgentKind::Consumer => bid.price * q,
        })
        .sum();
    MarketOutcome {
        dispatch,
        phi_max: ix.phi_max.iter().map(|&v| result.value(v)).collect(),
        phi_min: ix.phi_min.iter().map(|&v| result.value(v)).collect(),
        prices: grab3(&ix.price),
        flows: grab3(&ix.flow),
        angles: grab3(&ix.angle),
        gamma: grab3(&ix.gamma),
        mu_max: grab3(&ix.mu_max),
        mu_min: grab3(&ix.mu_min),
        xi_max,
        xi_min,
        chi: ix.chi.iter().map(|(&k, &v)| (k, result.value(v))).collect(),
        objective,
    }
}

/// Reads the chosen expansion plan out of a MILP solve.
pub fn extract_plan(problem: &MilpProblem, result: &SolveResult) -> ExpansionPlan {
    let mut selections = Vec::new();
    for (&(t, l, j), &v) in &problem.index.build {
        if result.value(v) > 0.5 {
            selections.push(Selection { line: l, year: t, lump_index: j });
        }
    }
    ExpansionPlan { selections }
}

/// Annual fee path Phi_t implied by the surplus trajectory; Phi_1 = 0
/// and later years accumulate kappa * psi times the year-over-year
/// change in participant surplus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeeTrajectory {
    pub kappa: f64,
    /// phi[t-1] is the fee collected in year t.
    pub phi: Vec<f64>,
}

impl FeeTrajectory {
    pub fn from_surpluses(case: &CaseStudy, report: &SurplusReport) -> Self {
        let kappa = case.policy.kappa;
        let psi = case.horizon.psi;
        let mut phi = vec![0.0];
        for t in 2..=case.horizon.years {
            let cur = report.year(t);
            let prev = report.year(t - 1);
            let delta = (cur.s_l + cur.s_g) - (prev.s_l + prev.s_g);
            phi.push(phi[(t - 2) as usize] + kappa * psi * delta);
        }
        FeeTrajectory { kappa, phi }
    }

    pub fn in_year(&self, t: u32) -> f64 {
        self.phi[(t - 1) as usize]
    }
}

/// Per-year economics. `s_l`, `s_g`, `ms` are per-period quantities
/// (multiply by psi for money); `fee` and `cost` are money.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct YearMetrics {
    pub year: u32,
    pub s_l: f64,
    pub s_g: f64,
    pub ms: f64,
    pub fee: f64,
    pub cost: f64,
}

/// Discounted plan economics. `sw = tp + benefits` holds by
/// construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanMetrics {
    pub tp: f64,
    pub sw: f64,
    pub benefits: f64,
    pub fee_npv: f64,
    pub ms_npv: f64,
    pub cost_npv: f64,
    pub per_year: Vec<YearMetrics>,
}

/// Computes Transco profit, social welfare and participant benefits for
/// a plan from a clearing outcome's primal quantities and prices, with
/// the fee recursion applied on top.
pub fn recompute_metrics_from_primal(
    case: &CaseStudy,
    plan: &ExpansionPlan,
    outcome: &MarketOutcome,
) -> PlanMetrics {
    let report = compute_surpluses(case, outcome);
    let fees = FeeTrajectory::from_surpluses(case, &report);
    metrics_from_parts(case, plan, &report, &fees)
}

pub fn metrics_from_parts(
    case: &CaseStudy,
    plan: &ExpansionPlan,
    report: &SurplusReport,
    fees: &FeeTrajectory,
) -> PlanMetrics {
    let psi = case.horizon.psi;
    let mut per_year = Vec::new();
    let (mut tp, mut sw) = (0.0, 0.0);
    let (mut fee_npv, mut ms_npv, mut cost_npv) = (0.0, 0.0, 0.0);
    for t in case.horizon.years_iter() {
        let ys = report.year(t);
        let fee = fees.in_year(t);
        let cost = plan.cost_in_year(case, t);
        let disc = case.horizon.discount(t);
        tp += disc * (psi * ys.ms + fee - cost);
        sw += disc * (psi * (ys.ms + ys.s_l + ys.s_g) - cost);
        fee_npv += disc * fee;
        ms_npv += disc * psi * ys.ms;
        cost_npv += disc * cost;
        per_year.push(YearMetrics { year: t, s_l: ys.s_l, s_g: ys.s_g, ms: ys.ms, fee, cost });
    }
    PlanMetrics { tp, sw, benefits: sw - tp, fee_npv, ms_npv, cost_npv, per_year }
}

/// Post-solve check that the big-M envelopes did not distort the
/// solution: envelope variables must match the products they stand for,
/// no capacity multiplier may sit at the big-M ceiling, and the
/// embedded clearing solution must reach the true LP optimum for the
/// chosen plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeAudit {
    pub max_envelope_residual: f64,
    pub max_mu_over_m: f64,
    pub embedded_welfare: f64,
    pub lp_welfare: f64,
    pub lp_relative_gap: f64,
    pub pass: bool,
}

pub fn audit_envelopes(
    case: &CaseStudy,
    problem: &MilpProblem,
    result: &SolveResult,
    cfg: &SolverConfig,
) -> Result<EnvelopeAudit, MilpError> {
    let ix = &problem.index;
    let big_m = case.policy.big_m;
    let mut max_residual: f64 = 0.0;
    for (&(t, s, l, th, j), &y) in &ix.y_max {
        let bf = result.value(ix.build[&(th, l, j)]).round();
        let prod = bf * result.value(ix.mu_max[&(t, s, l)]);
        max_residual = max_residual.max((result.value(y) - prod).abs());
    }
    for (&(t, s, l, th, j), &y) in &ix.y_min {
        let bf = result.value(ix.build[&(th, l, j)]).round();
        let prod = bf * result.value(ix.mu_min[&(t, s, l)]);
        max_residual = max_residual.max((result.value(y) - prod).abs());
    }
    let mut max_mu: f64 = 0.0;
    for &v in ix.mu_max.values().chain(ix.mu_min.values()) {
        max_mu = max_mu.max(result.value(v));
    }

    let plan = extract_plan(problem, result);
    let lp = build_wsm_lp(case, &plan).map_err(|e| MilpError::Case(e.to_string()))?;
    let lp_result = optimize(&lp.model, cfg)?;
    if lp_result.status != Status::Optimal {
        return Err(MilpError::BadStatus(lp_result.status));
    }
    let lp_welfare = lp_result.objective;
    let embedded = extract_embedded_outcome(case, problem, result);
    let lp_relative_gap =
        (embedded.objective - lp_welfare).abs() / (1.0 + lp_welfare.abs());

    let pass = max_residual <= 1e-6 * (1.0 + big_m)
        && max_mu / big_m <= 0.999
        && lp_relative_gap <= 1e-5;
    Ok(EnvelopeAudit {
        max_envelope_residual: max_residual,
        max_mu_over_m: max_mu / big_m,
        embedded_welfare: embedded.objective,
        lp_welfare,
        lp_relative_gap,
        pass,
    })
}

/// Result of a planning solve: the chosen plan, its economics as seen by
/// the MILP, the embedded clearing solution, and the two certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanningSolution {
    pub plan: ExpansionPlan,
    pub kappa: f64,
    pub tp: f64,
    pub sw: f64,
    pub benefits: f64,
    pub per_year: Vec<YearMetrics>,
    pub outcome: MarketOutcome,
    pub certificate: DualCertificate,
    pub audit: EnvelopeAudit,
    pub mip_gap: Option<f64>,
    pub wall_time_s: f64,
    pub num_vars: usize,
    pub num_cons: usize,
    pub num_binaries: usize,
}

impl PlanningSolution {
    pub fn certified(&self) -> bool {
        self.certificate.pass && self.audit.pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

pub fn solve_planning(case: &CaseStudy, cfg: &SolverConfig) -> Result<PlanningSolution, MilpError> {
    solve_planning_with(case, cfg, &MilpOptions::default())
}

pub fn solve_planning_with(
    case: &CaseStudy,
    cfg: &SolverConfig,
    opts: &MilpOptions,
) -> Result<PlanningSolution, MilpError> {
    let problem = assemble_milp(case, opts)?;
    let result = optimize(&problem.model, cfg)?;
    match result.status {
        Status::Optimal | Status::Limit => {}
        s => return Err(MilpError::BadStatus(s)),
    }
    let plan = extract_plan(&problem, &result);
    let outcome = extract_embedded_outcome(case, &problem, &result);
    let certificate = duality::certify(case, &plan, &outcome);
    let audit = audit_envelopes(case, &problem, &result, cfg)?;
    let ix = &problem.index;
    let per_year = case
        .horizon
        .years_iter()
        .map(|t| YearMetrics {
            year: t,
            s_l: result.value(ix.sl[&t]),
            s_g: result.value(ix.sg[&t]),
            ms: result.value(ix.ms[&t]),
            fee: result.value(ix.fee[&t]),
            cost: result.value(ix.cost[&t]),
        })
        .collect::<Vec<_>>();
    let psi = case.horizon.psi;
    let sw: f64 = per_year
        .iter()
        .map(|y| case.horizon.discount(y.year) * (psi * (y.ms + y.s_l + y.s_g) - y.cost))
        .sum();
    Ok(PlanningSolution {
        plan,
        kappa: case.policy.kappa,
        tp: result.objective,
        sw,
        benefits: sw - result.objective,
        per_year,
        outcome,
        certificate,
        audit,
        mip_gap: result.gap,
        wall_time_s: result.wall_time_s,
        num_vars: problem.model.vars.len(),
        num_cons: problem.model.cons.len(),
        num_binaries: problem.model.num_binaries(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp_market::two_bus_case;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn binary_count_matches_menu_size() {
        let case = two_bus_case(5.0);
        let p = assemble_milp(&case, &MilpOptions::default()).unwrap();
        // |T| * |L| * |J| + |T| * |L| binaries, year-1 copies fixed to 0
        assert_eq!(p.model.num_binaries(), 2 * 1 * 5 + 2 * 1);
        // envelopes only for t=2, that=2: 2 * |J| continuous y vars
        assert_eq!(p.index.y_max.len(), 5);
        assert_eq!(p.index.y_min.len(), 5);
    }

    #[test]
    fn undersized_big_m_is_rejected_unless_waived() {
        let mut case = two_bus_case(5.0);
        case.policy.big_m = 60.0;
        assert!(matches!(
            assemble_milp(&case, &MilpOptions::default()),
            Err(MilpError::BigMTooSmall { .. })
        ));
        assemble_milp(&case, &MilpOptions { skip_big_m_guard: true }).unwrap();
    }

    #[test]
    fn two_bus_planning_matches_hand_solution() {
        // spread 10 over a line at 5 MW; each extra MW in year 2 earns 10
        // and costs 3 variable, so the full 5 MW lump wins:
        // TP = 50 + 100 - (1 + 15) = 134
        let case = two_bus_case(5.0);
        let sol = solve_planning(&case, &cfg()).unwrap();
        assert!((sol.tp - 134.0).abs() < 1e-4, "tp = {}", sol.tp);
        assert_eq!(sol.plan.selections.len(), 1);
        let sel = &sol.plan.selections[0];
        assert_eq!((sel.line, sel.year, sel.lump_index), (1, 2, 4));
        assert!(sol.certified(), "cert {:?} audit {:?}", sol.certificate, sol.audit);
        // kappa = 1 leaves zero benefits here because year-1 surplus is 0
        assert!(sol.benefits.abs() < 1e-4, "benefits = {}", sol.benefits);
        assert!((sol.sw - sol.tp - sol.benefits).abs() < 1e-9);
    }

    #[test]
    fn expansion_stays_home_when_fixed_cost_dominates() {
        let mut case = two_bus_case(5.0);
        for line in &mut case.lines {
            line.k_fix = 1e4;
        }
        let sol = solve_planning(&case, &cfg()).unwrap();
        assert!(sol.plan.selections.is_empty(), "{:?}", sol.plan);
        assert!((sol.tp - 100.0).abs() < 1e-4, "tp = {}", sol.tp);
        assert!(sol.certified());
    }

    #[test]
    fn recomputed_metrics_agree_with_the_objective() {
        for kappa in [0.0, 0.5, 1.0] {
            let mut case = two_bus_case(5.0);
            case.policy.kappa = kappa;
            let sol = solve_planning(&case, &cfg()).unwrap();
            let m = recompute_metrics_from_primal(&case, &sol.plan, &sol.outcome);
            let scale = 1.0 + sol.tp.abs();
            assert!((m.tp - sol.tp).abs() <= 1e-5 * scale, "kappa {kappa}: {} vs {}", m.tp, sol.tp);
            assert!((m.sw - sol.sw).abs() <= 1e-5 * scale);
            assert!((m.tp + m.benefits - m.sw).abs() < 1e-9);
        }
    }

    #[test]
    fn fee_recursion_matches_accounting_rows() {
        let mut case = two_bus_case(5.0);
        case.policy.kappa = 0.5;
        let sol = solve_planning(&case, &cfg()).unwrap();
        let report = compute_surpluses(&case, &sol.outcome);
        let fees = FeeTrajectory::from_surpluses(&case, &report);
        for y in &sol.per_year {
            assert!(
                (y.fee - fees.in_year(y.year)).abs() < 1e-5,
                "year {}: {} vs {}",
                y.year,
                y.fee,
                fees.in_year(y.year)
            );
        }
    }

    #[test]
    fn fee_trajectory_starts_at_zero_and_telescopes() {
        let case = two_bus_case(5.0);
        let plan = ExpansionPlan::single(1, 2, 2);
        let out = crate::lp_market::solve_wsm(&case, &plan, &cfg()).unwrap();
        let report = compute_surpluses(&case, &out);
        let fees = FeeTrajectory::from_surpluses(&case, &report);
        assert_eq!(fees.in_year(1), 0.0);
        let y2 = report.year(2);
        let y1 = report.year(1);
        let expect = case.policy.kappa
            * case.horizon.psi
            * ((y2.s_l + y2.s_g) - (y1.s_l + y1.s_g));
        assert!((fees.in_year(2) - expect).abs() < 1e-9);
    }
}
