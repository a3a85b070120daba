//! The lower-level wholesale-market clearing LP for a fixed expansion
//! plan, and the surplus accounting used by the incentive mechanism.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network_model::{AgentKind, CaseStudy, Line};
use crate::solver::{
    optimize, ConId, Model, ModelBuilder, Rel, Sense, SolveResult, SolverConfig, SolverError,
    Status, VarId, VarKind,
};

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("invalid expansion plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("clearing LP ended with status {0:?}")]
    NotOptimal(Status),
}

/// One lumpy investment: line `line` expanded by its `lump` menu entry in
/// year `year` (year >= 2; at most one selection per line over the whole
/// horizon).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub line: u32,
    pub year: u32,
    pub lump_index: usize,
}

/// Upper-level investment decision: at most one lump per line, never in
/// year 1, irreversible.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpansionPlan {
    pub selections: Vec<Selection>,
}

impl ExpansionPlan {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(line: u32, year: u32, lump_index: usize) -> Self {
        Self { selections: vec![Selection { line, year, lump_index }] }
    }

    pub fn validate(&self, case: &CaseStudy) -> Result<(), MarketError> {
        let mut seen = std::collections::HashSet::new();
        for sel in &self.selections {
            let line = case
                .lines
                .iter()
                .find(|l| l.id == sel.line)
                .ok_or_else(|| MarketError::InvalidPlan(format!("unknown line {}", sel.line)))?;
            if !seen.insert(sel.line) {
                return Err(MarketError::InvalidPlan(format!(
                    "line {} selected more than once",
                    sel.line
                )));
            }
            if sel.year < 2 {
                return Err(MarketError::InvalidPlan(format!(
                    "line {} expansion scheduled in year {}, but year 1 is the baseline",
                    sel.line, sel.year
                )));
            }
            if sel.year > case.horizon.years {
                return Err(MarketError::InvalidPlan(format!(
                    "line {} expansion year {} is beyond the horizon",
                    sel.line, sel.year
                )));
            }
            if sel.lump_index >= line.lumps.len() {
                return Err(MarketError::InvalidPlan(format!(
                    "line {} lump index {} out of range",
                    sel.line, sel.lump_index
                )));
            }
        }
        Ok(())
    }

    pub fn selection_for(&self, line: u32) -> Option<&Selection> {
        self.selections.iter().find(|s| s.line == line)
    }

    /// Line capacity in year `t`: existing plus any lump already built.
    pub fn capacity(&self, line: &Line, year: u32) -> f64 {
        let added = match self.selection_for(line.id) {
            Some(sel) if sel.year <= year => line.lumps[sel.lump_index],
            _ => 0.0,
        };
        line.capacity + added
    }

    /// Total MW built over the horizon.
    pub fn total_mw(&self, case: &CaseStudy) -> f64 {
        self.selections
            .iter()
            .map(|sel| {
                case.lines
                    .iter()
                    .find(|l| l.id == sel.line)
                    .map(|l| l.lumps[sel.lump_index])
                    .unwrap_or(0.0)
            })
            .sum()
    }

    /// Yearly investment cost C_t = psi * (K_fix + K_var * built MW),
    /// charged in the investment year only.
    pub fn cost_in_year(&self, case: &CaseStudy, year: u32) -> f64 {
        let hourly: f64 = self
            .selections
            .iter()
            .filter(|sel| sel.year == year)
            .map(|sel| {
                let line = case.lines.iter().find(|l| l.id == sel.line).expect("validated");
                line.k_fix + line.k_var * line.lumps[sel.lump_index]
            })
            .sum();
        case.horizon.psi * hourly
    }

    pub fn describe(&self, case: &CaseStudy) -> String {
        if self.selections.is_empty() {
            return "no-build".to_string();
        }
        self.selections
            .iter()
            .map(|sel| {
                let mw = case
                    .lines
                    .iter()
                    .find(|l| l.id == sel.line)
                    .map(|l| l.lumps[sel.lump_index])
                    .unwrap_or(f64::NAN);
                format!("line {} +{} MW in year {}", sel.line, mw, sel.year)
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Variable and constraint handles of a built clearing LP, used to pull
/// the solution and its duals back out.
pub struct WsmIndex {
    /// Per global bid index: the dispatch variable.
    pub dispatch: Vec<VarId>,
    pub flow: BTreeMap<(u32, u32, u32), VarId>,
    pub angle: BTreeMap<(u32, u32, u32), VarId>,
    pub balance: BTreeMap<(u32, u32, u32), ConId>,
    pub flow_def: BTreeMap<(u32, u32, u32), ConId>,
    pub flow_ub: BTreeMap<(u32, u32, u32), ConId>,
    pub flow_lb: BTreeMap<(u32, u32, u32), ConId>,
}

pub struct WsmProblem {
    pub model: Model,
    pub index: WsmIndex,
}

/// Builds the welfare-maximizing clearing LP over the whole horizon for a
/// fixed plan: nodal balance, bid bounds, DC flow definition, flow limits
/// with cumulative expansion, angle bounds and the reference-angle fix.
pub fn build_wsm_lp(case: &CaseStudy, plan: &ExpansionPlan) -> Result<WsmProblem, MarketError> {
    plan.validate(case)?;
    let mut b = ModelBuilder::new(Sense::Maximize);
    let mut dispatch = Vec::with_capacity(case.bids.len());
    for (i, bid) in case.bids.iter().enumerate() {
        let obj = match bid.kind {
            AgentKind::Generator => -bid.price,
            AgentKind::Consumer => bid.price,
        };
        dispatch.push(b.add_var(format!("q[{i}]"), VarKind::Continuous, bid.q_min, bid.q_max, obj)?);
    }

    let mut flow = BTreeMap::new();
    let mut angle = BTreeMap::new();
    let mut balance = BTreeMap::new();
    let mut flow_def = BTreeMap::new();
    let mut flow_ub = BTreeMap::new();
    let mut flow_lb = BTreeMap::new();
    let reference = case.reference_node();

    for t in case.horizon.years_iter() {
        for s in case.horizon.periods_iter() {
            for line in &case.lines {
                let v = b.add_var(
                    format!("f[{t},{s},{}]", line.id),
                    VarKind::Continuous,
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    0.0,
                )?;
                flow.insert((t, s, line.id), v);
            }
            for node in &case.nodes {
                let (lb, ub) = if node.id == reference {
                    (0.0, 0.0)
                } else {
                    (-node.theta_max, node.theta_max)
                };
                let v = b.add_var(
                    format!("theta[{t},{s},{}]", node.id),
                    VarKind::Continuous,
                    lb,
                    ub,
                    0.0,
                )?;
                angle.insert((t, s, node.id), v);
            }
            // nodal balance: -sum g + sum d + sum_l S f - sum_l R f = 0
            for node in &case.nodes {
                let mut terms: Vec<(VarId, f64)> = Vec::new();
                for (i, bid) in case.bids.iter().enumerate() {
                    if bid.year == t && bid.period == s && bid.node == node.id {
                        let coef = match bid.kind {
                            AgentKind::Generator => -1.0,
                            AgentKind::Consumer => 1.0,
                        };
                        terms.push((dispatch[i], coef));
                    }
                }
                for line in &case.lines {
                    if line.from == node.id {
                        terms.push((flow[&(t, s, line.id)], 1.0));
                    }
                    if line.to == node.id {
                        terms.push((flow[&(t, s, line.id)], -1.0));
                    }
                }
                let c = b.add_constraint(
                    format!("balance[{t},{s},{}]", node.id),
                    terms,
                    Rel::Eq,
                    0.0,
                )?;
                balance.insert((t, s, node.id), c);
            }
            for line in &case.lines {
                let f = flow[&(t, s, line.id)];
                let th_from = angle[&(t, s, line.from)];
                let th_to = angle[&(t, s, line.to)];
                let c = b.add_constraint(
                    format!("flowdef[{t},{s},{}]", line.id),
                    vec![(f, 1.0), (th_from, -line.susceptance), (th_to, line.susceptance)],
                    Rel::Eq,
                    0.0,
                )?;
                flow_def.insert((t, s, line.id), c);
                let cap = plan.capacity(line, t);
                let c_ub = b.add_constraint(
                    format!("flowub[{t},{s},{}]", line.id),
                    vec![(f, 1.0)],
                    Rel::Le,
                    cap,
                )?;
                let c_lb = b.add_constraint(
                    format!("flowlb[{t},{s},{}]", line.id),
                    vec![(f, -1.0)],
                    Rel::Le,
                    cap,
                )?;
                flow_ub.insert((t, s, line.id), c_ub);
                flow_lb.insert((t, s, line.id), c_lb);
            }
        }
    }
    Ok(WsmProblem {
        model: b.build(),
        index: WsmIndex { dispatch, flow, angle, balance, flow_def, flow_ub, flow_lb },
    })
}

/// Full primal/dual clearing solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketOutcome {
    /// MW dispatched per global bid index.
    pub dispatch: Vec<f64>,
    /// Upper-bound dual per bid (phi^{G,max} / phi^{D,max}).
    pub phi_max: Vec<f64>,
    /// Lower-bound dual per bid (phi^{G,min} / phi^{D,min}).
    pub phi_min: Vec<f64>,
    pub prices: BTreeMap<(u32, u32, u32), f64>,
    pub flows: BTreeMap<(u32, u32, u32), f64>,
    pub angles: BTreeMap<(u32, u32, u32), f64>,
    pub gamma: BTreeMap<(u32, u32, u32), f64>,
    pub mu_max: BTreeMap<(u32, u32, u32), f64>,
    pub mu_min: BTreeMap<(u32, u32, u32), f64>,
    pub xi_max: BTreeMap<(u32, u32, u32), f64>,
    pub xi_min: BTreeMap<(u32, u32, u32), f64>,
    /// Reference-node dual, recovered from the angle stationarity at the
    /// reference node.
    pub chi: BTreeMap<(u32, u32), f64>,
    /// Welfare objective (sum over all years and periods, unscaled).
    pub objective: f64,
}

impl MarketOutcome {
    /// `t,s,b,pi` rows, fixed column order.
    pub fn prices_csv(&self) -> String {
        let mut out = String::from("t,s,b,pi\n");
        for (&(t, s, b), &pi) in &self.prices {
            out.push_str(&format!("{t},{s},{b},{}\n", fmt6(pi)));
        }
        out
    }

    /// `t,s,l,f` rows, fixed column order.
    pub fn flows_csv(&self) -> String {
        let mut out = String::from("t,s,l,f\n");
        for (&(t, s, l), &f) in &self.flows {
            out.push_str(&format!("{t},{s},{l},{}\n", fmt6(f)));
        }
        out
    }
}

/// Formats a float with 6 significant digits, the fixed report precision.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // round to 6 significant digits, then print the shortest form
    let rounded: f64 = format!("{x:.5e}").parse().expect("valid float literal");
    format!("{rounded}")
}

/// Extracts a [`MarketOutcome`] from an LP solution of `problem`.
pub fn extract_outcome(
    case: &CaseStudy,
    problem: &WsmProblem,
    result: &SolveResult,
) -> MarketOutcome {
    let idx = &problem.index;
    let dispatch: Vec<f64> = idx.dispatch.iter().map(|&v| result.value(v)).collect();
    let mut phi_max = Vec::with_capacity(case.bids.len());
    let mut phi_min = Vec::with_capacity(case.bids.len());
    for &v in &idx.dispatch {
        let z = result.reduced_cost(v);
        phi_max.push(z.max(0.0));
        phi_min.push((-z).max(0.0));
    }
    let prices = idx.balance.iter().map(|(&k, &c)| (k, result.dual(c))).collect();
    let flows = idx.flow.iter().map(|(&k, &v)| (k, result.value(v))).collect();
    let angles = idx.angle.iter().map(|(&k, &v)| (k, result.value(v))).collect();
    let gamma: BTreeMap<_, _> = idx.flow_def.iter().map(|(&k, &c)| (k, result.dual(c))).collect();
    let mu_max = idx.flow_ub.iter().map(|(&k, &c)| (k, result.dual(c))).collect();
    let mu_min = idx.flow_lb.iter().map(|(&k, &c)| (k, result.dual(c))).collect();
    let reference = case.reference_node();
    let mut xi_max = BTreeMap::new();
    let mut xi_min = BTreeMap::new();
    for (&(t, s, node), &v) in &idx.angle {
        if node == reference {
            xi_max.insert((t, s, node), 0.0);
            xi_min.insert((t, s, node), 0.0);
        } else {
            let z = result.reduced_cost(v);
            xi_max.insert((t, s, node), z.max(0.0));
            xi_min.insert((t, s, node), (-z).max(0.0));
        }
    }
    // chi from the reference-node stationarity: chi = sum_l B_l (S - R) gamma_l
    let mut chi = BTreeMap::new();
    for t in case.horizon.years_iter() {
        for s in case.horizon.periods_iter() {
            let mut v = 0.0;
            for line in &case.lines {
                let g = gamma[&(t, s, line.id)];
                if line.from == reference {
                    v += line.susceptance * g;
                }
                if line.to == reference {
                    v -= line.susceptance * g;
                }
            }
            chi.insert((t, s), v);
        }
    }
    MarketOutcome {
        dispatch,
        phi_max,
        phi_min,
        prices,
        flows,
        angles,
        gamma,
        mu_max,
        mu_min,
        xi_max,
        xi_min,
        chi,
        objective: result.objective,
    }
}

/// Builds and solves the clearing LP. The LP is feasible whenever all
/// q_min are zero (zero dispatch, zero flow, zero angles); a nonzero
/// q_min case may legitimately come back infeasible.
pub fn solve_wsm(
    case: &CaseStudy,
    plan: &ExpansionPlan,
    cfg: &SolverConfig,
) -> Result<MarketOutcome, MarketError> {
    let problem = build_wsm_lp(case, plan)?;
    let result = optimize(&problem.model, cfg)?;
    if result.status != Status::Optimal {
        return Err(MarketError::NotOptimal(result.status));
    }
    Ok(extract_outcome(case, &problem, &result))
}

/// Per-year surplus accounting at the clearing solution. Values are in
/// per-hour units (one operational period); `psi`-scaled yearly figures
/// are obtained through [`SurplusReport::scaled`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct YearSurplus {
    pub year: u32,
    /// Load surplus sum_{s,b,k} (c^d - pi) d.
    pub s_l: f64,
    /// Generator surplus sum_{s,b,k} (pi - c^g) g.
    pub s_g: f64,
    /// Merchandising surplus sum_{s,b} pi (d - g).
    pub ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurplusReport {
    pub per_year: Vec<YearSurplus>,
}

impl SurplusReport {
    pub fn year(&self, t: u32) -> &YearSurplus {
        &self.per_year[(t - 1) as usize]
    }

    /// Psi-scaled (yearly) values for year `t`: (S^L, S^G, MS).
    pub fn scaled(&self, t: u32, psi: f64) -> (f64, f64, f64) {
        let y = self.year(t);
        (psi * y.s_l, psi * y.s_g, psi * y.ms)
    }
}

/// Computes load surplus, generator surplus, and merchandising surplus
/// per year from a clearing outcome.
pub fn compute_surpluses(case: &CaseStudy, outcome: &MarketOutcome) -> SurplusReport {
    let mut per_year = Vec::new();
    for t in case.horizon.years_iter() {
        let mut s_l = 0.0;
        let mut s_g = 0.0;
        let mut ms = 0.0;
        for s in case.horizon.periods_iter() {
            for (i, bid) in case.bids.iter().enumerate() {
                if bid.year != t || bid.period != s {
                    continue;
                }
                let pi = outcome.prices[&(t, s, bid.node)];
                let q = outcome.dispatch[i];
                match bid.kind {
                    AgentKind::Generator => {
                        s_g += (pi - bid.price) * q;
                        ms -= pi * q;
                    }
                    AgentKind::Consumer => {
                        s_l += (bid.price - pi) * q;
                        ms += pi * q;
                    }
                }
            }
        }
        per_year.push(YearSurplus { year: t, s_l, s_g, ms });
    }
    SurplusReport { per_year }
}

/// Hand-checkable 2-bus case: one generator (c=40, cap 10) at node 1,
/// one consumer (c=50, cap 10) at node 2, configurable line capacity.
/// Shared across module tests.
#[cfg(test)]
pub(crate) fn two_bus_case(existing_capacity: f64) -> CaseStudy {
    use crate::network_model::{Bid, Horizon, Line, Node, Policy, Provenance};
    {
        let mut bids = Vec::new();
        for t in 1..=2 {
            bids.push(Bid {
                kind: AgentKind::Generator,
                node: 1,
                year: t,
                period: 1,
                price: 40.0,
                q_min: 0.0,
                q_max: 10.0,
            });
            bids.push(Bid {
                kind: AgentKind::Consumer,
                node: 2,
                year: t,
                period: 1,
                price: 50.0,
                q_min: 0.0,
                q_max: 10.0,
            });
        }
        CaseStudy {
            nodes: vec![
                Node { id: 1, theta_max: 100.0 },
                Node { id: 2, theta_max: 100.0 },
            ],
            lines: vec![Line {
                id: 1,
                from: 1,
                to: 2,
                susceptance: 5.0,
                capacity: existing_capacity,
                lumps: vec![1.0, 2.0, 3.0, 4.0, 5.0],
                k_fix: 1.0,
                k_var: 3.0,
            }],
            bids,
            horizon: Horizon { years: 2, periods: 1, psi: 1.0, discount_rate: 0.0 },
            policy: Policy { kappa: 1.0, big_m: 3000.0 },
            provenance: Provenance::default(),
        }
    }
}
