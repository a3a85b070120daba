//! Optimality certificates for clearing solutions: dual feasibility,
//! strong duality, and complementary slackness. Used both as a test
//! oracle and as a post-solve certificate inside the MILP pipeline.

use serde::{Deserialize, Serialize};

use crate::lp_market::{ExpansionPlan, MarketOutcome};
use crate::network_model::{AgentKind, CaseStudy};

/// Default scaled-residual tolerance for a certificate to pass. Looser
/// than the solver tolerance to absorb accumulation over large cases.
pub const CERT_TOL: f64 = 1e-5;

/// Residuals are raw (unscaled); `pass` compares each against
/// `CERT_TOL * scale` with `scale = 1 + |primal objective|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualCertificate {
    pub dual_feasibility: f64,
    pub strong_duality_gap: f64,
    pub complementarity: f64,
    pub scale: f64,
    pub pass: bool,
}

impl DualCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Welfare objective recomputed from dispatch (the primal side of the
/// strong-duality equation).
pub fn primal_welfare(case: &CaseStudy, outcome: &MarketOutcome) -> f64 {
    case.bids
        .iter()
        .enumerate()
        .map(|(i, bid)| match bid.kind {
            AgentKind::Generator => -bid.price * outcome.dispatch[i],
            AgentKind::Consumer => bid.price * outcome.dispatch[i],
        })
        .sum()
}

/// Maximum violation of the lower-level dual constraints (bid-price
/// stationarity, flow stationarity, angle stationarity, multiplier
/// signs).
pub fn dual_feasibility(case: &CaseStudy, outcome: &MarketOutcome) -> f64 {
    let mut r: f64 = 0.0;
    for (i, bid) in case.bids.iter().enumerate() {
        let pi = outcome.prices[&(bid.year, bid.period, bid.node)];
        let (pmax, pmin) = (outcome.phi_max[i], outcome.phi_min[i]);
        r = r.max((-pmax).max(0.0)).max((-pmin).max(0.0));
        let res = match bid.kind {
            AgentKind::Generator => -pi + pmax - pmin + bid.price,
            AgentKind::Consumer => pi + pmax - pmin - bid.price,
        };
        r = r.max(res.abs());
    }
    let reference = case.reference_node();
    for t in case.horizon.years_iter() {
        for s in case.horizon.periods_iter() {
            for line in &case.lines {
                let k = (t, s, line.id);
                let pi_s = outcome.prices[&(t, s, line.from)];
                let pi_r = outcome.prices[&(t, s, line.to)];
                let (mu_max, mu_min) = (outcome.mu_max[&k], outcome.mu_min[&k]);
                r = r.max((-mu_max).max(0.0)).max((-mu_min).max(0.0));
                r = r.max((pi_s - pi_r + outcome.gamma[&k] + mu_max - mu_min).abs());
            }
            for node in &case.nodes {
                // angle stationarity: sum_l B_l (S - R) gamma = xi_min - xi_max
                let mut acc = 0.0;
                for line in &case.lines {
                    let g = outcome.gamma[&(t, s, line.id)];
                    if line.from == node.id {
                        acc += line.susceptance * g;
                    }
                    if line.to == node.id {
                        acc -= line.susceptance * g;
                    }
                }
                if node.id == reference {
                    r = r.max((acc - outcome.chi[&(t, s)]).abs());
                } else {
                    let k = (t, s, node.id);
                    let (xi_max, xi_min) = (outcome.xi_max[&k], outcome.xi_min[&k]);
                    r = r.max((-xi_max).max(0.0)).max((-xi_min).max(0.0));
                    r = r.max((acc + xi_min - xi_max).abs());
                }
            }
        }
    }
    r
}

/// Dual objective: bid-bound terms, existing-capacity and angle-bound
/// terms, plus the expansion terms picked out by the plan's binaries.
pub fn dual_objective(case: &CaseStudy, plan: &ExpansionPlan, outcome: &MarketOutcome) -> f64 {
    let mut total = 0.0;
    for (i, bid) in case.bids.iter().enumerate() {
        total += outcome.phi_max[i] * bid.q_max - outcome.phi_min[i] * bid.q_min;
    }
    let reference = case.reference_node();
    for t in case.horizon.years_iter() {
        for s in case.horizon.periods_iter() {
            for line in &case.lines {
                let k = (t, s, line.id);
                let mu_sum = outcome.mu_max[&k] + outcome.mu_min[&k];
                total += line.capacity * mu_sum;
                if let Some(sel) = plan.selection_for(line.id) {
                    if sel.year <= t {
                        total += line.lumps[sel.lump_index] * mu_sum;
                    }
                }
            }
            for node in &case.nodes {
                if node.id == reference {
                    continue;
                }
                let k = (t, s, node.id);
                total += node.theta_max * (outcome.xi_max[&k] + outcome.xi_min[&k]);
            }
        }
    }
    total
}

/// |primal objective - dual objective|.
pub fn strong_duality_gap(case: &CaseStudy, plan: &ExpansionPlan, outcome: &MarketOutcome) -> f64 {
    (primal_welfare(case, outcome) - dual_objective(case, plan, outcome)).abs()
}

/// Maximum |multiplier * slack| over every bound constraint.
pub fn complementarity(case: &CaseStudy, plan: &ExpansionPlan, outcome: &MarketOutcome) -> f64 {
    let mut r: f64 = 0.0;
    for (i, bid) in case.bids.iter().enumerate() {
        let q = outcome.dispatch[i];
        r = r.max((outcome.phi_max[i] * (bid.q_max - q)).abs());
        r = r.max((outcome.phi_min[i] * (q - bid.q_min)).abs());
    }
    let reference = case.reference_node();
    for t in case.horizon.years_iter() {
        for s in case.horizon.periods_iter() {
            for line in &case.lines {
                let k = (t, s, line.id);
                let cap = plan.capacity(line, t);
                let f = outcome.flows[&k];
                r = r.max((outcome.mu_max[&k] * (cap - f)).abs());
                r = r.max((outcome.mu_min[&k] * (cap + f)).abs());
            }
            for node in &case.nodes {
                if node.id == reference {
                    continue;
                }
                let k = (t, s, node.id);
                let th = outcome.angles[&k];
                r = r.max((outcome.xi_max[&k] * (node.theta_max - th)).abs());
                r = r.max((outcome.xi_min[&k] * (node.theta_max + th)).abs());
            }
        }
    }
    r
}

/// Max residual of the price-quantity linearization identities
/// pi*g = c^g g + phi^{G,max} g^max - phi^{G,min} g^min (and the demand
/// analogue) that the MILP objective relies on.
pub fn linearization_residual(case: &CaseStudy, outcome: &MarketOutcome) -> f64 {
    let mut r: f64 = 0.0;
    for (i, bid) in case.bids.iter().enumerate() {
        let pi = outcome.prices[&(bid.year, bid.period, bid.node)];
        let q = outcome.dispatch[i];
        let lin = match bid.kind {
            AgentKind::Generator => {
                bid.price * q + outcome.phi_max[i] * bid.q_max - outcome.phi_min[i] * bid.q_min
            }
            AgentKind::Consumer => {
                bid.price * q - outcome.phi_max[i] * bid.q_max + outcome.phi_min[i] * bid.q_min
            }
        };
        r = r.max((pi * q - lin).abs());
    }
    r
}

/// Runs all three checks and compares against `CERT_TOL * scale`.
pub fn certify(case: &CaseStudy, plan: &ExpansionPlan, outcome: &MarketOutcome) -> DualCertificate {
    let scale = 1.0 + primal_welfare(case, outcome).abs();
    let dual_feasibility = dual_feasibility(case, outcome);
    let strong_duality_gap = strong_duality_gap(case, plan, outcome);
    let complementarity = complementarity(case, plan, outcome);
    let tol = CERT_TOL * scale;
    DualCertificate {
        dual_feasibility,
        strong_duality_gap,
        complementarity,
        scale,
        pass: dual_feasibility <= tol && strong_duality_gap <= tol && complementarity <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp_market::{solve_wsm, ExpansionPlan};
    use crate::network_model::{
        generate_two_node_case, AgentKind, Bid, CaseStudy, Horizon, Line, Node, Policy,
        Provenance, TwoNodeOverrides,
    };
    use crate::solver::SolverConfig;

    fn two_bus_case(cap: f64) -> CaseStudy {
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
            nodes: vec![Node { id: 1, theta_max: 100.0 }, Node { id: 2, theta_max: 100.0 }],
            lines: vec![Line {
                id: 1,
                from: 1,
                to: 2,
                susceptance: 5.0,
                capacity: cap,
                lumps: vec![1.0, 2.0, 3.0],
                k_fix: 1.0,
                k_var: 3.0,
            }],
            bids,
            horizon: Horizon { years: 2, periods: 1, psi: 1.0, discount_rate: 0.0 },
            policy: Policy { kappa: 1.0, big_m: 3000.0 },
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn optimal_two_bus_certifies() {
        let case = two_bus_case(5.0);
        let plan = ExpansionPlan::empty();
        let out = solve_wsm(&case, &plan, &SolverConfig::default()).unwrap();
        let cert = certify(&case, &plan, &out);
        assert!(cert.pass, "{cert:?}");
        assert!(linearization_residual(&case, &out) <= CERT_TOL * cert.scale);
    }

    #[test]
    fn price_perturbation_breaks_dual_feasibility() {
        let case = two_bus_case(5.0);
        let plan = ExpansionPlan::empty();
        let mut out = solve_wsm(&case, &plan, &SolverConfig::default()).unwrap();
        let base = dual_feasibility(&case, &out);
        *out.prices.get_mut(&(1, 1, 1)).unwrap() += 1.0;
        assert!(dual_feasibility(&case, &out) >= 1.0 - base - 1e-9);
    }

    #[test]
    fn halved_dispatch_opens_a_duality_gap() {
        let case = two_bus_case(5.0);
        let plan = ExpansionPlan::empty();
        let mut out = solve_wsm(&case, &plan, &SolverConfig::default()).unwrap();
        for q in &mut out.dispatch {
            *q *= 0.5;
        }
        // primal drops by 25 (5 MW at spread 10, halved) while the dual
        // side is unchanged
        assert!(strong_duality_gap(&case, &plan, &out) > 20.0);
    }

    #[test]
    fn expansion_terms_enter_the_dual_objective() {
        let case = two_bus_case(0.0);
        let plan = ExpansionPlan::single(1, 2, 2);
        let out = solve_wsm(&case, &plan, &SolverConfig::default()).unwrap();
        let cert = certify(&case, &plan, &out);
        assert!(cert.pass, "{cert:?}");
        // congested at 3 MW in year 2: mu_max = 10, expansion term 3*10
        let with_plan = dual_objective(&case, &plan, &out);
        let without = dual_objective(&case, &ExpansionPlan::empty(), &out);
        assert!((with_plan - without - 30.0).abs() < 1e-5);
    }

    #[test]
    fn forced_multiplier_on_slack_bound_shows_up() {
        let case = two_bus_case(5.0);
        let plan = ExpansionPlan::empty();
        let mut out = solve_wsm(&case, &plan, &SolverConfig::default()).unwrap();
        // generator 0 dispatches 5 of 10: slack 5
        out.phi_max[0] = 1.0;
        let r = complementarity(&case, &plan, &out);
        assert!((r - 5.0).abs() < 1e-6, "residual {r}");
    }

    #[test]
    fn zero_trade_outcome_certifies_with_zero_duals() {
        let case = two_bus_case(0.0);
        let plan = ExpansionPlan::empty();
        let out = solve_wsm(&case, &plan, &SolverConfig::default()).unwrap();
        let cert = certify(&case, &plan, &out);
        assert!(cert.pass, "{cert:?}");
        assert!(complementarity(&case, &plan, &out) <= 1e-8);
    }

    #[test]
    fn generated_case_lp_certifies_on_both_backends() {
        let ov = TwoNodeOverrides { lump_stride: 50, ..Default::default() };
        let case = generate_two_node_case(3, &ov);
        let plan = ExpansionPlan::single(1, 2, 2);
        for backend in ["highs", "clarabel"] {
            let cfg = SolverConfig { backend: backend.into(), ..Default::default() };
            let out = solve_wsm(&case, &plan, &cfg).unwrap();
            let cert = certify(&case, &plan, &out);
            assert!(cert.pass, "{backend}: {cert:?}");
        }
    }
}
