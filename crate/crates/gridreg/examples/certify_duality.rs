//! Solves a market LP on both backends and prints the optimality
//! certificate (dual feasibility, strong duality, complementarity).
//!
//! Run with: cargo run --example certify_duality

use gridreg::duality::certify;
use gridreg::lp_market::{solve_wsm, ExpansionPlan};
use gridreg::network_model::{generate_two_node_case, TwoNodeOverrides};
use gridreg::solver::SolverConfig;

fn main() {
    let ov = TwoNodeOverrides { lump_stride: 50, ..Default::default() };
    let case = generate_two_node_case(42, &ov);
    let plan = ExpansionPlan::single(1, 2, 3);

    for backend in ["highs", "clarabel"] {
        let cfg = SolverConfig { backend: backend.into(), ..Default::default() };
        let outcome = solve_wsm(&case, &plan, &cfg).unwrap();
        let cert = certify(&case, &plan, &outcome);
        println!(
            "{backend}: dual_feas={:.3e} gap={:.3e} compl={:.3e} scale={:.3e} pass={}",
            cert.dual_feasibility,
            cert.strong_duality_gap,
            cert.complementarity,
            cert.scale,
            cert.pass
        );
    }
}
