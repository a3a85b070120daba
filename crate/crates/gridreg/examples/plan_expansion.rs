//! Solves the single-level planning MILP at kappa = 1 and prints the
//! chosen plan, the economics and both certificates.
//!
//! Run with: cargo run --example plan_expansion

use gridreg::milp::solve_planning;
use gridreg::network_model::{generate_two_node_case, TwoNodeOverrides};
use gridreg::solver::SolverConfig;

fn main() {
    let ov = TwoNodeOverrides { lump_stride: 50, ..Default::default() };
    let case = generate_two_node_case(42, &ov);
    let sol = solve_planning(&case, &SolverConfig::default()).unwrap();

    println!(
        "model: {} vars ({} binary), {} rows; wall {:.2}s",
        sol.num_vars, sol.num_binaries, sol.num_cons, sol.wall_time_s
    );
    println!("plan: {}", sol.plan.describe(&case));
    println!("tp = {:.4}", sol.tp);
    println!("sw = {:.4}", sol.sw);
    println!("participant benefits = {:.4}", sol.benefits);
    for y in &sol.per_year {
        println!(
            "year {}: S_L={:.3} S_G={:.3} MS={:.3} fee={:.3} cost={:.3}",
            y.year, y.s_l, y.s_g, y.ms, y.fee, y.cost
        );
    }
    println!("certificate pass = {}", sol.certificate.pass);
    println!(
        "envelope audit pass = {} (mu/M = {:.3}, lp gap = {:.3e})",
        sol.audit.pass, sol.audit.max_mu_over_m, sol.audit.lp_relative_gap
    );
}
