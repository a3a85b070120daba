//! Clears the wholesale market LP for a fixed expansion plan and prints
//! nodal prices, flows and the surplus split.
//!
//! Run with: cargo run --example clear_market

use gridreg::lp_market::{compute_surpluses, solve_wsm, ExpansionPlan};
use gridreg::network_model::{generate_two_node_case, TwoNodeOverrides};
use gridreg::solver::SolverConfig;

fn main() {
    let ov = TwoNodeOverrides { lump_stride: 50, ..Default::default() };
    let case = generate_two_node_case(42, &ov);
    let cfg = SolverConfig::default();

    // the case starts with zero capacity, so trade needs an expansion;
    // pick the largest lump in year 2
    let plan = ExpansionPlan::single(1, 2, case.lines[0].lumps.len() - 1);
    println!("plan: {}", plan.describe(&case));

    let outcome = solve_wsm(&case, &plan, &cfg).unwrap();
    print!("{}", outcome.prices_csv());
    print!("{}", outcome.flows_csv());

    let report = compute_surpluses(&case, &outcome);
    for y in &report.per_year {
        println!(
            "year {}: S_L={:.3} S_G={:.3} MS={:.3} (per period)",
            y.year, y.s_l, y.s_g, y.ms
        );
    }
}
