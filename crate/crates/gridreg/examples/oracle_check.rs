//! Cross-checks the MILP against brute-force enumeration on a small
//! case and prints the per-plan table.
//!
//! Run with: cargo run --example oracle_check

use gridreg::milp::solve_planning;
use gridreg::network_model::{generate_two_node_case, TwoNodeOverrides};
use gridreg::oracle::{brute_force, per_plan_table};
use gridreg::solver::SolverConfig;

fn main() {
    // coarse menu keeps the enumeration tiny: 8 lumps, 1 buildable year
    let ov = TwoNodeOverrides { lump_stride: 50, ..Default::default() };
    let case = generate_two_node_case(42, &ov);
    let cfg = SolverConfig::default();

    let milp = solve_planning(&case, &cfg).unwrap();
    let oracle = brute_force(&case, &cfg, 10_000).unwrap();

    println!("milp   tp = {:.6}  plan: {}", milp.tp, milp.plan.describe(&case));
    println!(
        "oracle tp = {:.6}  plan: {}",
        oracle.best.metrics.tp,
        oracle.best.plan.describe(&case)
    );
    let delta = (milp.tp - oracle.best.metrics.tp).abs() / (1.0 + oracle.best.metrics.tp.abs());
    println!("relative delta = {delta:.3e}, degenerate = {}", oracle.degenerate);
    println!();
    print!("{}", per_plan_table(&case, &oracle));
}
