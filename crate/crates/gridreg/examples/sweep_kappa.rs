//! Sweeps the incentive parameter kappa over a grid and prints the
//! metrics CSV plus the three-row summary.
//!
//! Run with: cargo run --example sweep_kappa

use gridreg::analysis::{emit_report, parse_grid, summary_block, sweep_kappa};
use gridreg::network_model::{generate_two_node_case, TwoNodeOverrides};
use gridreg::solver::SolverConfig;

fn main() {
    let ov = TwoNodeOverrides { lump_stride: 50, ..Default::default() };
    let case = generate_two_node_case(42, &ov);
    let grid = parse_grid("0:1:0.25").unwrap();
    let table = sweep_kappa(&case, &grid, &SolverConfig::default(), 0).unwrap();
    print!("{}", emit_report(&case, &table));
    println!();
    print!("{}", summary_block(&table).unwrap());
}
