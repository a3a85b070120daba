//! Generates the two seeded study cases and prints their shapes.
//!
//! Run with: cargo run --example generate_case

use gridreg::network_model::{
    generate_garver_case, generate_two_node_case, GarverOverrides, TwoNodeOverrides,
};

fn main() {
    let two_node = generate_two_node_case(42, &TwoNodeOverrides::default());
    println!(
        "two_node seed 42: {} nodes, {} lines, {} bids, {} lumps on line 1",
        two_node.nodes.len(),
        two_node.lines.len(),
        two_node.bids.len(),
        two_node.lines[0].lumps.len()
    );

    // desk-scale Garver variant: 20 agents per node, coarse lump menu
    let ov = GarverOverrides {
        agents_per_node: 20,
        lump_stride: 20,
        ..Default::default()
    };
    let garver = generate_garver_case(7, &ov);
    println!(
        "garver6 seed 7: {} nodes, {} lines, {} bids",
        garver.nodes.len(),
        garver.lines.len(),
        garver.bids.len()
    );
    for w in garver.warnings() {
        println!("warning: {w}");
    }

    let path = std::env::temp_dir().join("gridreg-two-node.json");
    gridreg::network_model::save_case(&two_node, &path).unwrap();
    println!("wrote {}", path.display());
}
