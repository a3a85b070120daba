//! Property tests: generator validity across seeds, case round-trips,
//! capacity monotonicity and certificate behaviour on random inputs.

use proptest::prelude::*;

use gridreg::duality::certify;
use gridreg::lp_market::{solve_wsm, ExpansionPlan, Selection};
use gridreg::network_model::{
    generate_garver_case, generate_two_node_case, load_case, save_case, GarverOverrides,
    TwoNodeOverrides,
};
use gridreg::solver::SolverConfig;

fn small_two_node(seed: u64) -> gridreg::network_model::CaseStudy {
    let ov = TwoNodeOverrides {
        agents_per_side: 6,
        lump_stride: 100,
        ..Default::default()
    };
    generate_two_node_case(seed, &ov)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_two_node_cases_validate(seed in any::<u64>()) {
        let case = generate_two_node_case(seed, &TwoNodeOverrides {
            lump_stride: 50,
            ..Default::default()
        });
        prop_assert!(case.validate().is_ok());
    }

    #[test]
    fn generated_garver_cases_validate(seed in any::<u64>()) {
        let case = generate_garver_case(seed, &GarverOverrides {
            agents_per_node: 5,
            lump_stride: 100,
            ..Default::default()
        });
        prop_assert!(case.validate().is_ok());
    }

    #[test]
    fn case_files_round_trip(seed in any::<u64>()) {
        let case = small_two_node(seed);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("case.json");
        save_case(&case, &path).unwrap();
        let reloaded = load_case(&path).unwrap();
        let a = serde_json::to_string(&case).unwrap();
        let b = serde_json::to_string(&reloaded).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    // these run LP solves, keep the case count low
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn added_capacity_never_reduces_welfare(seed in 0u64..1000, lump_a in 0usize..4, lump_b in 0usize..4) {
        let case = small_two_node(seed);
        let cfg = SolverConfig::default();
        let (small, large) = (lump_a.min(lump_b), lump_a.max(lump_b));
        let w_small = solve_wsm(&case, &ExpansionPlan::single(1, 2, small), &cfg).unwrap().objective;
        let w_large = solve_wsm(&case, &ExpansionPlan::single(1, 2, large), &cfg).unwrap().objective;
        prop_assert!(w_large >= w_small - 1e-6 * (1.0 + w_small.abs()));
    }

    #[test]
    fn lp_solutions_certify(seed in 0u64..1000, build in proptest::bool::ANY, lump in 0usize..4) {
        let case = small_two_node(seed);
        let plan = if build {
            ExpansionPlan { selections: vec![Selection { line: 1, year: 2, lump_index: lump }] }
        } else {
            ExpansionPlan::empty()
        };
        let outcome = solve_wsm(&case, &plan, &SolverConfig::default()).unwrap();
        let cert = certify(&case, &plan, &outcome);
        prop_assert!(cert.pass, "certificate failed: {:?}", cert);
    }

    #[test]
    fn both_backends_agree_on_welfare(seed in 0u64..1000) {
        let case = small_two_node(seed);
        let plan = ExpansionPlan::single(1, 2, 3);
        let highs = solve_wsm(&case, &plan, &SolverConfig::default()).unwrap();
        let clarabel_cfg = SolverConfig { backend: "clarabel".into(), ..Default::default() };
        let clarabel = solve_wsm(&case, &plan, &clarabel_cfg).unwrap();
        let scale = 1.0 + highs.objective.abs();
        prop_assert!((highs.objective - clarabel.objective).abs() / scale <= 1e-6);
    }
}
