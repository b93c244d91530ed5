use offload_core::model::admissible_actions;
use offload_core::{build_problem, Discount, ModelParams};
use proptest::prelude::*;

#[test]
fn every_row_is_stochastic_at_sixty() {
    let configs = [(0.4, 8.0, 0.4), (0.8, 8.0, 0.4), (0.4, 8.0, 0.8), (0.4, 15.0, 0.4), (0.6, 10.0, 0.6)];
    for (rho, k, f) in configs {
        let p = ModelParams::from_utilization(rho, 1.0, k, f).unwrap();
        let kern = build_problem(&p, 60, Discount::Alpha(0.999)).unwrap();
        for id in 0..kern.num_states() {
            for row in kern.rows(id) {
                let total: f64 = row.prob.iter().sum();
                assert!((total - 1.0).abs() <= 1e-12, "row {id} {:?} sums to {total}", row.action);
                assert!(row.prob.iter().all(|&q| q > 0.0 && q <= 1.0));
            }
        }
        assert!(kern.max_row_error() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_cover_admissible_actions(
        rho in 0.05f64..0.99,
        k in 1.2f64..20.0,
        u in 0.01f64..0.99,
        n_max in 1u32..8,
    ) {
        let f = 1.0 / k + u * (0.95 - 1.0 / k);
        let p = ModelParams::from_utilization(rho, 1.0, k, f).unwrap();
        let kern = build_problem(&p, n_max, Discount::Alpha(0.99)).unwrap();
        let space = *kern.space();
        for id in 0..kern.num_states() {
            let s = space.state_of(id);
            let acts: Vec<_> = kern.rows(id).map(|r| r.action).collect();
            prop_assert_eq!(acts.len(), admissible_actions(s).len());
            for row in kern.rows(id) {
                prop_assert!(admissible_actions(s).contains(row.action));
                prop_assert!((row.prob.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(row.next.iter().all(|&j| (j as usize) < kern.num_states()));
                prop_assert!(row.cost >= 0.0);
            }
        }
    }
}
