mod common;

use common::small;
use esbrp_core::budget::Unlimited;
use esbrp_core::eval::ChargePolicy;
use esbrp_core::exact::solve_exact;
use esbrp_core::preprocess::eliminate_arcs;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Incumbents only improve as the search goes on, and the reported
    /// objective is the last one.
    #[test]
    fn incumbents_improve_monotonically(seed in any::<u64>()) {
        let inst = small(seed);
        let Ok(res) = solve_exact(&inst, &eliminate_arcs(&inst), ChargePolicy::Partial, &Unlimited) else { return Ok(()) };
        let trace = &res.incumbent_trace;
        prop_assert!(!trace.is_empty());
        for w in trace.windows(2) {
            prop_assert!(w[0].0 <= w[1].0);
            prop_assert!(w[1].1 <= w[0].1);
        }
        prop_assert!((trace.last().unwrap().1 - res.objective.total).abs() <= 1e-9);
        prop_assert!(res.lower_bound <= res.objective.total + 1e-9);
    }
}
