mod common;

use common::small;
use esbrp_core::preprocess::{eliminate_arcs, refine};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// A surviving arc can be driven without missing the head's window,
    /// starting from the tail's earliest service.
    #[test]
    fn surviving_arcs_fit_the_windows(seed in any::<u64>()) {
        let inst = small(seed);
        let mask = eliminate_arcs(&inst);
        for k in inst.active_types() {
            for i in 0..inst.len() {
                for j in mask.successors(k, i) {
                    let (a, b) = (inst.node(i), inst.node(j));
                    prop_assert!(a.earliest + a.service_time + inst.time(i, j) <= b.latest + 1e-9);
                }
            }
        }
    }

    #[test]
    fn elimination_is_idempotent(seed in any::<u64>()) {
        let inst = small(seed);
        let mask = eliminate_arcs(&inst);
        let again = refine(&inst, &mask);
        for k in inst.active_types() {
            for i in 0..inst.len() {
                for j in 0..inst.len() {
                    prop_assert_eq!(again.allowed(k, i, j), mask.allowed(k, i, j));
                }
            }
        }
    }
}
