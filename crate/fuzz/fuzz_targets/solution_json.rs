//! Solution files written by `solve --solution`, checked against fixed instances.

#![no_main]
use libfuzzer_sys::fuzz_target;
use twosided::lp::LpSolution;
use twosided::Instance;

fuzz_target!(|data: &[u8]| {
    let Ok(sol) = serde_json::from_slice::<LpSolution>(data) else { return };
    for inst in [Instance::unit(), Instance::non_submodular_fixture()] {
        if sol.check(&inst, 1e-9).is_empty() {
            assert!(sol.recompute_objective(&inst).is_finite());
        }
    }
});
