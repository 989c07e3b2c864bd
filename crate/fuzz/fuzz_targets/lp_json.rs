//! LP dumps written by `solve --dump-lp`: parse, then solve the small ones.

#![no_main]
use libfuzzer_sys::fuzz_target;
use twosided::simplex::{solve_lp, LpProblem, LpStatus};

fuzz_target!(|data: &[u8]| {
    let Ok(lp) = serde_json::from_slice::<LpProblem>(data) else { return };
    if lp.num_vars > 64 || lp.constraints.len() > 64 {
        return;
    }
    if let Ok(out) = solve_lp(&lp) {
        if out.status == LpStatus::Optimal {
            assert_eq!(out.x.len(), lp.num_vars);
            let (obj, _) = lp.evaluate(&out.x);
            assert!(obj.is_finite());
        }
    }
});
