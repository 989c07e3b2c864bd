//! Instance files: parse, validate, and round-trip whatever is accepted.

#![no_main]
use libfuzzer_sys::fuzz_target;
use twosided::Instance;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(inst) = Instance::from_json(text) else { return };
    let back = Instance::from_json(&inst.to_json()).expect("written instance parses");
    assert_eq!(back, inst);
    let normalized = inst.normalize_revenues();
    assert!(normalized.max_revenue() <= 1.0);
    let _ = inst.detect_same_order();
});
