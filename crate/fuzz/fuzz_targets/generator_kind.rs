#![no_main]
use libfuzzer_sys::fuzz_target;
use twosided::GeneratorKind;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(kind) = text.parse::<GeneratorKind>() {
        assert_eq!(kind.name(), text);
    }
});
