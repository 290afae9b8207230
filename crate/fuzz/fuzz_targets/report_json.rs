#![no_main]

use jetcalc_cli::Report;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = serde_json::from_str::<Report>(text) {
        let back: Report = serde_json::from_str(&r.to_json()).expect("reports round-trip");
        assert_eq!(back, r);
    }
});
