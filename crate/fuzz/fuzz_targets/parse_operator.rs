#![no_main]

use jetcalc_engine::jetalg::{parse_operator, JetSpace};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let space = JetSpace::simple(&["x", "t"], &["u", "v"], &["sigma"]).unwrap();
    let _ = parse_operator(text, &space);
});
