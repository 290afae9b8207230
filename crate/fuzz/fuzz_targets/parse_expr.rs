#![no_main]

use jetcalc_engine::jetalg::{parse, render, JetSpace};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let space = JetSpace::simple(&["x", "t"], &["u", "v"], &["sigma"]).unwrap();
    if let Ok(e) = parse(text, &space) {
        let again = parse(&render(&e, &space), &space).expect("rendered expressions parse");
        assert_eq!(again, e);
    }
});
