#![no_main]

use jetcalc_cli::{Options, Plan, ProblemFile};
use libfuzzer_sys::fuzz_target;

// Validation only: solver tasks can be arbitrarily expensive.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = ProblemFile::from_json(text) {
        let _ = Plan::compile(&file, &Options::default());
    }
});
