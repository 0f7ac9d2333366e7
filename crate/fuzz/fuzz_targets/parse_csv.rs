#![no_main]

use libfuzzer_sys::fuzz_target;
use testbench::reporting::{parse_csv, render_csv};

fuzz_target!(|text: &str| {
    if let Ok(rows) = parse_csv(text) {
        assert_eq!(parse_csv(&render_csv(&rows)).expect("rendered csv parses"), rows);
    }
});
