#![no_main]

use libfuzzer_sys::fuzz_target;
use testbench::execution::parse_coverage_report;

fuzz_target!(|xml: &str| {
    if let Ok(m) = parse_coverage_report(xml, "com.example.Adder") {
        for c in [m.instruction, m.branch, m.line, m.method] {
            assert!((0.0..=1.0).contains(&c.ratio));
        }
    }
});
