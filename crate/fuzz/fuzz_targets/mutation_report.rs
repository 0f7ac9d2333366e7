#![no_main]

use libfuzzer_sys::fuzz_target;
use testbench::execution::parse_mutation_report;

fuzz_target!(|xml: &str| {
    if let Ok(m) = parse_mutation_report(xml, "com.example.Adder") {
        assert!(m.detected <= m.total_mutations);
        assert!((0.0..=1.0).contains(&m.ratio));
    }
});
