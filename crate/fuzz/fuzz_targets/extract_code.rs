#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|reply: &str| {
    if let Some(code) = testbench::generation::extract_code(reply) {
        assert!(!code.trim().is_empty());
    }
});
