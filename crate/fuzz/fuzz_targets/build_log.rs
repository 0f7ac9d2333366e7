#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|log: &str| {
    let _ = testbench::execution::parse_build_log(log);
});
