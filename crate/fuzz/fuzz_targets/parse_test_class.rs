#![no_main]

use libfuzzer_sys::fuzz_target;
use testbench::context::Framework;
use testbench::smells::{detect_smells, parse_test_class, FocalClass};

fuzz_target!(|source: &str| {
    for framework in [Framework::JUnit4, Framework::JUnit5, Framework::Unknown] {
        if let Ok(model) = parse_test_class(source, framework) {
            let profile = detect_smells(&model, &FocalClass::from_source(source));
            let methods = model.test_methods.len() as u32;
            for (i, v) in profile.values().into_iter().enumerate() {
                if !matches!(i, 2 | 17 | 18) {
                    assert!(v <= methods);
                }
            }
        }
    }
});
