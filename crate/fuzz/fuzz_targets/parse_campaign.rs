#![no_main]

use libfuzzer_sys::fuzz_target;
use testbench::prompting::{parse_campaign, serialize_campaign};

fuzz_target!(|text: &str| {
    if let Ok(config) = parse_campaign(text) {
        let again = parse_campaign(&serialize_campaign(&config)).expect("serialized config parses");
        assert_eq!(again, config);
    }
});
