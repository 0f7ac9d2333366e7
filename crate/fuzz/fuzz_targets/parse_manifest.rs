#![no_main]

use libfuzzer_sys::fuzz_target;
use testbench::corpus::{parse_corpus, parse_manifest, render_manifest};

fuzz_target!(|text: &str| {
    if let Ok(manifest) = parse_manifest(text) {
        let rendered = render_manifest(&manifest);
        assert_eq!(parse_manifest(&rendered).expect("rendered manifest parses"), manifest);
    }
    let _ = parse_corpus(text);
});
