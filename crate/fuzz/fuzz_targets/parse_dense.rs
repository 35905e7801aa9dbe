#![no_main]

use covsel::io::{format_dense, parse_dense_limited};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Accepted input must survive a write/read cycle unchanged.
    if let Ok(m) = parse_dense_limited(text, 64) {
        let back = parse_dense_limited(&format_dense(&m), 64).expect("reparse");
        assert_eq!(back, m);
    }
});
