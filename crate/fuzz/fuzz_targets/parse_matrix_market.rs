#![no_main]

use covsel::io::{format_matrix_market, parse_matrix_market_limited};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_matrix_market_limited(text, 64) {
        let back = parse_matrix_market_limited(&format_matrix_market(&m), 64).expect("reparse");
        assert_eq!(back, m);
    }
});
