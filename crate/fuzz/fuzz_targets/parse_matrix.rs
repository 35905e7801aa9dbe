#![no_main]

use covsel::io::{parse_dense_limited, parse_matrix_limited, parse_matrix_market_limited};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let picked = parse_matrix_limited(text, 64);
    // Format detection must agree with exactly one of the specific readers.
    let dense = parse_dense_limited(text, 64);
    let mm = parse_matrix_market_limited(text, 64);
    if let Ok(m) = &picked {
        assert!(dense.as_ref() == Ok(m) || mm.as_ref() == Ok(m));
    } else {
        assert!(dense.is_err() || text.trim_start().starts_with("%%MatrixMarket"));
    }
});
