#![no_main]

use libfuzzer_sys::fuzz_target;
use sketchproj::io::{format_matrix_market, parse_matrix_market};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(a) = parse_matrix_market(text) {
        // Anything accepted must survive a write/read round trip.
        let again =
            parse_matrix_market(&format_matrix_market(&a)).expect("re-parse of written matrix");
        assert_eq!(a, again);
    }
});
