#![no_main]

use libfuzzer_sys::fuzz_target;
use sketchproj_cli::parse_config_str;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_config_str(text);
    }
});
