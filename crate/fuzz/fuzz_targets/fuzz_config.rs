#![no_main]

use libfuzzer_sys::fuzz_target;

// Experiment configurations come from user-supplied JSON files; parsing
// plus validation must reject anything malformed without panicking.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = cvkit::config::ExperimentConfig::from_json_str(text);
    }
});
