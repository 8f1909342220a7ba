#![no_main]

use libfuzzer_sys::fuzz_target;

// Dataset CSV import is strict: every accepted file must re-export to a
// byte-identical CSV (shortest round-trip float formatting).
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(points) = cvkit::io::parse_dataset_csv(text) {
            let out = cvkit::io::dataset_to_csv(&points);
            let again = cvkit::io::parse_dataset_csv(&out).expect("exported CSV must re-parse");
            assert_eq!(points.len(), again.len());
            for (a, b) in points.iter().zip(&again) {
                assert_eq!(a[0].to_bits(), b[0].to_bits());
                assert_eq!(a[1].to_bits(), b[1].to_bits());
            }
        }
    }
});
