#![no_main]

use libfuzzer_sys::fuzz_target;

// Checkpoints are re-read from disk; any accepted checkpoint must
// evaluate cleanly and survive a serialization round trip bit for bit.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(model) = cvkit::io::model_from_json(text) {
            let x = vec![0.25f64; model.input_dim()];
            let y = model.forward(&x);
            let back = cvkit::io::model_from_json(&cvkit::io::model_to_json(&model))
                .expect("serialized checkpoint must re-parse");
            let y2 = back.forward(&x);
            for (a, b) in y.iter().zip(&y2) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
});
