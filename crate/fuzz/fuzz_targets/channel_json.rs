#![no_main]

use gatefid::QuantumChannel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ch) = QuantumChannel::from_json(text) {
            // Anything accepted must serialize and parse back.
            let again = QuantumChannel::from_json(&ch.to_json().unwrap()).unwrap();
            assert_eq!(again.dim(), ch.dim());
        }
    }
});
