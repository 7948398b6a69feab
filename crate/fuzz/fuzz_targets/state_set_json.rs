#![no_main]

use gatefid::ReducedStateSet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(set) = ReducedStateSet::from_json(text) {
            let again = ReducedStateSet::from_json(&set.to_json().unwrap()).unwrap();
            assert_eq!(again.kind(), set.kind());
        }
    }
});
