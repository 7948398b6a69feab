#![no_main]

use gatefid::experiment::{read_records_csv, write_records_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_records_csv(data) {
        if records.is_empty() {
            return;
        }
        let mut buf = Vec::new();
        if write_records_csv(&records, &mut buf).is_ok() {
            assert_eq!(read_records_csv(buf.as_slice()).unwrap(), records);
        }
    }
});
