#![no_main]

use libfuzzer_sys::fuzz_target;
use lstmcov::mutation::substitution_table_from_slice;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = substitution_table_from_slice(data) {
        assert!(table.values().all(|v| !v.is_empty()));
    }
});
