#![no_main]

use libfuzzer_sys::fuzz_target;
use lstmcov::mutation::parse_variants;

fuzz_target!(|data: &[u8]| {
    if let Ok(vs) = parse_variants(data) {
        for v in &vs {
            let _ = v.validate();
            let _ = v.len();
        }
    }
});
