#![no_main]

use libfuzzer_sys::fuzz_target;
use lstmcov::io::{labeled_inputs_from_slice, labeled_inputs_to_string};

fuzz_target!(|data: &[u8]| {
    let Ok(items) = labeled_inputs_from_slice(data) else { return };
    for item in &items {
        item.input.validate().unwrap();
        let _ = item.input.distance(&item.input);
    }
    let text = labeled_inputs_to_string(&items);
    assert_eq!(labeled_inputs_from_slice(text.as_bytes()).unwrap().len(), items.len());
});
