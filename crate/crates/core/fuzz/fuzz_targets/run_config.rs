#![no_main]

use libfuzzer_sys::fuzz_target;
use lstmcov::cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(cfg) = RunConfig::from_slice(data) else { return };
    let _ = cfg.fuzz.validate();
    let _ = cfg.mutation.validate();
    let _ = cfg.threshold_config().validate(28);
});
