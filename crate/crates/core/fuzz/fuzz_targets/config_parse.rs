#![no_main]

use libfuzzer_sys::fuzz_target;
use swipt_core::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = text.parse::<ExperimentConfig>() {
        let _ = cfg.validate();
    }
});
