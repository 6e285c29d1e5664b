#![no_main]

use libfuzzer_sys::fuzz_target;
use swipt_core::experiment::{parse_results_csv, write_results};

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = parse_results_csv(data) {
        let mut out = Vec::new();
        write_results(&table, &mut out).unwrap();
        let again = parse_results_csv(out.as_slice()).unwrap();
        let _ = again.summarize();
    }
});
