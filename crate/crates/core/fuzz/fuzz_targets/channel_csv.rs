#![no_main]

use libfuzzer_sys::fuzz_target;
use swipt_core::ChannelRealization;

fuzz_target!(|data: &[u8]| {
    if let Ok(ch) = ChannelRealization::read_csv(data) {
        // anything accepted must survive a write and re-read unchanged
        let mut out = Vec::new();
        ch.write_csv(&mut out).unwrap();
        assert_eq!(ChannelRealization::read_csv(out.as_slice()).unwrap(), ch);
    }
});
