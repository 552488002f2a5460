#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use motionkit::formats::{parse_amc, parse_asf, AsfDocument};

static ASF: OnceLock<AsfDocument> = OnceLock::new();

fuzz_target!(|data: &[u8]| {
    let asf = ASF.get_or_init(|| parse_asf(include_str!("../../fixtures/asf/cmu_style.asf")).expect("fixture parses"));
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_amc(text, asf, None);
    }
});
