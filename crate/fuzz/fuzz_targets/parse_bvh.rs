#![no_main]

use libfuzzer_sys::fuzz_target;
use motionkit::formats::{parse_bvh, write_bvh};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(clip) = parse_bvh(text) {
        // anything we accept must survive our own writer
        parse_bvh(&write_bvh(&clip)).expect("written BVH parses");
    }
});
