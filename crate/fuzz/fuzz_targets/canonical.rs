#![no_main]

use libfuzzer_sys::fuzz_target;
use motionkit::formats::{from_canonical, to_canonical};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(clip) = from_canonical(text) {
        assert_eq!(from_canonical(&to_canonical(&clip)).expect("re-encoded clip parses"), clip);
    }
});
