#![no_main]

use libfuzzer_sys::fuzz_target;
use motionkit::dataset::DatasetDescriptor;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = DatasetDescriptor::from_toml_str(text);
    }
});
