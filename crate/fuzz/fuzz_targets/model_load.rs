#![no_main]

use libfuzzer_sys::fuzz_target;
use motionkit::models::Model;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Model::from_json(text) {
        assert_eq!(Model::from_json(&m.to_json()).expect("saved model loads"), m);
    }
});
