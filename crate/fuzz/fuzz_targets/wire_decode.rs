#![no_main]

use libfuzzer_sys::fuzz_target;
use motionkit::protocol::{decode, session_step, SessionState};

fuzz_target!(|data: &[u8]| {
    let mut state = SessionState::default();
    for line in data.split(|b| *b == b'\n') {
        if let Ok(m) = decode(line) {
            state = session_step(state, &m).0;
        }
    }
});
