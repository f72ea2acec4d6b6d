#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = njsm::cli_io::read_trajectory_binary(data) {
        for s in &t.samples {
            let _ = t.state(s);
        }
    }
});
