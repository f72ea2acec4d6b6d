#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = njsm::cli_io::read_ndjson(&String::from_utf8_lossy(data));
});
