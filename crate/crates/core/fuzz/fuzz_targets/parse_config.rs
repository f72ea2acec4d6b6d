#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // accepted configs must survive validation twice
        if let Ok(c) = njsm::cli_io::parse_config_str(text) {
            c.validate().expect("parsed config failed validation");
        }
    }
});
