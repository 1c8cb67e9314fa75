#![no_main]

use libfuzzer_sys::fuzz_target;

use factor_repro::config::{ConfigValues, KNOWN_KEYS};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ConfigValues::parse(text) else { return };
    for key in KNOWN_KEYS {
        let _ = cfg.get_usize_list(key);
        let _ = cfg.get_f64_list(key);
        let _ = cfg.get_bool(key);
        let _ = cfg.get::<u64>(key);
    }
});
