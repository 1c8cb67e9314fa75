#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = factor_repro::io::parse_data_csv(text) {
        assert!(m.nrows() > 0 && m.ncols() > 0);
        assert!(m.iter().all(|v| v.is_finite()));
        if m.nrows() > 1 {
            let _ = factor_repro::efa::correlation_from_values(&m);
        }
    }
});
