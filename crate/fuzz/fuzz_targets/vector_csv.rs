#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(v) = snmf::io::parse_vector_csv(text, "fuzz") {
        assert!(v.iter().all(|x| x.is_finite()));
    }
});
