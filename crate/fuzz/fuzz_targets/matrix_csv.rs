#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = snmf::io::parse_matrix_csv(text, "fuzz") {
        // Anything that parses must survive a save/load round trip intact.
        let again = snmf::io::parse_matrix_csv(&snmf::io::matrix_to_csv(&m), "fuzz")
            .expect("serialized matrix must reparse");
        assert_eq!(m, again);
    }
});
