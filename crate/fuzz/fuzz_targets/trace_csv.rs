#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(trace) = snmf::io::parse_trace_csv(text, "fuzz") {
        let again = snmf::io::parse_trace_csv(&snmf::io::trace_to_csv(&trace), "fuzz")
            .expect("serialized trace must reparse");
        assert_eq!(trace, again);
    }
});
