#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let rank = 1 + (data[0] % 8) as usize;
    let dim = 2 + (data[1] % 64) as usize;
    let Ok(text) = std::str::from_utf8(&data[2..]) else {
        return;
    };
    if let Ok(cs) = snmf::io::parse_constraints_csv(text, "fuzz", rank, dim) {
        assert_eq!(cs.len(), rank);
        for c in &cs {
            assert!(c.alpha_lo() <= c.alpha_hi());
            assert!(c.dim() == dim);
        }
    }
});
