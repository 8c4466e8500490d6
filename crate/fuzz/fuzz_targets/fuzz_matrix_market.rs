#![no_main]

//! Matrix Market reader. Anything that parses must also survive the
//! functionals the estimator relies on and a write/read round-trip.

use libfuzzer_sys::fuzz_target;
use quaddiag::mmio::MatrixMarketHeader;
use quaddiag::{parse_matrix_market, write_matrix_market};

fuzz_target!(|data: &[u8]| {
    if let Some(first) = data.split(|&b| b == b'\n').next() {
        if let Ok(line) = std::str::from_utf8(first) {
            let _ = MatrixMarketHeader::parse(line);
        }
    }

    let Ok(m) = parse_matrix_market(data) else {
        return;
    };
    if m.dim() > 64 {
        return;
    }
    let _ = m.trace();
    let _ = m.sym_frobenius_sq();
    let _ = m.cross_norms_sq();

    let mut buf = Vec::new();
    write_matrix_market(&m, &mut buf).unwrap();
    let back = parse_matrix_market(&buf).expect("writer output must parse");
    assert_eq!(back.dim(), m.dim());
});
