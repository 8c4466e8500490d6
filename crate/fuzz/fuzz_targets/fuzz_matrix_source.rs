#![no_main]

use libfuzzer_sys::fuzz_target;
use quaddiag::MatrixSource;

fuzz_target!(|text: &str| {
    if let Ok(source) = text.parse::<MatrixSource>() {
        // Display must round-trip through the parser.
        let again: MatrixSource = source.to_string().parse().unwrap();
        assert_eq!(again.to_string(), source.to_string());
        let _ = source.id();
    }
});
