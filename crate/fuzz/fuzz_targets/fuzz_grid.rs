#![no_main]

use libfuzzer_sys::fuzz_target;
use quaddiag::experiment::parse_grid;

fuzz_target!(|text: &str| {
    if let Ok(grid) = parse_grid(text) {
        assert!(!grid.is_empty());
        assert!(grid[0] >= 1);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }
});
