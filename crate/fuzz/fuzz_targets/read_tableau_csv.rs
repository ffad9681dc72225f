#![no_main]

use blasius_nitm::cli::report::read_tableau_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = read_tableau_csv(text);
    }
});
