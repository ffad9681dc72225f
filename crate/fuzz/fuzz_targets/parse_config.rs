#![no_main]

use blasius_nitm::cli::config::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            // Every accepted file must turn into well-formed long flags.
            for arg in cfg.to_args() {
                assert!(arg.starts_with("--"));
            }
        }
    }
});
