#![no_main]

use blasius_nitm::cli::report::{read_study, read_study_csv, read_study_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = read_study_csv(text);
        let _ = read_study_json(text);
        if let Ok(doc) = read_study(text) {
            if let Ok(study) = doc.to_study() {
                let _ = blasius_nitm::extrapolate(&study, 3.0);
            }
        }
    }
});
