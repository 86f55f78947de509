#![no_main]

use libfuzzer_sys::fuzz_target;
use yfree::pattern::PosetPattern;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(patterns) = PosetPattern::parse_spec_list(text) {
            for p in &patterns {
                p.validate().expect("constructed patterns are strict orders");
                assert_eq!(p.dual().dual(), *p);
            }
        }
    }
});
