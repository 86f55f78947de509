#![no_main]

use libfuzzer_sys::fuzz_target;
use yfree::certio::{parse_certificate, serialize_certificate};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cert) = parse_certificate(text) {
            let canon = serialize_certificate(&cert);
            let back = parse_certificate(&canon).expect("canonical text parses");
            assert_eq!(back, cert);
        }
    }
});
