#![no_main]

use libfuzzer_sys::fuzz_target;
use yfree::lattice::{parse_family, serialize_family};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(fam) = parse_family(text) {
            // anything that parses must round-trip bit-exactly
            let canon = serialize_family(&fam);
            let back = parse_family(&canon).expect("canonical text parses");
            assert_eq!(back, fam);
        }
    }
});
