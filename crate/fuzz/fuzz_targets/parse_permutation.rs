#![no_main]

use libfuzzer_sys::fuzz_target;
use yfree::cyclic::CyclicPermutation;

// first line: n, rest: the permutation text
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Some((first, rest)) = text.split_once('\n') else {
        return;
    };
    let Ok(n) = first.trim().parse::<u32>() else {
        return;
    };
    if !(2..=63).contains(&n) {
        return;
    }
    if let Ok(pi) = CyclicPermutation::parse(n, rest) {
        let display = pi.to_string();
        let back = CyclicPermutation::parse(n, &display).expect("display form parses");
        assert_eq!(back, pi);
        let inv = pi.inverse();
        for p in 1..=n {
            assert_eq!(inv.apply(pi.apply(p)), p);
        }
    }
});
