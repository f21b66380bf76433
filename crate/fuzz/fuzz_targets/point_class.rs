#![no_main]

use lattice_approx::PointClass;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(x) = text.parse::<PointClass>() {
        let again: PointClass = x.to_string().parse().expect("printed form parses");
        assert_eq!(again, x);
    }
});
