#![no_main]

use lattice_approx::haar::UnimodularMap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = UnimodularMap::from_text(text) {
        let again = UnimodularMap::from_text(&g.to_text()).expect("printed matrix parses");
        assert_eq!(again.dim(), g.dim());
    }
});
