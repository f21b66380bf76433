#![no_main]

use lattice_approx_cli::params::Params;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(p) = Params::from_toml(text) else { return };
    // Resolution must report errors, never panic.
    let _ = p.target();
    let _ = p.psi();
    let _ = p.schedule();
    let _ = p.sampler();
    let _ = p.window();
    if let Ok(n) = p.dim() {
        if n <= 64 {
            let _ = p.norm(n);
            let _ = p.ball_norm(n);
        }
    }
});
