#![no_main]

use lattice_approx::experiments::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<ExperimentConfig>(data) {
        let _ = cfg.validate();
        let json = serde_json::to_string(&cfg).expect("config serializes");
        let again: ExperimentConfig = serde_json::from_str(&json).expect("serialized config parses");
        assert_eq!(again, cfg);
    }
});
