#![no_main]

use fndepth::experiment::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = ExperimentConfig::from_json(text) else {
        return;
    };
    let encoded = serde_json::to_string(&config).expect("serializing a valid config");
    let again = ExperimentConfig::from_json(&encoded).expect("re-parsing a serialized config");
    assert_eq!(again, config);
});
