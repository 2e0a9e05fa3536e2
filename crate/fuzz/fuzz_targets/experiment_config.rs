#![no_main]

use infobound::harness::ExperimentPlan;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for plan in [ExperimentPlan::from_toml_str(text), ExperimentPlan::from_json_str(text)].into_iter().flatten() {
        for cfg in &plan.experiments {
            assert!(cfg.validate().is_ok());
            let _ = cfg.family.mean();
        }
    }
});
