#![no_main]

use infobound::protocols::{ReplaySource, SampleSource};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(src) = ReplaySource::from_jsonl(text) else { return };
    let cap = src.capacity().expect("replay sources are finite");
    assert!(cap > 0 && src.dim() > 0);
    for p in 0..cap.min(16) {
        for j in 0..src.dim() {
            assert!(src.value(p, j).is_finite());
        }
    }
    let back = ReplaySource::from_jsonl(&src.to_jsonl()).expect("reparse of emitted records");
    assert_eq!(back.records(), src.records());
});
