#![no_main]

use infobound::channels::Channel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(ch) = Channel::from_json(text) else { return };
    // Anything accepted must survive a roundtrip unchanged.
    let again = Channel::from_json(&ch.to_json()).expect("reparse of emitted channel");
    assert_eq!(again, ch);
});
