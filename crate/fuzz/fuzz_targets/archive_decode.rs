#![no_main]

use fasris::archive::decode;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(arch) = decode(text) {
        assert_eq!(decode(&arch.encode()).expect("re-encoded archive decodes"), arch);
    }
});
