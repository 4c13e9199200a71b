#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = fasris::load_config(text) {
        // anything accepted must survive its own canonical form
        let again = fasris::load_config(&cfg.to_toml()).expect("canonical TOML reparses");
        assert_eq!(again.to_toml(), cfg.to_toml());
    }
});
