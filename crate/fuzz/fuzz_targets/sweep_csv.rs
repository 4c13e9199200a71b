#![no_main]

use fasris::experiments::read_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = read_csv(data) {
        let text = table.to_csv_string();
        let again = read_csv(text.as_bytes()).expect("written table parses");
        assert_eq!(again.to_csv_string(), text);
    }
});
