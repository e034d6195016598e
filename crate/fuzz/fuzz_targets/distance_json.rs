#![no_main]

use libfuzzer_sys::fuzz_target;
use radial_grushin::export::{from_json, to_json};
use radial_grushin::singular_synthesis::DistanceResult;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(d) = from_json::<DistanceResult>(s) {
        let text = to_json(&d);
        let again: DistanceResult = from_json(&text).unwrap();
        assert_eq!(to_json(&again), text);
    }
});
