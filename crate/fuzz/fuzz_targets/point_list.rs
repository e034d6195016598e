#![no_main]

use libfuzzer_sys::fuzz_target;
use radial_grushin::export::parse_point;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_point(s) {
        assert!(p.iter().all(|v| v.is_finite()));
        let text = format!("{:?},{:?},{:?}", p[0], p[1], p[2]);
        assert_eq!(parse_point(&text).unwrap(), p);
    }
});
