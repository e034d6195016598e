#![no_main]

use libfuzzer_sys::fuzz_target;
use radial_grushin::profile::Profile;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(p) = s.parse::<Profile>() {
        let again: Profile = p.to_string().parse().expect("display output parses");
        assert_eq!(p, again);
    }
});
