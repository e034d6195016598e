#![no_main]

use libfuzzer_sys::fuzz_target;
use radial_grushin::export::{read_csv, to_csv, TrajectoryRow};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = read_csv::<TrajectoryRow>(s) {
        let text = to_csv(&rows);
        let again: Vec<TrajectoryRow> = read_csv(&text).unwrap();
        assert_eq!(to_csv(&again), text);
    }
});
