#![no_main]

use grushin_cli::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse(s) {
        // flags are re-parsed by clap, so only the conversion itself must not panic
        let _ = cfg.to_argv();
    }
});
