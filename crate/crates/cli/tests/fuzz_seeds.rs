//! Replays the checked-in fuzz corpus through the same round-trip checks as the fuzz targets.

use std::path::PathBuf;

use grushin_cli::RunConfig;
use radial_grushin::export::{from_json, parse_point, read_csv, to_csv, to_json, TrajectoryRow};
use radial_grushin::profile::Profile;
use radial_grushin::singular_synthesis::DistanceResult;

fn seeds(target: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    assert!(!paths.is_empty());
    paths.iter().map(|p| std::fs::read_to_string(p).unwrap()).collect()
}

/// Returns how many seeds were accepted by the parser.
fn replay(target: &str, check: impl Fn(&str) -> bool) -> usize {
    seeds(target).iter().filter(|s| check(s)).count()
}

#[test]
fn profile_spec_seeds() {
    let ok = replay("profile_spec", |s| match s.parse::<Profile>() {
        Ok(p) => {
            assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
            true
        }
        Err(_) => false,
    });
    assert!(ok >= 4);
}

#[test]
fn point_list_seeds() {
    let ok = replay("point_list", |s| match parse_point(s) {
        Ok(p) => {
            assert!(p.iter().all(|v| v.is_finite()));
            assert_eq!(parse_point(&format!("{:?},{:?},{:?}", p[0], p[1], p[2])).unwrap(), p);
            true
        }
        Err(_) => false,
    });
    assert_eq!(ok, 4);
}

#[test]
fn run_config_seeds() {
    let ok = replay("run_config", |s| match RunConfig::parse(s) {
        Ok(cfg) => {
            let _ = cfg.to_argv();
            true
        }
        Err(_) => false,
    });
    assert!(ok >= 2);
}

#[test]
fn distance_json_seeds() {
    let ok = replay("distance_json", |s| match from_json::<DistanceResult>(s) {
        Ok(d) => {
            let text = to_json(&d);
            assert_eq!(to_json(&from_json::<DistanceResult>(&text).unwrap()), text);
            true
        }
        Err(_) => false,
    });
    assert!(ok >= 2);
}

#[test]
fn trajectory_csv_seeds() {
    let ok = replay("trajectory_csv", |s| match read_csv::<TrajectoryRow>(s) {
        Ok(rows) => {
            let text = to_csv(&rows);
            assert_eq!(to_csv(&read_csv::<TrajectoryRow>(&text).unwrap()), text);
            true
        }
        Err(_) => false,
    });
    assert!(ok >= 2);
}
