//! Bit-stable CSV and JSON exports and their readers.
//!
//! CSV floats are written with 17 significant digits (`{:.16e}`), so every
//! value survives a round trip exactly. JSON uses the shortest round-trip
//! representation; fields that may be infinite go through [`extended_f64`].

use std::io::Write;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::{PlanarState, State3D};
use crate::error::{GrushinError, Result};
use crate::grushin_r::FanSample;
use crate::profile::Profile;
use crate::riemannian::CylindricalSample;
use crate::singular_synthesis::{BoundaryPoint, MeshPoint};

/// A row type with a fixed CSV schema of float columns.
pub trait CsvRecord: Sized {
    const HEADER: &'static [&'static str];
    fn values(&self) -> Vec<f64>;
    fn from_values(v: &[f64]) -> Self;
}

macro_rules! csv_record {
    ($ty:ident { $($field:ident : $name:literal),+ $(,)? }) => {
        impl CsvRecord for $ty {
            const HEADER: &'static [&'static str] = &[$($name),+];
            fn values(&self) -> Vec<f64> {
                vec![$(self.$field),+]
            }
            fn from_values(v: &[f64]) -> Self {
                let mut it = v.iter().copied();
                $ty { $($field: it.next().unwrap()),+ }
            }
        }
    };
}

/// A trajectory sample with its conserved quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub u: f64,
    pub v: f64,
    pub w0: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

impl TrajectoryRow {
    pub fn new(t: f64, s: &State3D, profile: &Profile) -> Self {
        TrajectoryRow {
            t,
            x: s.x,
            y: s.y,
            z: s.z,
            u: s.u,
            v: s.v,
            w0: s.w0,
            h: s.hamiltonian(profile),
            k: s.k(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarRow {
    pub t: f64,
    pub rho: f64,
    pub rhodot: f64,
    pub z: f64,
}

impl PlanarRow {
    pub fn new(t: f64, s: &PlanarState) -> Self {
        PlanarRow {
            t,
            rho: s.rho,
            rhodot: s.rhodot,
            z: s.z,
        }
    }
}

csv_record!(TrajectoryRow { t: "t", x: "x", y: "y", z: "z", u: "u", v: "v", w0: "w0", h: "H", k: "K" });
csv_record!(PlanarRow { t: "t", rho: "rho", rhodot: "rhodot", z: "z" });
csv_record!(CylindricalSample { t: "t", r: "r", theta: "theta", z: "z", rdot: "rdot" });
csv_record!(BoundaryPoint { w0: "w0", t: "t", rho: "rho", z: "z" });
csv_record!(MeshPoint { theta: "theta", w0: "w0", x: "x", y: "y", z: "z" });
csv_record!(FanSample { w0: "w0", phi: "phi", t: "t", x: "x", y: "y", z: "z" });

fn io_err(e: impl std::fmt::Display) -> GrushinError {
    GrushinError::input(format!("export: {e}"))
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<T: CsvRecord, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(T::HEADER).map_err(io_err)?;
    for row in rows {
        w.write_record(row.values().into_iter().map(format_float)).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn to_csv<T: CsvRecord>(rows: &[T]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Parses a CSV export, requiring the exact header of `T`.
pub fn read_csv<T: CsvRecord>(text: &str) -> Result<Vec<T>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header = rd.headers().map_err(io_err)?;
    if !header.iter().eq(T::HEADER.iter().copied()) {
        return Err(GrushinError::input(format!(
            "CSV header {:?} does not match {:?}",
            header.iter().collect::<Vec<_>>(),
            T::HEADER
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| GrushinError::input(format!("CSV row {}: {e}", i + 1)))?;
        if vals.len() != T::HEADER.len() {
            return Err(GrushinError::input(format!("CSV row {} has {} fields", i + 1, vals.len())));
        }
        rows.push(T::from_values(&vals));
    }
    Ok(rows)
}

pub fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("export types serialize infallibly")
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| GrushinError::input(format!("JSON: {e}")))
}

/// Parses exactly `n` comma-separated finite floats, e.g. `"1,0,-0.5"`.
pub fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>> {
    let vals = s
        .split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<f64>()
                .map_err(|_| GrushinError::input(format!("'{p}' is not a number")))
                .and_then(|v| {
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(GrushinError::input(format!("'{p}' is not finite")))
                    }
                })
        })
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != n {
        return Err(GrushinError::input(format!(
            "expected {n} comma-separated values, got {} in '{s}'",
            vals.len()
        )));
    }
    Ok(vals)
}

pub fn parse_point(s: &str) -> Result<[f64; 3]> {
    let v = parse_floats(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

/// Serde adapter writing non-finite floats as the strings `"inf"`, `"-inf"`
/// and `"nan"`, which plain JSON numbers cannot express.
pub mod extended_f64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct ExtVisitor;

    impl Visitor<'_> for ExtVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtVisitor)
    }
}
