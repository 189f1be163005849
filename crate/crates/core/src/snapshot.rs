//! Field snapshot files.
//!
//! One header line `CHB-FIELD v1 nx ny lx ly name time`, followed by the
//! cell values in row-major order (`j` outer, `i` inner), either as ASCII
//! (one grid row per line) or as raw little-endian `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{ChbError, Result};
use crate::grid::{GridSpec, ScalarField};

const MAGIC: &str = "CHB-FIELD";
const VERSION: &str = "v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Ascii,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub time: f64,
    pub field: ScalarField,
}

pub fn encode(field: &ScalarField, name: &str, time: f64, encoding: Encoding) -> Result<Vec<u8>> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(ChbError::Snapshot(format!("invalid field name {name:?}")));
    }
    let g = field.grid();
    let mut out = format!(
        "{MAGIC} {VERSION} {} {} {:e} {:e} {name} {:e}\n",
        g.nx, g.ny, g.lx, g.ly, time
    )
    .into_bytes();
    match encoding {
        Encoding::Binary => {
            out.reserve(8 * g.num_cells());
            for v in field.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Encoding::Ascii => {
            for row in field.values().chunks(g.nx) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| ChbError::Snapshot("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| ChbError::Snapshot("header is not UTF-8".into()))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 8 || tok[0] != MAGIC || tok[1] != VERSION {
        return Err(ChbError::Snapshot(format!("bad header {header:?}")));
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| ChbError::Snapshot(format!("bad integer {s:?}")))
    };
    let parse_f64 = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| ChbError::Snapshot(format!("bad number {s:?}")))
    };
    let grid = GridSpec::new(
        parse_usize(tok[2])?,
        parse_usize(tok[3])?,
        parse_f64(tok[4])?,
        parse_f64(tok[5])?,
    )?;
    let name = tok[6].to_string();
    let time = parse_f64(tok[7])?;
    let body = &bytes[nl + 1..];
    let n = grid.num_cells();

    let values = match parse_ascii(body, n) {
        Some(v) => v,
        None if body.len() == 8 * n => body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
        None => {
            return Err(ChbError::Snapshot(format!(
                "body holds neither {n} ASCII values nor {} bytes",
                8 * n
            )))
        }
    };
    Ok(Snapshot {
        name,
        time,
        field: ScalarField::from_values(grid, values)?,
    })
}

fn parse_ascii(body: &[u8], n: usize) -> Option<Vec<f64>> {
    let text = std::str::from_utf8(body).ok()?;
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .ok()?;
    (values.len() == n).then_some(values)
}

pub fn write(
    path: &Path,
    field: &ScalarField,
    name: &str,
    time: f64,
    encoding: Encoding,
) -> Result<()> {
    let bytes = encode(field, name, time, encoding)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Snapshot> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(values: Vec<f64>) -> ScalarField {
        ScalarField::from_values(GridSpec::new(5, 4, 1.25, 3.0).unwrap(), values).unwrap()
    }

    #[test]
    fn header_layout() {
        let f = field((0..20).map(f64::from).collect());
        let bytes = encode(&f, "phi", 0.5, Encoding::Ascii).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, "CHB-FIELD v1 5 4 1.25e0 3e0 phi 5e-1");
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode(b"CHB-FIELD v2 4 4 1 1 x 0\n").is_err());
        assert!(decode(b"no newline").is_err());
        assert!(decode(b"CHB-FIELD v1 4 4 1 1 x 0\n1 2 3\n").is_err());
    }

    #[test]
    fn rejects_names_with_spaces() {
        let f = field(vec![0.0; 20]);
        assert!(encode(&f, "two words", 0.0, Encoding::Binary).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            values in prop::collection::vec(-1e300f64..1e300, 20),
            time in 0.0f64..1e6,
            binary in any::<bool>(),
        ) {
            let enc = if binary { Encoding::Binary } else { Encoding::Ascii };
            let f = field(values);
            let snap = decode(&encode(&f, "sigma", time, enc).unwrap()).unwrap();
            prop_assert_eq!(snap.name.as_str(), "sigma");
            prop_assert_eq!(snap.time.to_bits(), time.to_bits());
            for (a, b) in snap.field.values().iter().zip(f.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
