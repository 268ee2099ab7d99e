//! Plain-text snapshot files:
//!
//! ```text
//! # levy-ns field v1, n=<n>, theta=<theta>, t=<time>
//! j,kx,ky,phase,lambda,a_j
//! ```
//!
//! with one row per mode and floats written with 17 significant digits.

use std::io::{BufRead, Write};

use super::{Basis, Phase, SpectralError, SpectralField};

pub const SNAPSHOT_MAGIC: &str = "# levy-ns field v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: SpectralField,
    pub theta: f64,
    pub time: f64,
}

pub fn write_snapshot<W: Write>(mut w: W, field: &SpectralField, theta: f64, time: f64) -> std::io::Result<()> {
    writeln!(w, "{SNAPSHOT_MAGIC}, n={}, theta={theta}, t={time}", field.len())?;
    for (mode, a) in field.basis().modes().iter().zip(field.coeffs()) {
        writeln!(
            w,
            "{},{},{},{},{:.16e},{:.16e}",
            mode.index,
            mode.wave.kx,
            mode.wave.ky,
            mode.phase.code(),
            mode.eigenvalue,
            a
        )?;
    }
    Ok(())
}

fn header_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    header.split(", ").find_map(|part| part.strip_prefix(key)?.strip_prefix('='))
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<Snapshot, SpectralError> {
    let bad = |line: usize, msg: &str| SpectralError::Snapshot { line, message: msg.to_string() };
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty file"))?.map_err(|e| bad(1, &e.to_string()))?;
    if !header.starts_with(SNAPSHOT_MAGIC) {
        return Err(bad(1, "missing snapshot header"));
    }
    let parse = |key: &str| -> Result<f64, SpectralError> {
        header_value(&header, key)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(1, &format!("missing or invalid `{key}`")))
    };
    let n = parse("n")? as usize;
    let theta = parse("theta")?;
    let time = parse("t")?;
    let basis = Basis::new(n)?;
    let mut coeffs = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| bad(lineno, &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(bad(lineno, "expected 6 columns"));
        }
        let j: usize = cols[0].parse().map_err(|_| bad(lineno, "bad index"))?;
        let kx: i64 = cols[1].parse().map_err(|_| bad(lineno, "bad kx"))?;
        let ky: i64 = cols[2].parse().map_err(|_| bad(lineno, "bad ky"))?;
        let phase = Phase::from_code(cols[3]).ok_or_else(|| bad(lineno, "bad phase"))?;
        let a: f64 = cols[5].parse().map_err(|_| bad(lineno, "bad coefficient"))?;
        if j != coeffs.len() + 1 || j > n {
            return Err(bad(lineno, "mode index out of sequence"));
        }
        let mode = basis.mode(j);
        if (mode.wave.kx, mode.wave.ky, mode.phase) != (kx, ky, phase) {
            return Err(bad(lineno, "mode does not match the canonical basis ordering"));
        }
        coeffs.push(a);
    }
    if coeffs.len() != n {
        return Err(bad(n + 1, "truncated snapshot"));
    }
    Ok(Snapshot { field: SpectralField::from_coeffs(basis, coeffs)?, theta, time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_row_layout() {
        let b = Basis::new(2).unwrap();
        let u = SpectralField::from_coeffs(b, vec![0.1, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &u, 1.0, 0.5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# levy-ns field v1, n=2, theta=1, t=0.5");
        assert_eq!(
            lines.next().unwrap(),
            "1,0,1,c,3.9478417604357432e1,1.0000000000000001e-1"
        );
        assert_eq!(lines.next().unwrap(), "2,0,1,s,3.9478417604357432e1,-2.0000000000000000e0");
    }

    #[test]
    fn rejects_misordered_rows() {
        let text = "# levy-ns field v1, n=1, theta=1, t=0\n1,1,0,c,1,1\n";
        assert!(read_snapshot(text.as_bytes()).is_err());
        assert!(read_snapshot("nonsense\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(coeffs in proptest::collection::vec(-1e6f64..1e6, 1..40), t in 0.0f64..100.0) {
            let b = Basis::new(coeffs.len()).unwrap();
            let u = SpectralField::from_coeffs(b, coeffs).unwrap();
            let mut buf = Vec::new();
            write_snapshot(&mut buf, &u, 0.7, t).unwrap();
            let s = read_snapshot(buf.as_slice()).unwrap();
            prop_assert_eq!(s.field, u);
            prop_assert_eq!(s.time, t);
            prop_assert_eq!(s.theta, 0.7);
        }
    }
}
