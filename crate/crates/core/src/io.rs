//! `.fld` field files and fixed-precision text formatting.
//!
//! A `.fld` file is one line of JSON `{"d":..,"theta":[..],"M":..}` terminated
//! by `\n`, followed by `(2M+1)^d` little-endian `(re, im)` pairs of `f64` in
//! the row-major box order of [`crate::torus::BoxIndexer`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::torus::{BoxIndexer, FrequencyField, TorusGeometry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub d: usize,
    pub theta: Vec<f64>,
    #[serde(rename = "M")]
    pub m: usize,
}

pub fn write_field<W: Write>(mut w: W, field: &FrequencyField) -> Result<()> {
    let header = FieldHeader {
        d: field.dim(),
        theta: field.geometry().theta().to_vec(),
        m: field.radius(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(16 * field.coeffs().len());
    for z in field.coeffs() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(r: R) -> Result<FrequencyField> {
    let mut reader = BufReader::new(r);
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format("missing header terminator".into()));
    }
    let header: FieldHeader = serde_json::from_slice(&line[..line.len() - 1])?;
    if header.theta.len() != header.d {
        return Err(Error::Format(format!("d = {} but {} theta values", header.d, header.theta.len())));
    }
    let geometry = TorusGeometry::new(header.theta)?;
    let len = BoxIndexer::new(header.d, header.m).len();
    let mut bytes = vec![0u8; 16 * len];
    reader
        .read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated coefficient payload: {e}")))?;
    let mut rest = [0u8; 1];
    if reader.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after coefficient payload".into()));
    }
    let coeffs = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    FrequencyField::from_coeffs(geometry, header.m, coeffs)
}

pub fn save_field(path: impl AsRef<Path>, field: &FrequencyField) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<FrequencyField> {
    read_field(std::fs::File::open(path)?)
}

/// Seventeen significant digits, the fixed format of every CSV value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_exact() {
        let g = TorusGeometry::new(vec![1.0, 0.5]).unwrap();
        let f = FrequencyField::character(g, 1, &[1, -1], Complex64::new(1.5, -2.0)).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let nl = buf.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(&buf[..nl], br#"{"d":2,"theta":[1.0,0.5],"M":1}"#);
        assert_eq!(buf.len() - nl - 1, 9 * 16);
        // k = (1, -1) is row 2, column 0 of the 3x3 box
        let off = nl + 1 + 16 * 6;
        assert_eq!(f64::from_le_bytes(buf[off..off + 8].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap()), -2.0);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(read_field(&b"{\"d\":1,\"theta\":[1.0],\"M\":0}"[..]).is_err());
        assert!(read_field(&b"{\"d\":1,\"theta\":[1.0],\"M\":0}\n0123"[..]).is_err());
        assert!(read_field(&b"{\"d\":2,\"theta\":[1.0],\"M\":0}\n0123456789abcdef"[..]).is_err());
        let mut ok = b"{\"d\":1,\"theta\":[1.0],\"M\":0}\n".to_vec();
        ok.extend_from_slice(&[0u8; 16]);
        assert!(read_field(&ok[..]).is_ok());
        ok.push(0);
        assert!(read_field(&ok[..]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(vals in prop::collection::vec(any::<(f64, f64)>(), 25)) {
            let g = TorusGeometry::new(vec![0.7, 1.0]).unwrap();
            let coeffs: Vec<Complex64> = vals.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            let f = FrequencyField::from_coeffs(g, 2, coeffs).unwrap();
            let mut buf = Vec::new();
            write_field(&mut buf, &f).unwrap();
            let back = read_field(&buf[..]).unwrap();
            for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}
