//! VWF1 binary fields and CSV export.
//!
//! A VWF1 file is a 32-byte ASCII header `VWF1 <nz> <nx> <h> <R|C>` padded with
//! spaces and terminated by `\n`, followed by little-endian `f64` samples written
//! row after row (`iz` outer, `ix` inner), with `(re, im)` interleaved for complex fields.

use std::io::{Read, Write};

use super::{ComplexField, Field, Grid2D, RealField, Scalar, C64};
use crate::error::{Error, Result};

pub const HEADER_LEN: usize = 32;

/// Scalars with a VWF1 encoding.
pub trait FieldElement: Scalar {
    const TAG: char;
    const WIDTH: usize;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
    fn csv(self) -> String;
}

impl FieldElement for f64 {
    const TAG: char = 'R';
    const WIDTH: usize = 1;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().unwrap())
    }
    fn csv(self) -> String {
        format!("{self:e}")
    }
}

impl FieldElement for C64 {
    const TAG: char = 'C';
    const WIDTH: usize = 2;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_le_bytes());
        out.extend_from_slice(&self.im.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        C64::new(f64::read_le(&bytes[..8]), f64::read_le(&bytes[8..16]))
    }
    fn csv(self) -> String {
        format!("{:e}{:+e}i", self.re, self.im)
    }
}

fn header(grid: &Grid2D, tag: char) -> Result<[u8; HEADER_LEN]> {
    let text = format!("VWF1 {} {} {} {}", grid.nz(), grid.nx(), grid.h(), tag);
    if text.len() > HEADER_LEN - 1 {
        return Err(Error::Format(format!("header `{text}` exceeds {HEADER_LEN} bytes")));
    }
    let mut buf = [b' '; HEADER_LEN];
    buf[..text.len()].copy_from_slice(text.as_bytes());
    buf[HEADER_LEN - 1] = b'\n';
    Ok(buf)
}

pub fn write_vwf<T: FieldElement, W: Write>(field: &Field<T>, mut w: W) -> Result<()> {
    let grid = field.grid();
    w.write_all(&header(grid, T::TAG)?)?;
    let mut body = Vec::with_capacity(grid.len() * 8 * T::WIDTH);
    for iz in 0..grid.nz() {
        for ix in 0..grid.nx() {
            field.get(iz, ix).write_le(&mut body);
        }
    }
    w.write_all(&body)?;
    Ok(())
}

fn parse_header(buf: &[u8; HEADER_LEN]) -> Result<(Grid2D, char)> {
    if buf[HEADER_LEN - 1] != b'\n' {
        return Err(Error::Format("header is not newline-terminated".into()));
    }
    let text = std::str::from_utf8(&buf[..HEADER_LEN - 1])
        .map_err(|_| Error::Format("header is not ASCII".into()))?;
    let parts: Vec<&str> = text.split_whitespace().collect();
    let [magic, nz, nx, h, tag] = parts.as_slice() else {
        return Err(Error::Format(format!("expected 5 header tokens, got `{text}`")));
    };
    if *magic != "VWF1" {
        return Err(Error::Format(format!("bad magic `{magic}`")));
    }
    let bad = |what: &str| Error::Format(format!("unparsable {what} in header `{text}`"));
    let nz: usize = nz.parse().map_err(|_| bad("nz"))?;
    let nx: usize = nx.parse().map_err(|_| bad("nx"))?;
    let h: f64 = h.parse().map_err(|_| bad("h"))?;
    let tag = match *tag {
        "R" => 'R',
        "C" => 'C',
        other => return Err(Error::Format(format!("unknown field kind `{other}`"))),
    };
    let grid = if nx == 1 { Grid2D::line(nz, h) } else { Grid2D::new(nz, nx, h) }
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok((grid, tag))
}

pub fn read_vwf<T: FieldElement, R: Read>(mut r: R) -> Result<Field<T>> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head)?;
    let (grid, tag) = parse_header(&head)?;
    if tag != T::TAG {
        return Err(Error::Format(format!("expected a `{}` field, file holds `{tag}`", T::TAG)));
    }
    let stride = 8 * T::WIDTH;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != grid.len() * stride {
        return Err(Error::Format(format!(
            "body has {} bytes, expected {}",
            body.len(),
            grid.len() * stride
        )));
    }
    let mut values = vec![T::ZERO; grid.len()];
    for (k, chunk) in body.chunks_exact(stride).enumerate() {
        let (iz, ix) = (k / grid.nx(), k % grid.nx());
        values[grid.index(iz, ix)] = T::read_le(chunk);
    }
    Field::new(grid, values)
}

/// Reads either kind of field, promoting real data to complex.
pub fn read_vwf_complex<R: Read>(mut r: R) -> Result<ComplexField> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head)?;
    let (_, tag) = parse_header(&head)?;
    let chained = (&head[..]).chain(r);
    if tag == 'R' {
        Ok(read_vwf::<f64, _>(chained)?.to_complex())
    } else {
        read_vwf::<C64, _>(chained)
    }
}

pub fn write_csv<T: FieldElement, W: Write>(field: &Field<T>, mut w: W) -> Result<()> {
    let grid = field.grid();
    for iz in 0..grid.nz() {
        let row: Vec<String> = (0..grid.nx()).map(|ix| field.get(iz, ix).csv()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn save_real(path: &std::path::Path, field: &RealField) -> Result<()> {
    write_vwf(field, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn save_complex(path: &std::path::Path, field: &ComplexField) -> Result<()> {
    write_vwf(field, std::io::BufWriter::new(std::fs::File::create(path)?))
}
