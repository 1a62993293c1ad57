//! `RNLS1` binary field snapshots.
//!
//! Layout (little-endian): magic `RNLS1\0`, version `u16`, dim `u8`, per axis `n_j: u32`
//! and `L_j: f64`, then `gamma_j` (one per axis), `Omega`, `p`, `t` as `f64`, then the
//! row-major samples as interleaved `(re, im)` `f64` pairs.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;

pub const MAGIC: &[u8; 6] = b"RNLS1\0";
pub const VERSION: u16 = 1;

/// Metadata stored alongside the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub gammas: Vec<f64>,
    pub omega_rot: f64,
    pub p: f64,
    pub t: f64,
}

pub fn write_snapshot<W: Write>(mut w: W, field: &ComplexField, header: &SnapshotHeader) -> Result<()> {
    let grid = field.grid();
    if header.gammas.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: header.gammas.len() });
    }
    let mut buf = Vec::with_capacity(64 + 16 * grid.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(grid.dim() as u8);
    for a in 0..grid.dim() {
        buf.extend_from_slice(&(grid.points()[a] as u32).to_le_bytes());
        buf.extend_from_slice(&grid.half_widths()[a].to_le_bytes());
    }
    for g in &header.gammas {
        buf.extend_from_slice(&g.to_le_bytes());
    }
    for v in [header.omega_rot, header.p, header.t] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for z in field.values() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(ComplexField, SnapshotHeader)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if c.take(6)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes(c.take(2)?.try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = c.take(1)?[0] as usize;
    if !(dim == 2 || dim == 3) {
        return Err(Error::Format(format!("bad dimension {dim}")));
    }
    let mut points = Vec::with_capacity(dim);
    let mut half_widths = Vec::with_capacity(dim);
    for _ in 0..dim {
        points.push(u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes")) as usize);
        half_widths.push(c.f64()?);
    }
    let grid = Grid::new(dim, &half_widths, &points)?;
    let gammas = (0..dim).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let omega_rot = c.f64()?;
    let p = c.f64()?;
    let t = c.f64()?;
    let n = grid.len();
    if bytes.len() - c.pos != 16 * n {
        return Err(Error::Format(format!(
            "expected {} sample bytes, found {}",
            16 * n,
            bytes.len() - c.pos
        )));
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let re = c.f64()?;
        let im = c.f64()?;
        values.push(Complex64::new(re, im));
    }
    Ok((ComplexField::new(&grid, values)?, SnapshotHeader { gammas, omega_rot, p, t }))
}

pub fn save_snapshot(path: &Path, field: &ComplexField, header: &SnapshotHeader) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(f), field, header)
}

pub fn load_snapshot(path: &Path) -> Result<(ComplexField, SnapshotHeader)> {
    read_snapshot(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn header_layout_is_fixed() {
        let g = make_grid(2, &[4.0, 2.0], &[8, 16]).unwrap();
        let f = ComplexField::from_fn(&g, |x| Complex64::new(x[0], x[1]));
        let h = SnapshotHeader { gammas: vec![1.0, 2.0], omega_rot: 0.2, p: 5.0, t: 0.5 };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, &h).unwrap();
        assert_eq!(&buf[..6], b"RNLS1\0");
        assert_eq!(&buf[6..8], &[1, 0]);
        assert_eq!(buf[8], 2);
        assert_eq!(&buf[9..13], &8u32.to_le_bytes());
        assert_eq!(&buf[13..21], &4.0f64.to_le_bytes());
        assert_eq!(&buf[21..25], &16u32.to_le_bytes());
        let samples = 9 + 2 * 12 + 5 * 8;
        assert_eq!(&buf[samples - 8..samples], &0.5f64.to_le_bytes());
        assert_eq!(buf.len(), samples + 16 * 128);
        assert_eq!(&buf[samples..samples + 8], &(-4.0f64).to_le_bytes());
        let (back, hb) = read_snapshot(&buf[..]).unwrap();
        assert_eq!(back, f);
        assert_eq!(hb, h);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_snapshot(&b"RNLS2\0\x01\x00\x02"[..]).is_err());
        let g = make_grid(2, &[4.0, 4.0], &[8, 8]).unwrap();
        let mut buf = Vec::new();
        let h = SnapshotHeader { gammas: vec![1.0, 1.0], omega_rot: 0.0, p: 3.0, t: 0.0 };
        write_snapshot(&mut buf, &ComplexField::zeros(&g), &h).unwrap();
        buf.pop();
        assert!(read_snapshot(&buf[..]).is_err());
    }
}
