use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{Grid, GridField};

const MAGIC: &[u8; 8] = b"BVBFIELD";
const VERSION: u32 = 1;

fn u32_at(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().expect("4 bytes"))
}

fn u64_at(buf: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(buf[at..at + 8].try_into().expect("8 bytes"))
}

fn f64_at(buf: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(buf[at..at + 8].try_into().expect("8 bytes"))
}

/// Prefix (16 bytes) plus header (n, dim, cells, lo, hi, h).
const HEADER_LEN: usize = 16 + 4 + 4 + 8 + 8 + 8 + 8;

impl GridField {
    /// Little-endian binary: magic, version, reserved word, header, then
    /// row-major values with components fastest.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let g = self.grid();
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        out.write_all(&(g.n() as u32).to_le_bytes())?;
        out.write_all(&(self.dim() as u32).to_le_bytes())?;
        out.write_all(&(g.cells() as u64).to_le_bytes())?;
        out.write_all(&g.lo().to_le_bytes())?;
        out.write_all(&g.hi().to_le_bytes())?;
        out.write_all(&g.h().to_le_bytes())?;
        for v in self.values() {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        if buf.len() < HEADER_LEN {
            return Err(Error::Format(format!("{} bytes is shorter than the header", buf.len())));
        }
        if &buf[0..8] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32_at(&buf, 8);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = u32_at(&buf, 16) as usize;
        let dim = u32_at(&buf, 20) as usize;
        let cells = u64_at(&buf, 24) as usize;
        let (lo, hi, h) = (f64_at(&buf, 32), f64_at(&buf, 40), f64_at(&buf, 48));
        let grid = Grid::with_cells(n, lo, hi, cells).map_err(|e| Error::Format(e.to_string()))?;
        if (grid.h() - h).abs() > 1e-12 * h.abs() {
            return Err(Error::Format(format!("h = {h} disagrees with box and cell count")));
        }
        let count = cells
            .checked_pow(n as u32)
            .and_then(|c| c.checked_mul(dim))
            .ok_or_else(|| Error::Format("header sizes overflow".into()))?;
        let body = &buf[HEADER_LEN..];
        if body.len() != count * 8 {
            return Err(Error::Format(format!(
                "expected {} value bytes, found {}",
                count * 8,
                body.len()
            )));
        }
        let values = body.chunks_exact(8).map(|c| f64_at(c, 0)).collect();
        GridField::new(grid, dim, values)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_binary(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ProfileRow {
    r: f64,
    value: f64,
}

/// Writes `r,value` rows.
pub fn write_profile_csv<W: Write>(out: W, radii: &[f64], values: &[f64]) -> Result<()> {
    if radii.len() != values.len() {
        return Err(Error::DimensionMismatch {
            what: "profile columns",
            expected: radii.len(),
            found: values.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    for (&r, &value) in radii.iter().zip(values) {
        w.serialize(ProfileRow { r, value })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profile_csv<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rd = csv::Reader::from_reader(input);
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for row in rd.deserialize() {
        let row: ProfileRow = row?;
        radii.push(row.r);
        values.push(row.value);
    }
    Ok((radii, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridField {
        let g = Grid::new(2, -0.5, 0.5, 0.25).unwrap();
        GridField::from_fn(g, 2, |y| vec![y[0].sin(), y[0] * y[1] + 1e-300]).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 16 * 2 * 8);
        assert_eq!(&buf[..8], b"BVBFIELD");
        assert_eq!(GridField::read_binary(&buf[..]).unwrap(), f);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let f = sample();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert!(matches!(GridField::read_binary(&buf[..buf.len() - 1]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(GridField::read_binary(&bad[..]), Err(Error::Format(_))));
        let mut ver = buf;
        ver[8] = 9;
        assert!(matches!(GridField::read_binary(&ver[..]), Err(Error::Format(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bvbf");
        let f = sample();
        f.save(&path).unwrap();
        assert_eq!(GridField::load(&path).unwrap(), f);
    }

    #[test]
    fn csv_profile_round_trip() {
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &[0.5, 0.25], &[1.0, 0.125]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r,value\n"));
        let (r, v) = read_profile_csv(&buf[..]).unwrap();
        assert_eq!((r, v), (vec![0.5, 0.25], vec![1.0, 0.125]));
    }
}
