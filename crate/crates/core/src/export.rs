//! Output formats.
//!
//! Matrix container (`.ttmx`), little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `TTMX` |
//! | 4     | format version, `u32` (currently 1) |
//! | 8     | rows, `u64` |
//! | 8     | cols, `u64` |
//! | 16·rows·cols | entries in column-major order, each as `(re, im)` `f64` pairs |
//!
//! A JSON sidecar with the same stem carries the metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};

pub const MATRIX_MAGIC: &[u8; 4] = b"TTMX";
pub const MATRIX_FORMAT_VERSION: u32 = 1;

/// Fixed 17-significant-digit rendering, so reruns produce byte-identical text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Provenance attached to every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub kind: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64, kind: impl Into<String>) -> Self {
        Self {
            config_hash: config_hash.into(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            kind: kind.into(),
        }
    }

    /// `# key: value` lines placed above a CSV header.
    pub fn write_csv_header(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "# config_hash: {}", self.config_hash)?;
        writeln!(out, "# seed: {}", self.seed)?;
        writeln!(out, "# version: {}", self.version)?;
        writeln!(out, "# kind: {}", self.kind)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Stamped<'a, T> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON object with a `provenance` field next to the body's own fields.
pub fn write_json<T: Serialize>(path: &Path, provenance: &Provenance, body: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &Stamped { provenance, body })?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// CSV with the provenance block, a header row and preformatted rows.
pub fn write_csv(path: &Path, provenance: &Provenance, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    provenance.write_csv_header(&mut out)?;
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_matrix(path: &Path, m: MatRef<'_, c64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&MATRIX_FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(m.nrows() as u64).to_le_bytes())?;
    out.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes the container and its JSON sidecar.
pub fn write_matrix_with_sidecar<T: Serialize>(
    path: &Path,
    m: MatRef<'_, c64>,
    provenance: &Provenance,
    metadata: &T,
) -> Result<()> {
    write_matrix(path, m)?;
    write_json(&sidecar_path(path), provenance, metadata)
}

pub fn read_matrix(path: &Path) -> Result<Mat<c64>> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Config(format!("{} is not a matrix container", path.display())));
    }
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != MATRIX_FORMAT_VERSION {
        return Err(Error::Config(format!("unsupported container version {version}")));
    }
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let rows = u64::from_le_bytes(b8) as usize;
    input.read_exact(&mut b8)?;
    let cols = u64::from_le_bytes(b8) as usize;
    let mut m = Mat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            input.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            input.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            m[(i, j)] = c64::new(re, im);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("twisted-export-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn matrix_round_trip() {
        let m = Mat::from_fn(3, 2, |i, j| c64::new(i as f64 + 0.1, -(j as f64) / 3.0));
        let path = tmp("m.ttmx");
        let prov = Provenance::new("abc", 7, "assemble");
        write_matrix_with_sidecar(&path, m.as_ref(), &prov, &serde_json::json!({"L": 3})).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(back, m);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"TTMX");
        assert_eq!(bytes.len(), 24 + 16 * 6);
        let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(sidecar["L"], 3);
        assert_eq!(sidecar["provenance"]["seed"], 7);
    }

    #[test]
    fn bad_magic_rejected() {
        let path = tmp("bad.ttmx");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::Config(_))));
    }

    #[test]
    fn number_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        let x = std::f64::consts::PI;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_has_provenance_block() {
        let path = tmp("t.csv");
        let prov = Provenance::new("h", 1, "example6");
        write_csv(&path, &prov, "a,b", &[vec!["1".into(), "2".into()]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config_hash: h\n# seed: 1\n"));
        assert!(text.ends_with("a,b\n1,2\n"));
    }
}
