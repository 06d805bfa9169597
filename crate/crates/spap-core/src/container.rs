//! Binary weight container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "SPAPWT01"
//! count   u32      number of entries
//! entry   repeated:
//!   name_len u32
//!   name     UTF-8 bytes
//!   rows     u32
//!   cols     u32
//!   data     rows * cols little-endian IEEE-754 f64, row-major
//! ```
//!
//! Round-trips are bitwise lossless. Names are unique; files with a
//! different magic are rejected. Writes go through a temporary file that is
//! renamed into place.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, SpapError};
use crate::matrix::Matrix;

const MAGIC: &[u8; 8] = b"SPAPWT01";

/// Ordered collection of uniquely named matrices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightContainer {
    entries: Vec<(String, Matrix)>,
}

impl WeightContainer {
    pub fn new() -> Self {
        WeightContainer::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, name: impl Into<String>, matrix: Matrix) -> Result<()> {
        let name = name.into();
        if self.entries.iter().any(|(n, _)| *n == name) {
            return Err(SpapError::Format(format!("duplicate entry name `{name}`")));
        }
        self.entries.push((name, matrix));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.entries.iter().map(|(n, m)| (n.as_str(), m))
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        let count = u32::try_from(self.entries.len())
            .map_err(|_| SpapError::Format("too many entries for u32 count".to_string()))?;
        w.write_all(&count.to_le_bytes())?;
        for (name, matrix) in &self.entries {
            let name_len = u32::try_from(name.len())
                .map_err(|_| SpapError::Format(format!("name `{name}` too long")))?;
            w.write_all(&name_len.to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            let rows = u32::try_from(matrix.rows())
                .map_err(|_| SpapError::Format("row count exceeds u32".to_string()))?;
            let cols = u32::try_from(matrix.cols())
                .map_err(|_| SpapError::Format("column count exceeds u32".to_string()))?;
            w.write_all(&rows.to_le_bytes())?;
            w.write_all(&cols.to_le_bytes())?;
            for v in matrix.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(SpapError::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&magic),
                String::from_utf8_lossy(MAGIC)
            )));
        }
        let count = read_u32(r)?;
        let mut out = WeightContainer::new();
        for _ in 0..count {
            let name_len = read_u32(r)? as usize;
            let mut name_bytes = vec![0u8; name_len];
            r.read_exact(&mut name_bytes)?;
            let name = String::from_utf8(name_bytes)
                .map_err(|e| SpapError::Format(format!("entry name is not UTF-8: {e}")))?;
            let rows = read_u32(r)? as usize;
            let cols = read_u32(r)? as usize;
            let len = rows.checked_mul(cols).ok_or_else(|| {
                SpapError::Format(format!("entry `{name}` shape {rows}x{cols} overflows"))
            })?;
            let mut data = Vec::with_capacity(len);
            let mut buf = [0u8; 8];
            for _ in 0..len {
                r.read_exact(&mut buf)?;
                data.push(f64::from_le_bytes(buf));
            }
            let matrix = Matrix::from_vec(rows, cols, data).map_err(|e| {
                SpapError::Format(format!("entry `{name}` holds invalid values: {e}"))
            })?;
            out.insert(name, matrix)?;
        }
        Ok(out)
    }

    /// Writes atomically: a temporary sibling file is renamed over `path`.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut writer = BufWriter::new(File::create(&tmp)?);
            self.write(&mut writer)?;
            writer.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let mut reader = BufReader::new(File::open(path)?);
        let out = Self::read(&mut reader)?;
        // Trailing bytes mean the file is not what it claims to be.
        let mut rest = [0u8; 1];
        match reader.read(&mut rest)? {
            0 => Ok(out),
            _ => Err(SpapError::Format("trailing bytes after last entry".to_string())),
        }
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
