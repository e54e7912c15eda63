//! Table file format.
//!
//! ```text
//! magic   8 bytes  "SCRNCTAB"
//! version u32 LE
//! hlen    u64 LE   length of the JSON header
//! header  hlen bytes: grid, domain area, degree, provenance
//! body    per (b, n) cell in row-major order, f64 LE:
//!         coeffs[degree + 1], means[|a_grid|], stderrs[|a_grid|]
//! ```
//!
//! Floats in the header use round-trip-exact JSON, so a load reproduces the
//! table bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cell, GridSpec, NormConstTable, Provenance};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SCRNCTAB";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    grid: GridSpec,
    domain_area: f64,
    degree: usize,
    provenance: Provenance,
}

impl NormConstTable {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&Header {
            grid: self.grid.clone(),
            domain_area: self.domain_area,
            degree: self.degree,
            provenance: self.provenance.clone(),
        })
        .expect("table header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for cell in &self.cells {
            for v in cell.coeffs.iter().chain(&cell.means).chain(&cell.stderrs) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::TableFormat("not a normalizing-constant table".into()));
        }
        let mut word = [0u8; 4];
        read_exact(&mut r, &mut word)?;
        let version = u32::from_le_bytes(word);
        if version != FORMAT_VERSION {
            return Err(Error::TableFormat(format!("unsupported format version {version}")));
        }
        let mut len = [0u8; 8];
        read_exact(&mut r, &mut len)?;
        let hlen = u64::from_le_bytes(len) as usize;
        if hlen > r.len() {
            return Err(Error::TableFormat("truncated header".into()));
        }
        let header: Header = serde_json::from_slice(&r[..hlen])
            .map_err(|e| Error::TableFormat(format!("bad header: {e}")))?;
        r = &r[hlen..];
        header
            .grid
            .validate()
            .map_err(|e| Error::TableFormat(e.to_string()))?;
        let na = header.grid.a_grid.len();
        let ncells = header.grid.b_grid.len() * header.grid.n_grid.len();
        let per_cell = header.degree + 1 + 2 * na;
        if r.len() != ncells * per_cell * 8 {
            return Err(Error::TableFormat(format!(
                "body has {} bytes, expected {}",
                r.len(),
                ncells * per_cell * 8
            )));
        }
        let mut values = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
        let mut take = |k: usize| values.by_ref().take(k).collect::<Vec<f64>>();
        let cells = (0..ncells)
            .map(|_| Cell {
                coeffs: take(header.degree + 1),
                means: take(na),
                stderrs: take(na),
            })
            .collect();
        Ok(Self {
            grid: header.grid,
            domain_area: header.domain_area,
            degree: header.degree,
            cells,
            provenance: header.provenance,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// Coefficients as CSV: `b,n,c0,...,c{degree}`.
    pub fn write_coeffs_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["b".to_string(), "n".to_string()];
        header.extend((0..=self.degree).map(|k| format!("c{k}")));
        w.write_record(&header)?;
        for (b, n, cell) in self.cells() {
            let mut row = vec![b.to_string(), n.to_string()];
            row.extend(cell.coeffs.iter().map(|c| c.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Simulated means as CSV: `b,n,a,mean,stderr,fitted`.
    pub fn write_means_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["b", "n", "a", "mean", "stderr", "fitted"])?;
        for (b, n, cell) in self.cells() {
            for (k, a) in self.grid.a_grid.iter().enumerate() {
                w.write_record(&[
                    b.to_string(),
                    n.to_string(),
                    a.to_string(),
                    cell.means[k].to_string(),
                    cell.stderrs[k].to_string(),
                    super::eval_polynomial(&cell.coeffs, *a).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::TableFormat("truncated file".into()))
}
