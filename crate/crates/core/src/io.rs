//! File formats.
//!
//! A grid is stored as a JSON header next to a value block. The header names the block
//! file (relative to the header's directory) and its encoding:
//!
//! - `csv`: one line per node in node order (last axis fastest), comma-separated values;
//! - `binary`: node-major `f64` values, little-endian, no padding.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowTrace;
use crate::grid::{GridShape, ScalarGrid};
use crate::sections::{SectionGrid, SignatureSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub shape: Vec<usize>,
    pub hstep: f64,
    pub origin: Vec<f64>,
    /// `[p, q]` of the target pairing; absent for scalar grids.
    pub signature: Option<[usize; 2]>,
    /// Gram matrix rows of the target pairing; absent for scalar grids.
    pub gram: Option<Vec<Vec<f64>>>,
    /// Values per node.
    pub components: usize,
    pub encoding: Encoding,
    pub values_file: String,
}

impl GridHeader {
    fn grid(&self) -> Result<GridShape> {
        GridShape::new(self.shape.clone(), self.hstep, self.origin.clone())
    }
}

fn block_path(header: &Path, enc: Encoding) -> PathBuf {
    header.with_extension(match enc {
        Encoding::Csv => "csv",
        Encoding::Binary => "bin",
    })
}

fn write_block(path: &Path, values: &[f64], components: usize, enc: Encoding) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    match enc {
        Encoding::Csv => {
            for row in values.chunks(components) {
                let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
        Encoding::Binary => {
            for x in values {
                out.write_all(&x.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn read_block(path: &Path, expected: usize, components: usize, enc: Encoding) -> Result<Vec<f64>> {
    let values = match enc {
        Encoding::Csv => {
            let mut v = Vec::with_capacity(expected);
            for (k, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let row: Vec<f64> = line
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), k + 1))))
                    .collect::<Result<_>>()?;
                if row.len() != components {
                    return Err(Error::Parse(format!("{}:{}: expected {components} values, got {}", path.display(), k + 1, row.len())));
                }
                v.extend(row);
            }
            v
        }
        Encoding::Binary => {
            let bytes = fs::read(path)?;
            if bytes.len() % 8 != 0 {
                return Err(Error::Parse(format!("{}: length is not a multiple of 8", path.display())));
            }
            bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
        }
    };
    if values.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: values.len() });
    }
    Ok(values)
}

fn write_grid(header_path: &Path, grid: &GridShape, space: Option<&SignatureSpace>, values: &[f64], components: usize, enc: Encoding) -> Result<()> {
    let block = block_path(header_path, enc);
    let header = GridHeader {
        shape: grid.shape.clone(),
        hstep: grid.hstep,
        origin: grid.origin.clone(),
        signature: space.map(|s| [s.p, s.q]),
        gram: space.map(|s| (0..s.dim()).map(|i| s.gram.row(i).iter().copied().collect()).collect()),
        components,
        encoding: enc,
        values_file: block.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string(),
    };
    fs::write(header_path, serde_json::to_string_pretty(&header)?)?;
    write_block(&block, values, components, enc)
}

fn read_header(header_path: &Path) -> Result<(GridHeader, PathBuf)> {
    let text = fs::read_to_string(header_path)?;
    let header: GridHeader = serde_json::from_str(&text)?;
    let dir = header_path.parent().unwrap_or(Path::new("."));
    let block = dir.join(&header.values_file);
    Ok((header, block))
}

pub fn write_section(header_path: &Path, h: &SectionGrid, enc: Encoding) -> Result<()> {
    write_grid(header_path, &h.grid, Some(&h.space), &h.values, h.target_dim(), enc)
}

pub fn read_section(header_path: &Path) -> Result<SectionGrid> {
    let (header, block) = read_header(header_path)?;
    let grid = header.grid()?;
    let (Some([p, q]), Some(rows)) = (header.signature, header.gram.as_ref()) else {
        return Err(Error::Parse(format!("{}: section header needs signature and gram", header_path.display())));
    };
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) || n != header.components {
        return Err(Error::Parse(format!("{}: gram must be {0}×{0}", header.components)));
    }
    let gram = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let space = SignatureSpace::new(gram)?;
    if (space.p, space.q) != (p, q) {
        return Err(Error::Parse(format!("{}: gram has signature ({}, {}), header says ({p}, {q})", header_path.display(), space.p, space.q)));
    }
    let values = read_block(&block, grid.node_count() * n, n, header.encoding)?;
    SectionGrid::new(grid, space, values)
}

pub fn write_scalar(header_path: &Path, f: &ScalarGrid, enc: Encoding) -> Result<()> {
    write_grid(header_path, &f.grid, None, &f.values, 1, enc)
}

pub fn read_scalar(header_path: &Path) -> Result<ScalarGrid> {
    let (header, block) = read_header(header_path)?;
    if header.components != 1 {
        return Err(Error::Parse(format!("{}: scalar grid must have 1 component", header_path.display())));
    }
    let grid = header.grid()?;
    let values = read_block(&block, grid.node_count(), 1, header.encoding)?;
    ScalarGrid::new(grid, values)
}

/// `step,time,volume,mnorm,margin` with a header line.
pub fn write_trace_csv(w: &mut impl Write, trace: &FlowTrace) -> Result<()> {
    writeln!(w, "step,time,volume,mnorm,margin")?;
    for r in &trace.records {
        writeln!(w, "{},{:e},{:e},{:e},{:e}", r.step, r.time, r.volume, r.mnorm, r.margin)?;
    }
    Ok(())
}

/// One JSON document per line.
pub fn write_jsonl<T: Serialize>(w: &mut impl Write, items: impl IntoIterator<Item = T>) -> Result<()> {
    for item in items {
        writeln!(w, "{}", serde_json::to_string(&item)?)?;
    }
    Ok(())
}
