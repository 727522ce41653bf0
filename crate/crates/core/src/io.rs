//! Persistence: binary field snapshots, atomic file writes, JSON/CSV output
//! and gnuplot scripts.
//!
//! Snapshot layout (little-endian):
//!
//! ```text
//! b"LOGNLS01" | u32 dim | u32 M | f64 L | f64 t | Mᴺ × (f64 re, f64 im)
//! ```
//!
//! Values are stored row-major, i.e. in [`Field::values`] order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{make_grid, Field};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"LOGNLS01";
const HEADER_LEN: usize = 8 + 4 + 4 + 8 + 8;

pub fn encode_snapshot(field: &Field, t: f64) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * field.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.points() as u32).to_le_bytes());
    out.extend_from_slice(&grid.half_width().to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(Field, f64)> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("missing LOGNLS01 header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let dim = u32_at(8) as usize;
    let points = u32_at(12) as usize;
    let half_width = f64_at(16);
    let t = f64_at(24);
    // check the size before building FFT plans for a hostile header
    let sites = (points as u64).checked_pow(dim as u32).filter(|_| (1..=3).contains(&dim));
    if sites.and_then(|n| n.checked_mul(16)).map(|n| n + HEADER_LEN as u64) != Some(bytes.len() as u64) {
        return Err(Error::Snapshot(format!(
            "payload of {} bytes does not match dim={dim}, M={points}",
            bytes.len()
        )));
    }
    let grid = make_grid(dim, half_width, points).map_err(|e| Error::Snapshot(format!("bad grid header: {e}")))?;
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let field = Field::new(&grid, values).map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok((field, t))
}

pub fn write_snapshot(path: &Path, field: &Field, t: f64) -> Result<()> {
    write_atomic(path, &encode_snapshot(field, t))
}

pub fn read_snapshot(path: &Path) -> Result<(Field, f64)> {
    decode_snapshot(&fs::read(path)?)
}

/// Write to a sibling temp file, flush, then rename over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

/// One curve of a plot: a CSV file (relative to the script), a 1-based
/// column plotted against column 1, and its legend title.
#[derive(Clone, Debug)]
pub struct Series {
    pub csv: String,
    pub column: usize,
    pub title: String,
}

impl Series {
    pub fn new(csv: impl Into<String>, column: usize, title: impl Into<String>) -> Self {
        Self {
            csv: csv.into(),
            column,
            title: title.into(),
        }
    }
}

/// A self-contained gnuplot script rendering `series` into `png`.
pub fn gnuplot_script(png: &str, title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool) -> String {
    let mut s = String::new();
    s.push_str("# render with: gnuplot <this file>\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{png}'\n"));
    s.push_str("set datafile separator ','\n");
    s.push_str("set key top left\n");
    s.push_str("set grid\n");
    s.push_str(&format!("set title '{title}'\n"));
    s.push_str(&format!("set xlabel '{xlabel}'\n"));
    s.push_str(&format!("set ylabel '{ylabel}'\n"));
    if log_y {
        s.push_str("set logscale y\nset format y '%.0e'\n");
    }
    let plots: Vec<String> = series
        .iter()
        .map(|c| {
            // zeros have no place on a log axis
            let y = if log_y {
                format!("(${0} > 0 ? ${0} : NaN)", c.column)
            } else {
                c.column.to_string()
            };
            format!("'{}' using 1:{y} skip 1 with lines lw 2 title '{}'", c.csv, c.title)
        })
        .collect();
    s.push_str("plot ");
    s.push_str(&plots.join(", \\\n     "));
    s.push('\n');
    s
}
