//! Minimal reader for the fixed-column PDB coordinate format.
//!
//! Only `ATOM`/`HETATM` coordinates of the first model are extracted. Column
//! positions (1-based, inclusive): record name 1-6, x 31-38, y 39-46,
//! z 47-54, element 77-78.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::edg::PointSet;
use crate::error::{EdgError, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone)]
pub struct ProteinStructure {
    pub id: String,
    /// Three-dimensional atom positions in Angstrom, in file order.
    pub atoms: PointSet,
}

/// Which coordinate records to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordFilter {
    pub hetatm: bool,
    pub hydrogens: bool,
}

impl Default for RecordFilter {
    fn default() -> Self {
        RecordFilter { hetatm: true, hydrogens: true }
    }
}

fn field(line: &str, start: usize, end: usize) -> Option<&str> {
    // 1-based inclusive columns
    line.get(start - 1..end.min(line.len()))
}

fn coordinate(line: &str, start: usize, lineno: usize, axis: &str) -> Result<f64> {
    let raw = field(line, start, start + 7)
        .filter(|s| s.len() == 8 || start + 7 > line.len())
        .ok_or_else(|| EdgError::Parse { line: lineno, msg: format!("missing {axis} coordinate") })?;
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| EdgError::Parse { line: lineno, msg: format!("bad {axis} coordinate {:?}", raw.trim()) })
}

fn is_hydrogen(line: &str) -> bool {
    match field(line, 77, 78).map(str::trim) {
        Some(el) if !el.is_empty() => el.eq_ignore_ascii_case("H") || el.eq_ignore_ascii_case("D"),
        _ => field(line, 13, 16)
            .map(|name| name.trim_start_matches(|c: char| c.is_ascii_digit() || c == ' '))
            .is_some_and(|n| n.starts_with('H')),
    }
}

/// Parse with the default filter: every `ATOM` and `HETATM` record.
pub fn parse_pdb<R: Read>(source: R) -> Result<ProteinStructure> {
    parse_pdb_with(source, RecordFilter::default())
}

pub fn parse_pdb_with<R: Read>(source: R, filter: RecordFilter) -> Result<ProteinStructure> {
    let reader = BufReader::new(source);
    let mut id = String::new();
    let mut points: Vec<[f64; 3]> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let record = field(&line, 1, 6).unwrap_or(&line[..]).trim_end();
        match record {
            "HEADER" => {
                if let Some(code) = field(&line, 63, 66) {
                    id = code.trim().to_string();
                }
            }
            "ENDMDL" => break,
            "ATOM" | "HETATM" => {
                if record == "HETATM" && !filter.hetatm {
                    continue;
                }
                if !filter.hydrogens && is_hydrogen(&line) {
                    continue;
                }
                if line.len() < 54 {
                    return Err(EdgError::Parse {
                        line: lineno,
                        msg: format!("coordinate record has {} columns, need 54", line.len()),
                    });
                }
                let x = coordinate(&line, 31, lineno, "x")?;
                let y = coordinate(&line, 39, lineno, "y")?;
                let z = coordinate(&line, 47, lineno, "z")?;
                points.push([x, y, z]);
            }
            _ => {}
        }
    }

    if points.is_empty() {
        return Err(EdgError::input("no ATOM/HETATM records found"));
    }
    let coords = Matrix::from_fn(3, points.len(), |i, j| points[j][i]);
    Ok(ProteinStructure { id, atoms: PointSet::new(coords)? })
}

/// Parse a file; the structure id falls back to the file stem when the
/// header carries none.
pub fn parse_pdb_file(path: &Path, filter: RecordFilter) -> Result<ProteinStructure> {
    let file = std::fs::File::open(path)?;
    let mut s = parse_pdb_with(file, filter)?;
    if s.id.is_empty() {
        s.id = path.file_stem().map(|x| x.to_string_lossy().to_uppercase()).unwrap_or_default();
    }
    Ok(s)
}

/// Serialize points as `ATOM` records (carbon atoms in chain A).
///
/// Coordinates are written with the format's three decimals.
pub fn to_pdb_string(points: &PointSet) -> Result<String> {
    if points.dim() != 3 {
        return Err(EdgError::arg(format!("PDB output needs 3-D points, got {}-D", points.dim())));
    }
    let mut out = String::new();
    for (k, p) in points.coords().column_iter().enumerate() {
        let serial = (k + 1) % 100_000;
        let res = (k + 1) % 10_000;
        writeln!(
            out,
            "ATOM  {serial:>5}  CA  ALA A{res:>4}    {:>8.3}{:>8.3}{:>8.3}  1.00  0.00           C",
            p[0], p[1], p[2]
        )
        .expect("write to string");
    }
    out.push_str("END\n");
    Ok(out)
}
