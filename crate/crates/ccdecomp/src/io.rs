//! File formats: weighted point clouds as CSV, concentration curves and
//! limit profiles as CSV/JSON, and grid functions in a small binary format.
//!
//! Point-cloud CSV starts with a `# dim=N` header; each row is
//! `x1,...,xN,weight`. A sequence lives either in one file with a leading
//! index column (`n,x1,...,xN,weight`, nondecreasing `n`) or in a directory
//! of single-measure files read in lexicographic name order.
//!
//! Grid functions use the GFN1 layout, little-endian throughout: the magic
//! bytes `GFN1`, `u32` dimension, one `u32` per axis extent, `f64` spacing,
//! one `f64` per origin coordinate, then the row-major `f64` values.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::concfun::{ConcentrationCurve, LimitProfile};
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, MeasureSequence, Point};
use crate::sobolev::{GridFunction, GridGeometry};

const GFN_MAGIC: &[u8; 4] = b"GFN1";

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| parse_err(path, line, format!("bad number {field:?}: {e}")))
}

/// Reads the `# dim=N` header; returns the dimension and the header's line
/// number so callers keep numbering diagnostics correctly.
fn read_dim_header(path: &Path, lines: &[(usize, String)]) -> Result<usize> {
    let Some((line_no, first)) = lines.first() else {
        return Err(parse_err(path, 1, "empty file; expected a '# dim=N' header"));
    };
    let rest = first
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix("dim="))
        .ok_or_else(|| parse_err(path, *line_no, "first line must be '# dim=N'"))?;
    let dim: usize = rest
        .trim()
        .parse()
        .map_err(|e| parse_err(path, *line_no, format!("bad dimension {rest:?}: {e}")))?;
    if dim == 0 {
        return Err(parse_err(path, *line_no, "dimension must be >= 1"));
    }
    Ok(dim)
}

/// Non-empty, non-comment lines with their 1-based line numbers; the header
/// line (first entry) is included.
fn significant_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path)?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') && !out.is_empty() {
            continue;
        }
        out.push((idx + 1, line));
    }
    Ok(out)
}

/// Reads one measure from `# dim=N` + `x1,...,xN,weight` rows.
pub fn read_measure_csv(path: impl AsRef<Path>) -> Result<DiscreteMeasure> {
    let path = path.as_ref();
    let lines = significant_lines(path)?;
    let dim = read_dim_header(path, &lines)?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (line_no, line) in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(parse_err(
                path,
                *line_no,
                format!("expected {} fields (x1..x{dim},weight), got {}", dim + 1, fields.len()),
            ));
        }
        let coords = fields[..dim]
            .iter()
            .map(|f| parse_f64(path, *line_no, f))
            .collect::<Result<Vec<f64>>>()?;
        points.push(Point::new(coords)?);
        weights.push(parse_f64(path, *line_no, fields[dim])?);
    }
    DiscreteMeasure::new(dim, points, weights)
}

/// Writes one measure in the format `read_measure_csv` accepts. Values use
/// the shortest digit strings that round-trip, so write/read is lossless.
pub fn write_measure_csv(path: impl AsRef<Path>, m: &DiscreteMeasure) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# dim={}", m.dim())?;
    for (p, w) in m.points().iter().zip(m.weights()) {
        for c in p.coords() {
            write!(out, "{c},")?;
        }
        writeln!(out, "{w}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a sequence from one file with a leading index column: `# dim=N`
/// header, rows `n,x1,...,xN,weight` with nondecreasing integer `n`. Runs of
/// equal `n` form one measure; the distinct `n` values become labels.
pub fn read_sequence_csv(path: impl AsRef<Path>) -> Result<MeasureSequence> {
    let path = path.as_ref();
    let lines = significant_lines(path)?;
    let dim = read_dim_header(path, &lines)?;
    let mut items: Vec<DiscreteMeasure> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    let mut points: Vec<Point> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut current: Option<i64> = None;
    let mut flush =
        |label: i64, points: &mut Vec<Point>, weights: &mut Vec<f64>| -> Result<()> {
            items.push(DiscreteMeasure::new(dim, std::mem::take(points), std::mem::take(weights))?);
            labels.push(label);
            Ok(())
        };
    for (line_no, line) in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(parse_err(
                path,
                *line_no,
                format!("expected {} fields (n,x1..x{dim},weight), got {}", dim + 2, fields.len()),
            ));
        }
        let n: i64 = fields[0]
            .trim()
            .parse()
            .map_err(|e| parse_err(path, *line_no, format!("bad index {:?}: {e}", fields[0])))?;
        match current {
            Some(prev) if n < prev => {
                return Err(parse_err(
                    path,
                    *line_no,
                    format!("index column must be nondecreasing ({n} after {prev})"),
                ));
            }
            Some(prev) if n > prev => {
                flush(prev, &mut points, &mut weights)?;
                current = Some(n);
            }
            None => current = Some(n),
            _ => {}
        }
        let coords = fields[1..=dim]
            .iter()
            .map(|f| parse_f64(path, *line_no, f))
            .collect::<Result<Vec<f64>>>()?;
        points.push(Point::new(coords)?);
        weights.push(parse_f64(path, *line_no, fields[dim + 1])?);
    }
    match current {
        Some(label) => flush(label, &mut points, &mut weights)?,
        None => return Err(parse_err(path, lines[0].0, "sequence file has no data rows")),
    }
    MeasureSequence::with_labels(items, labels)
}

/// Writes a sequence in the single-file format, labeling rows with the
/// sequence's labels (or 0-based positions without them).
pub fn write_sequence_csv(path: impl AsRef<Path>, seq: &MeasureSequence) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# dim={}", seq.dim())?;
    for (pos, m) in seq.items().iter().enumerate() {
        let label = seq.labels().map_or(pos as i64, |l| l[pos]);
        for (p, w) in m.points().iter().zip(m.weights()) {
            write!(out, "{label},")?;
            for c in p.coords() {
                write!(out, "{c},")?;
            }
            writeln!(out, "{w}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a sequence from a directory: every `*.csv` file is one measure, in
/// lexicographic file-name order, labeled by position.
pub fn read_sequence_dir(dir: impl AsRef<Path>) -> Result<MeasureSequence> {
    let dir = dir.as_ref();
    let mut files: Vec<_> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidInput(format!("no .csv files in {}", dir.display())));
    }
    let items = files.iter().map(read_measure_csv).collect::<Result<Vec<_>>>()?;
    MeasureSequence::new(items)
}

/// Reads a sequence from either a single file or a directory of files.
pub fn read_sequence(path: impl AsRef<Path>) -> Result<MeasureSequence> {
    let path = path.as_ref();
    if path.is_dir() {
        read_sequence_dir(path)
    } else {
        read_sequence_csv(path)
    }
}

/// Writes a curve as `radius,value,witness_x1,...,witness_xN` rows.
pub fn write_curve_csv(path: impl AsRef<Path>, curve: &ConcentrationCurve) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let dim = curve.witnesses.first().map_or(0, |w| w.dim());
    write!(out, "radius,value")?;
    for axis in 1..=dim {
        write!(out, ",witness_x{axis}")?;
    }
    writeln!(out)?;
    for i in 0..curve.radii.len() {
        write!(out, "{},{}", curve.radii[i], curve.values[i])?;
        for c in curve.witnesses[i].coords() {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a limit profile as pretty JSON.
pub fn write_profile_json(path: impl AsRef<Path>, profile: &LimitProfile) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, profile)?;
    out.flush()?;
    Ok(())
}

/// Writes a grid function in the GFN1 binary layout.
pub fn write_gfn(path: impl AsRef<Path>, u: &GridFunction) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let geom = u.geometry();
    out.write_all(GFN_MAGIC)?;
    out.write_all(&(geom.dim() as u32).to_le_bytes())?;
    for &s in geom.shape() {
        out.write_all(&(s as u32).to_le_bytes())?;
    }
    out.write_all(&geom.spacing().to_le_bytes())?;
    for &o in geom.origin() {
        out.write_all(&o.to_le_bytes())?;
    }
    for &v in u.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a GFN1 grid function back, bit for bit.
pub fn read_gfn(path: impl AsRef<Path>) -> Result<GridFunction> {
    let path = path.as_ref();
    let mut file = BufReader::new(fs::File::open(path)?);
    let bad = |msg: &str| parse_err(path, 0, msg);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic).map_err(|_| bad("file too short for a GFN1 header"))?;
    if &magic != GFN_MAGIC {
        return Err(bad("not a GFN1 file (bad magic)"));
    }
    let mut u32buf = [0u8; 4];
    let mut f64buf = [0u8; 8];
    file.read_exact(&mut u32buf).map_err(|_| bad("truncated dimension field"))?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    if dim == 0 || dim > 16 {
        return Err(bad(&format!("implausible dimension {dim}")));
    }
    let mut shape = Vec::with_capacity(dim);
    for _ in 0..dim {
        file.read_exact(&mut u32buf).map_err(|_| bad("truncated shape field"))?;
        shape.push(u32::from_le_bytes(u32buf) as usize);
    }
    file.read_exact(&mut f64buf).map_err(|_| bad("truncated spacing field"))?;
    let spacing = f64::from_le_bytes(f64buf);
    let mut origin = Vec::with_capacity(dim);
    for _ in 0..dim {
        file.read_exact(&mut f64buf).map_err(|_| bad("truncated origin field"))?;
        origin.push(f64::from_le_bytes(f64buf));
    }
    let geometry = GridGeometry::new(dim, shape, spacing, origin)?;
    let count = geometry.node_count();
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        file.read_exact(&mut f64buf)
            .map_err(|_| bad(&format!("truncated values (expected {count})")))?;
        values.push(f64::from_le_bytes(f64buf));
    }
    let mut trailer = [0u8; 1];
    if file.read(&mut trailer)? != 0 {
        return Err(bad("trailing bytes after the value block"));
    }
    GridFunction::new(geometry, values)
}
