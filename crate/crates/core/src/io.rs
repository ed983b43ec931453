//! Plain-text interchange formats.
//!
//! All writers format floats with Rust's shortest round-trip `Display`, so
//! write → read is lossless and identical inputs produce byte-identical
//! files. All readers report malformed content with the file path and
//! 1-based line number.
//!
//! Formats:
//! - points:  header `x,y` (or `x,y,z`), one point per line
//! - diagram: header `birth,death,dim`, one pair per line
//! - field:   meta line `# origin_x,origin_y,cell,nx,ny`, then `ny` lines of
//!   `nx` comma-separated values, rows in increasing `iy`
//! - curve:   header `x,mean,q_lo,q_hi`, one node per line
//! - sample:  either a directory of diagram CSVs (loaded in file-name order)
//!   or a JSON file `{"L": side, "diagrams": [[[birth,death,dim], ...], ...]}`

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagram::{DiagramSample, OmegaBox, PersistenceDiagram, PersistencePair};
use crate::error::{Error, Result};
use crate::field::{GridShape, ScalarField};
use crate::repr::BettiCurve;
use crate::vr::PointCloud;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_f64(tok: &str, path: &Path, line: usize) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("expected a number, got {tok:?}")))
}

/// Writes a point cloud as CSV with an `x,y[,z]` header.
pub fn write_points_csv(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
    writeln!(w, "{}", if cloud.dim() == 3 { "x,y,z" } else { "x,y" })?;
    for i in 0..cloud.len() {
        let row = cloud.row(i);
        let mut line = String::new();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a point cloud; the header decides whether points are 2- or 3-D.
pub fn read_points_csv(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        let lineno = idx + 1;
        if idx == 0 {
            dim = match text {
                "x,y" => 2,
                "x,y,z" => 3,
                other => {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("expected header 'x,y' or 'x,y,z', got {other:?}"),
                    ))
                }
            };
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let toks: Vec<&str> = text.split(',').collect();
        if toks.len() != dim {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {dim} fields, got {}", toks.len()),
            ));
        }
        let mut row = Vec::with_capacity(dim);
        for t in toks {
            row.push(parse_f64(t, path, lineno)?);
        }
        rows.push(row);
    }
    PointCloud::from_rows(&rows)
}

/// Writes a diagram as CSV with a `birth,death,dim` header.
pub fn write_diagram_csv(path: impl AsRef<Path>, diagram: &PersistenceDiagram) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
    writeln!(w, "birth,death,dim")?;
    for p in diagram.pairs() {
        writeln!(w, "{},{},{}", p.birth, p.death, p.dim)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a diagram CSV; pairs must fit in the given box.
pub fn read_diagram_csv(path: impl AsRef<Path>, bbox: OmegaBox) -> Result<PersistenceDiagram> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        let lineno = idx + 1;
        if idx == 0 {
            if text != "birth,death,dim" {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected header 'birth,death,dim', got {text:?}"),
                ));
            }
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let toks: Vec<&str> = text.split(',').collect();
        if toks.len() != 3 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 3 fields, got {}", toks.len()),
            ));
        }
        let birth = parse_f64(toks[0], path, lineno)?;
        let death = parse_f64(toks[1], path, lineno)?;
        let dim: u32 = toks[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad dimension {:?}", toks[2])))?;
        pairs.push(PersistencePair::new(birth, death, dim));
    }
    PersistenceDiagram::new(pairs, bbox)
}

/// Writes a field: `# origin_x,origin_y,cell,nx,ny`, then row-major values.
pub fn write_field_csv(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
    let s = field.shape();
    writeln!(
        w,
        "# {},{},{},{},{}",
        s.origin[0], s.origin[1], s.cell, s.nx, s.ny
    )?;
    for iy in 0..s.ny {
        let mut line = String::new();
        for ix in 0..s.nx {
            if ix > 0 {
                line.push(',');
            }
            line.push_str(&field.value(ix, iy).to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field written by [`write_field_csv`].
pub fn read_field_csv(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let (_, meta) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty field file"))?;
    let meta = meta?;
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| parse_err(path, 1, "missing '# origin_x,origin_y,cell,nx,ny' line"))?
        .trim();
    let toks: Vec<&str> = meta.split(',').collect();
    if toks.len() != 5 {
        return Err(parse_err(path, 1, "meta line needs 5 fields"));
    }
    let ox = parse_f64(toks[0], path, 1)?;
    let oy = parse_f64(toks[1], path, 1)?;
    let cell = parse_f64(toks[2], path, 1)?;
    let nx: usize = toks[3]
        .trim()
        .parse()
        .map_err(|_| parse_err(path, 1, format!("bad nx {:?}", toks[3])))?;
    let ny: usize = toks[4]
        .trim()
        .parse()
        .map_err(|_| parse_err(path, 1, format!("bad ny {:?}", toks[4])))?;
    let shape = GridShape::new([ox, oy], cell, nx, ny)?;
    let mut values = Vec::with_capacity(nx * ny);
    let mut rows = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let text = line.trim();
        let lineno = idx + 1;
        if text.is_empty() {
            continue;
        }
        let toks: Vec<&str> = text.split(',').collect();
        if toks.len() != nx {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {nx} values, got {}", toks.len()),
            ));
        }
        for t in toks {
            values.push(parse_f64(t, path, lineno)?);
        }
        rows += 1;
    }
    if rows != ny {
        return Err(parse_err(
            path,
            rows + 1,
            format!("expected {ny} rows, got {rows}"),
        ));
    }
    ScalarField::from_values(shape, values)
}

/// Writes a Betti curve with its quantile band as `x,mean,q_lo,q_hi`.
pub fn write_curve_csv(path: impl AsRef<Path>, curve: &BettiCurve) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
    writeln!(w, "x,mean,q_lo,q_hi")?;
    for k in 0..curve.xs.len() {
        writeln!(
            w,
            "{},{},{},{}",
            curve.xs[k], curve.mean[k], curve.q_lo[k], curve.q_hi[k]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve CSV back as `[x, mean, q_lo, q_hi]` rows.
pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<Vec<[f64; 4]>> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        let lineno = idx + 1;
        if idx == 0 {
            if text != "x,mean,q_lo,q_hi" {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected header 'x,mean,q_lo,q_hi', got {text:?}"),
                ));
            }
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let toks: Vec<&str> = text.split(',').collect();
        if toks.len() != 4 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 4 fields, got {}", toks.len()),
            ));
        }
        let mut row = [0.0; 4];
        for (k, t) in toks.iter().enumerate() {
            row[k] = parse_f64(t, path, lineno)?;
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Serialize, Deserialize)]
struct SampleJson {
    #[serde(rename = "L")]
    side: f64,
    diagrams: Vec<Vec<(f64, f64, u32)>>,
}

/// Writes a sample as a single JSON document.
pub fn write_sample_json(path: impl AsRef<Path>, sample: &DiagramSample) -> Result<()> {
    let doc = SampleJson {
        side: sample.side(),
        diagrams: sample
            .diagrams()
            .iter()
            .map(|d| d.pairs().iter().map(|p| (p.birth, p.death, p.dim)).collect())
            .collect(),
    };
    write_json(path, &doc)
}

/// Loads a sample from either a directory of diagram CSVs (file-name order,
/// `side` required) or a JSON document (embedded side; `side`, if given,
/// must agree).
pub fn read_sample(path: impl AsRef<Path>, side: Option<f64>) -> Result<DiagramSample> {
    let path = path.as_ref();
    if path.is_dir() {
        let side = side.ok_or_else(|| {
            Error::Config("loading a sample directory requires the box side".into())
        })?;
        let bbox = OmegaBox::new(side)?;
        let mut files: Vec<_> = fs::read_dir(path)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().map(|e| e == "csv").unwrap_or(false))
            .collect();
        files.sort();
        let mut diagrams = Vec::with_capacity(files.len());
        for f in files {
            diagrams.push(read_diagram_csv(&f, bbox)?);
        }
        DiagramSample::new(diagrams)
    } else {
        let doc: SampleJson = serde_json::from_reader(BufReader::new(fs::File::open(path)?))?;
        if let Some(s) = side {
            if s != doc.side {
                return Err(Error::Config(format!(
                    "requested box side {s} but the file records {}",
                    doc.side
                )));
            }
        }
        let bbox = OmegaBox::new(doc.side)?;
        let mut diagrams = Vec::with_capacity(doc.diagrams.len());
        for pairs in doc.diagrams {
            diagrams.push(PersistenceDiagram::new(
                pairs
                    .into_iter()
                    .map(|(b, d, dim)| PersistencePair::new(b, d, dim))
                    .collect(),
                bbox,
            )?);
        }
        DiagramSample::new(diagrams)
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
