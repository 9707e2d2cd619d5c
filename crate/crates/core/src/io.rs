//! File formats: operator and field CSV, JSON envelopes and PGM heatmaps.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::SampleReport;
use crate::operator::{CMatrix, Operator};
use crate::phase_space::Field;
use crate::pom::DiscretePOM;

pub const SCHEMA_VERSION: u32 = 1;

/// Conventions every output was computed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub hbar: f64,
    pub position: String,
    pub momentum: String,
    pub fourier: String,
    pub weyl_operator: String,
    pub type_a_map: String,
    pub weyl_map: String,
    pub binned_labels: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            hbar: 1.0,
            position: "Q = (a + a†)/√2".into(),
            momentum: "P = i(a† − a)/√2".into(),
            fourier: "F h_n = (−i)^n h_n".into(),
            weyl_operator: "W(q,p) = exp(i(pQ − qP)) = D((q+ip)/√2)".into(),
            type_a_map: "Γ^T(f) = (1/2π) ∫∫ f W T W* dq dp".into(),
            weyl_map: "Γ^𝒫(f) = c ∫∫ f W 𝒫 W* dq dp, c fixed by Γ^𝒫(1) = I".into(),
            binned_labels: "inner bins: midpoint; outer bins: edge − 1 and edge + 1".into(),
        }
    }
}

/// Versioned JSON wrapper around a payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    pub conventions: Conventions,
    pub body: T,
}

impl<T> Envelope<T> {
    pub fn new(kind: impl Into<String>, body: T) -> Self {
        Envelope { schema_version: SCHEMA_VERSION, kind: kind.into(), conventions: Conventions::default(), body }
    }
}

impl<T: Serialize> Envelope<T> {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

impl<T: for<'de> Deserialize<'de>> Envelope<T> {
    pub fn read(path: &Path) -> Result<Self> {
        let env: Self = serde_json::from_reader(BufReader::new(fs::File::open(path)?))?;
        if env.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema version {}", env.schema_version)));
        }
        Ok(env)
    }
}

/// Writes every entry as `row,col,re,im`.
pub fn write_operator_csv(op: &Operator, w: &mut impl Write) -> Result<()> {
    writeln!(w, "row,col,re,im")?;
    let m = op.matrix();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            writeln!(w, "{r},{c},{},{}", z.re, z.im)?;
        }
    }
    Ok(())
}

pub fn save_operator_csv(op: &Operator, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_operator_csv(op, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a `row,col,re,im` table; missing entries are zero and the dimension is the
/// largest index plus one.
pub fn read_operator_csv(r: impl Read) -> Result<CMatrix> {
    let mut entries = Vec::new();
    let mut dim = 0;
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("row")) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(Error::Parse(format!("line {}: expected row,col,re,im", i + 1)));
        }
        let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", i + 1));
        let row: usize = cols[0].parse().map_err(|_| bad("row"))?;
        let col: usize = cols[1].parse().map_err(|_| bad("col"))?;
        let re: f64 = cols[2].parse().map_err(|_| bad("re"))?;
        let im: f64 = cols[3].parse().map_err(|_| bad("im"))?;
        dim = dim.max(row + 1).max(col + 1);
        entries.push((row, col, Complex64::new(re, im)));
    }
    if dim == 0 {
        return Err(Error::Parse("empty operator table".into()));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (r, c, z) in entries {
        m[(r, c)] = z;
    }
    Ok(m)
}

pub fn load_operator_csv(path: &Path) -> Result<CMatrix> {
    read_operator_csv(fs::File::open(path)?)
}

/// Writes `q,p,value` rows in storage order.
pub fn write_field_csv(field: &Field, w: &mut impl Write) -> Result<()> {
    writeln!(w, "q,p,value")?;
    for (q, p, v) in field.iter() {
        writeln!(w, "{q},{p},{v}")?;
    }
    Ok(())
}

pub fn save_field_csv(field: &Field, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_field_csv(field, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Binary 8-bit PGM. Image rows are `q` nodes from the first (top) to the last,
/// columns are `p` nodes left to right, and grey level `g` stands for the value
/// `min + (max − min) g / 255`; both bounds are recorded in the header comment.
pub fn write_field_pgm(field: &Field, w: &mut impl Write) -> Result<()> {
    let (lo, hi) = (field.min(), field.max());
    let span = hi - lo;
    writeln!(w, "P5")?;
    writeln!(w, "# value = {lo:e} + ({hi:e} - {lo:e}) * g / 255; rows: q ascending from top; columns: p ascending")?;
    writeln!(w, "{} {}", field.p.len(), field.q.len())?;
    writeln!(w, "255")?;
    let bytes: Vec<u8> = field
        .values
        .iter()
        .map(|v| if span > 0.0 { ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 })
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn save_field_pgm(field: &Field, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_field_pgm(field, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Outcome label and the CSV file holding its effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PomEntry {
    pub label: f64,
    pub matrix: String,
}

/// Writes one `<stem>_<i>.csv` per effect into `dir` and returns the index entries.
pub fn save_pom(pom: &DiscretePOM, dir: &Path, stem: &str) -> Result<Vec<PomEntry>> {
    pom.outcomes()
        .iter()
        .enumerate()
        .map(|(i, (label, effect))| {
            let name = format!("{stem}_{i}.csv");
            save_operator_csv(effect, &dir.join(&name))?;
            Ok(PomEntry { label: *label, matrix: name })
        })
        .collect()
}

/// Writes `label,count` rows.
pub fn save_counts_csv(report: &SampleReport, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "label,count")?;
    for c in &report.counts {
        writeln!(w, "{},{}", c.label, c.count)?;
    }
    w.flush()?;
    Ok(())
}

/// Creates `dir` if needed and returns `dir/name`.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}
