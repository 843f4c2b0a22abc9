//! On-disk formats.
//!
//! Matrices move through two formats: a small binary container that
//! round-trips `f64` values bit for bit, and CSV for anything meant to
//! be read by people or other tools. CSV floats are written with Rust's
//! shortest round-trip formatting, so re-reading them recovers the same
//! values in practice, but only the binary format guarantees it.
//!
//! Binary layout, little-endian throughout: the 8 magic bytes
//! `WSELMAT1`, then row count and column count as `u64`, then the
//! values row-major as `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::data::{DesignMatrix, Task, TargetVector};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"WSELMAT1";

pub fn write_design_bin(path: impl AsRef<Path>, x: &DesignMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(x.n_samples() as u64).to_le_bytes())?;
    w.write_all(&(x.n_features() as u64).to_le_bytes())?;
    for row in x.values().rows() {
        for &v in row {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_design_bin(path: impl AsRef<Path>) -> Result<DesignMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)
        .map_err(|_| Error::Format("missing row count".into()))?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)
        .map_err(|_| Error::Format("missing column count".into()))?;
    let cols = u64::from_le_bytes(word) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut word)
            .map_err(|_| Error::Format("truncated value section".into()))?;
        values.push(f64::from_le_bytes(word));
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after value section".into()));
    }
    let arr = Array2::from_shape_vec((rows, cols), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    DesignMatrix::new(arr)
}

/// Writes samples as CSV with headers `x0..x{p-1}` and, when a target is
/// given, a final `y` column.
pub fn write_samples_csv(
    path: impl AsRef<Path>,
    x: &DesignMatrix,
    y: Option<&TargetVector>,
) -> Result<()> {
    if let Some(y) = y {
        if y.len() != x.n_samples() {
            return Err(Error::shape(format!(
                "target has {} entries for {} samples",
                y.len(),
                x.n_samples()
            )));
        }
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<String> = (0..x.n_features()).map(|j| format!("x{j}")).collect();
    if y.is_some() {
        header.push("y".into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for (i, row) in x.values().rows().into_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        if let Some(y) = y {
            rec.push(format!("{}", y.values()[i]));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a samples CSV. A column headed `y` is parsed as the target with
/// the given task; all other columns become design matrix columns.
pub fn read_samples_csv(
    path: impl AsRef<Path>,
    task: Task,
) -> Result<(DesignMatrix, Option<TargetVector>)> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let headers = r.headers().map_err(csv_err)?.clone();
    let y_col = headers.iter().position(|h| h == "y");
    let p = headers.len() - usize::from(y_col.is_some());
    if p == 0 {
        return Err(Error::Format("no feature columns".into()));
    }
    let mut values = Vec::new();
    let mut target = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != headers.len() {
            return Err(Error::Format(format!(
                "row {line} has {} fields, expected {}",
                rec.len(),
                headers.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {line}: bad number {field:?}")))?;
            if Some(j) == y_col {
                target.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = values.len() / p;
    let arr = Array2::from_shape_vec((n, p), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    let x = DesignMatrix::new(arr)?;
    let y = match y_col {
        Some(_) => Some(TargetVector::new(Array1::from_vec(target), task)?),
        None => None,
    };
    Ok((x, y))
}

/// Writes a standalone target as CSV with header `y`.
pub fn write_target_csv(path: impl AsRef<Path>, y: &TargetVector) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "y")?;
    for v in y.values() {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_target_csv(path: impl AsRef<Path>, task: Task) -> Result<TargetVector> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 1 {
            return Err(Error::Format(format!("row {line}: expected a single y value")));
        }
        let v: f64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {line}: bad target value")))?;
        values.push(v);
    }
    TargetVector::new(Array1::from_vec(values), task)
}

/// Writes per-feature scores as CSV with header `feature,score`.
pub fn write_scores_csv(path: impl AsRef<Path>, scores: &[f64]) -> Result<()> {
    write_feature_column(path, "score", scores)
}

pub fn read_scores_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    read_feature_column(path)
}

/// Writes per-feature weights as CSV with header `feature,weight`.
pub fn write_weights_csv(path: impl AsRef<Path>, weights: &[f64]) -> Result<()> {
    write_feature_column(path, "weight", weights)
}

pub fn read_weights_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    read_feature_column(path)
}

fn write_feature_column(path: impl AsRef<Path>, name: &str, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "feature,{name}")?;
    for (j, v) in values.iter().enumerate() {
        writeln!(w, "{j},{v}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_feature_column(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 2 {
            return Err(Error::Format(format!("row {line}: expected feature,value")));
        }
        let j: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {line}: bad feature index")))?;
        if j != line {
            return Err(Error::Format(format!(
                "row {line}: feature indices must be consecutive from 0, got {j}"
            )));
        }
        let v: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {line}: bad value")))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Format("no rows".into()));
    }
    Ok(values)
}

/// Writes a support set as CSV with header `feature`.
pub fn write_support_csv(path: impl AsRef<Path>, support: &[usize]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "feature")?;
    for j in support {
        writeln!(w, "{j}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_support_csv(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut support = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let j: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {line}: bad feature index")))?;
        support.push(j);
    }
    Ok(support)
}

/// Serializes any report type as pretty JSON.
pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Renders scores laid out on a `rows x cols` grid as a plain-text PGM
/// image, darkest at the minimum score and brightest at the maximum.
pub fn write_scores_pgm(
    path: impl AsRef<Path>,
    scores: &[f64],
    rows: usize,
    cols: usize,
) -> Result<()> {
    if scores.len() != rows * cols {
        return Err(Error::shape(format!(
            "{} scores cannot fill a {rows}x{cols} grid",
            scores.len()
        )));
    }
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "P2")?;
    writeln!(w, "{cols} {rows}")?;
    writeln!(w, "255")?;
    for r in 0..rows {
        let line: Vec<String> = (0..cols)
            .map(|c| {
                let v = (scores[r * cols + c] - lo) / span;
                format!("{}", (v * 255.0).round() as u8)
            })
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
