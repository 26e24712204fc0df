//! On-disk formats: the binary FMAT container, CSV, plain-text label files
//! and the fuzzy-graph edge list.
//!
//! FMAT layout, all integers little-endian:
//!
//! | offset | size | field                              |
//! |--------|------|------------------------------------|
//! | 0      | 8    | magic `FEATMAT1`                   |
//! | 8      | 4    | version (1: f32 values, 2: f64)    |
//! | 12     | 8    | n                                  |
//! | 20     | 4    | d                                  |
//! | 24     | 1    | has_labels (0 or 1)                |
//! | 25     | ...  | n x d values, row-major            |
//! |        | 4n   | u32 labels when has_labels = 1     |
//!
//! Feature files use version 1. Embeddings are written as version 2 so the
//! f64 coordinates survive a round trip.

use std::fs;
use std::io::Write;
use std::path::Path;

use npcluster_core::manifold::FuzzyGraph;
use npcluster_core::{EmbeddingMatrix, FeatureMatrix, LabelVector};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"FEATMAT1";
pub const FEATURE_VERSION: u32 = 1;
pub const EMBEDDING_VERSION: u32 = 2;
const HEADER_LEN: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Binary,
    Csv,
}

impl Format {
    /// `.csv` files are CSV, everything else FMAT.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }
}

/// Decoded FMAT file with values widened to f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Fmat {
    pub version: u32,
    pub n: usize,
    pub d: usize,
    pub values: Vec<f64>,
    pub labels: Option<LabelVector>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn parse_fmat(bytes: &[u8], path: &Path) -> Result<Fmat> {
    if bytes.len() < HEADER_LEN {
        return Err(CliError::format(
            path,
            format!("truncated header: file has {} bytes, the header needs {HEADER_LEN}", bytes.len()),
        ));
    }
    if &bytes[..8] != MAGIC {
        return Err(CliError::format(path, "malformed header: bad magic at byte 0 (expected FEATMAT1)"));
    }
    let version = u32_at(bytes, 8);
    let width = match version {
        FEATURE_VERSION => 4,
        EMBEDDING_VERSION => 8,
        v => return Err(CliError::format(path, format!("malformed header: unsupported version {v} at byte 8"))),
    };
    let n = u64_at(bytes, 12);
    let d = u32_at(bytes, 20) as usize;
    let has_labels = match bytes[24] {
        0 => false,
        1 => true,
        f => return Err(CliError::format(path, format!("malformed header: has_labels flag {f} at byte 24"))),
    };
    if n == 0 {
        return Err(CliError::format(path, "malformed header: n = 0 at byte 12"));
    }
    if d == 0 {
        return Err(CliError::format(path, "malformed header: d = 0 at byte 20"));
    }
    let n = usize::try_from(n).map_err(|_| CliError::format(path, format!("malformed header: n = {n} at byte 12")))?;
    let payload = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(width))
        .ok_or_else(|| CliError::format(path, format!("malformed header: n x d = {n} x {d} overflows")))?;
    let label_bytes = if has_labels { 4 * n } else { 0 };
    let expected = HEADER_LEN + payload + label_bytes;
    if bytes.len() < expected {
        return Err(CliError::format(
            path,
            format!(
                "truncated file: expected {expected} bytes for n = {n}, d = {d}, found {} (ends at byte {})",
                bytes.len(),
                bytes.len()
            ),
        ));
    }
    if bytes.len() > expected {
        return Err(CliError::format(
            path,
            format!("dimension mismatch: {} trailing bytes after byte {expected}", bytes.len() - expected),
        ));
    }
    let mut values = Vec::with_capacity(n * d);
    for idx in 0..n * d {
        let at = HEADER_LEN + idx * width;
        let v = if width == 4 {
            f64::from(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()))
        } else {
            f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
        };
        if !v.is_finite() {
            return Err(CliError::format(
                path,
                format!("non-finite value at byte {at} (row {}, column {})", idx / d, idx % d),
            ));
        }
        values.push(v);
    }
    let labels = has_labels.then(|| {
        let start = HEADER_LEN + payload;
        LabelVector::new((0..n).map(|i| u32_at(bytes, start + 4 * i)).collect())
    });
    Ok(Fmat { version, n, d, values, labels })
}

fn encode_fmat(
    version: u32,
    n: usize,
    d: usize,
    values: impl Iterator<Item = f64>,
    labels: Option<&LabelVector>,
) -> Vec<u8> {
    let width = if version == FEATURE_VERSION { 4 } else { 8 };
    let mut out = Vec::with_capacity(HEADER_LEN + n * d * width + labels.map_or(0, |_| 4 * n));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.push(u8::from(labels.is_some()));
    for v in values {
        if width == 4 {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        } else {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(l) = labels {
        for &x in l.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

fn check_labels(labels: Option<&LabelVector>, n: usize) -> Result<()> {
    match labels {
        Some(l) if l.len() != n => {
            Err(CliError::precondition(format!("label count {} does not match the {n} matrix rows", l.len())))
        }
        _ => Ok(()),
    }
}

/// CSV rows of decimal numbers, optionally followed by an integer label.
fn parse_csv(path: &Path, with_labels: bool) -> Result<(usize, usize, Vec<f64>, Option<LabelVector>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::format(path, e))?;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::format(path, e))?;
        let line = record.position().map_or(n + 1, |p| p.line() as usize);
        let fields: Vec<&str> = record.iter().collect();
        if fields.len() == 1 && fields[0].is_empty() {
            continue;
        }
        let d = fields.len() - usize::from(with_labels);
        if d == 0 {
            return Err(CliError::format(path, format!("line {line}: no feature columns")));
        }
        match width {
            None => width = Some(d),
            Some(w) if w != d => {
                return Err(CliError::format(
                    path,
                    format!("line {line}: dimension mismatch, expected {w} values, found {d}"),
                ))
            }
            _ => {}
        }
        for (col, f) in fields[..d].iter().enumerate() {
            let v: f32 = f.parse().map_err(|_| {
                CliError::format(path, format!("line {line}, column {}: invalid number {f:?}", col + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::format(path, format!("line {line}, column {}: non-finite value", col + 1)));
            }
            values.push(f64::from(v));
        }
        if with_labels {
            let f = fields[d];
            let l: u32 = f
                .parse()
                .map_err(|_| CliError::format(path, format!("line {line}, column {}: invalid label {f:?}", d + 1)))?;
            labels.push(l);
        }
        n += 1;
    }
    let d = width.ok_or_else(|| CliError::format(path, "empty file"))?;
    Ok((n, d, values, with_labels.then(|| LabelVector::new(labels))))
}

fn csv_bytes(n: usize, d: usize, values: &[String], labels: Option<&LabelVector>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for i in 0..n {
        let mut row: Vec<String> = values[i * d..(i + 1) * d].to_vec();
        if let Some(l) = labels {
            row.push(l[i].to_string());
        }
        w.write_record(&row).map_err(|e| CliError::new(crate::error::ErrorKind::Io, e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::new(crate::error::ErrorKind::Io, e.to_string()))
}

/// Reads a feature matrix; labels come back iff the file carries them (for
/// CSV, iff `csv_labels` says the last column holds them).
pub fn read_features(path: &Path, format: Format, csv_labels: bool) -> Result<(FeatureMatrix, Option<LabelVector>)> {
    let (n, d, values, labels) = match format {
        Format::Binary => {
            let f = parse_fmat(&read_bytes(path)?, path)?;
            if f.version != FEATURE_VERSION {
                return Err(CliError::format(
                    path,
                    format!("expected a feature file (version {FEATURE_VERSION}), found version {}", f.version),
                ));
            }
            (f.n, f.d, f.values, f.labels)
        }
        Format::Csv => parse_csv(path, csv_labels)?,
    };
    let values = values.into_iter().map(|v| v as f32).collect();
    let x = FeatureMatrix::new(n, d, values).map_err(|e| CliError::format(path, e))?;
    Ok((x, labels))
}

pub fn write_features(x: &FeatureMatrix, labels: Option<&LabelVector>, path: &Path, format: Format) -> Result<()> {
    check_labels(labels, x.n())?;
    let bytes = match format {
        Format::Binary => encode_fmat(FEATURE_VERSION, x.n(), x.d(), x.values().iter().map(|&v| f64::from(v)), labels),
        Format::Csv => {
            let text: Vec<String> = x.values().iter().map(|v| v.to_string()).collect();
            csv_bytes(x.n(), x.d(), &text, labels)?
        }
    };
    write_bytes(path, &bytes)
}

/// Reads an embedding; version 1 (f32) files are accepted and widened.
pub fn read_embedding(path: &Path, format: Format) -> Result<EmbeddingMatrix> {
    let (n, p, values) = match format {
        Format::Binary => {
            let f = parse_fmat(&read_bytes(path)?, path)?;
            (f.n, f.d, f.values)
        }
        Format::Csv => {
            let (n, p, v, _) = parse_csv(path, false)?;
            (n, p, v)
        }
    };
    EmbeddingMatrix::new(n, p, values).map_err(|e| CliError::format(path, e))
}

pub fn write_embedding(y: &EmbeddingMatrix, path: &Path, format: Format) -> Result<()> {
    let bytes = match format {
        Format::Binary => encode_fmat(EMBEDDING_VERSION, y.n(), y.p(), y.values().iter().copied(), None),
        Format::Csv => {
            let text: Vec<String> = y.values().iter().map(|v| v.to_string()).collect();
            csv_bytes(y.n(), y.p(), &text, None)?
        }
    };
    write_bytes(path, &bytes)
}

/// One non-negative integer per line, or an FMAT file carrying labels.
pub fn read_labels(path: &Path) -> Result<LabelVector> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(MAGIC) {
        return parse_fmat(&bytes, path)?
            .labels
            .ok_or_else(|| CliError::format(path, "the matrix file has no label block"));
    }
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::format(path, format!("not UTF-8 text: {e}")))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let l = line
            .parse::<u32>()
            .map_err(|_| CliError::format(path, format!("line {}: invalid label {line:?}", i + 1)))?;
        labels.push(l);
    }
    if labels.is_empty() {
        return Err(CliError::format(path, "no labels found"));
    }
    Ok(LabelVector::new(labels))
}

pub fn write_labels(labels: &LabelVector, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels.as_slice() {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

/// Debug dump: one `i j weight` line per undirected edge.
pub fn write_fuzzy_graph(graph: &FuzzyGraph, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(graph.edges().len() * 24);
    for e in graph.edges() {
        writeln!(out, "{} {} {}", e.i, e.j, e.weight).expect("writing to a Vec cannot fail");
    }
    write_bytes(path, &out)
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::new(crate::error::ErrorKind::Io, format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let x = FeatureMatrix::new(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = encode_fmat(FEATURE_VERSION, 2, 3, x.values().iter().map(|&v| f64::from(v)), None);
        assert_eq!(b.len(), 25 + 24);
        assert_eq!(&b[..8], b"FEATMAT1");
        assert_eq!(u32_at(&b, 8), 1);
        assert_eq!(u64_at(&b, 12), 2);
        assert_eq!(u32_at(&b, 20), 3);
        assert_eq!(b[24], 0);
        assert_eq!(f32::from_le_bytes(b[25..29].try_into().unwrap()), 1.0);
    }

    #[test]
    fn errors_carry_locations() {
        let p = Path::new("x.fmat");
        let x = FeatureMatrix::new(2, 2, vec![1., 2., 3., 4.]).unwrap();
        let mut b = encode_fmat(FEATURE_VERSION, 2, 2, x.values().iter().map(|&v| f64::from(v)), None);
        let err = parse_fmat(&b[..30], p).unwrap_err();
        assert!(err.message.contains("truncated"), "{}", err.message);
        b[33..37].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = parse_fmat(&b, p).unwrap_err();
        assert!(err.message.contains("non-finite value at byte 33 (row 1, column 0)"), "{}", err.message);
        b[0] = b'X';
        assert!(parse_fmat(&b, p).unwrap_err().message.contains("bad magic"));
        assert!(parse_fmat(&b[..10], p).unwrap_err().message.contains("truncated header"));
    }
}
