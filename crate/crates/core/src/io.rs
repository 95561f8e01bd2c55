//! Plain-text formats for dense tensors, tensor trains and sample sets.
//!
//! Dense tensor:
//! ```text
//! dims: 2 3 4
//! 1.00000000000000000e0
//! ...
//! ```
//! one value per line in column-major order.
//!
//! Tensor train:
//! ```text
//! tt-ranks: 2 3
//! dims: 2 3 4
//! core 1: 1 2 2
//! ...
//! ```
//! each `core k: r_{k-1} n_k r_k` header (1-based `k`) is followed by the
//! core's values in column-major order.
//!
//! Sample set: a `# dims: n1 ... nd, ratio: rho` header, then one
//! `i1,...,id,value` row per sample with 1-based indices.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dense::{DenseTensor, Tensor3};
use crate::error::{Result, TtError};
use crate::sample::SampleSet;
use crate::tt::TtTensor;
use crate::Scalar;

fn parse_list<N: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<N>> {
    s.split_whitespace()
        .map(|t| t.parse().map_err(|_| TtError::Parse(format!("bad {what} entry {t:?}"))))
        .collect()
}

fn parse_value<T: Scalar>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| TtError::Parse(format!("bad value {s:?}")))
}

fn strip_key<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.trim()
        .strip_prefix(key)
        .ok_or_else(|| TtError::Parse(format!("expected `{key}` line, got {line:?}")))
}

/// Non-empty lines, trimmed.
fn content_lines(r: impl BufRead) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() {
            out.push(t.to_string());
        }
    }
    Ok(out)
}

fn dims_line(shape: &[usize]) -> String {
    let dims: Vec<String> = shape.iter().map(|n| n.to_string()).collect();
    format!("dims: {}", dims.join(" "))
}

pub fn write_dense<T: Scalar>(a: &DenseTensor<T>, mut w: impl Write) -> Result<()> {
    writeln!(w, "{}", dims_line(a.shape()))?;
    for v in a.values() {
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

pub fn read_dense<T: Scalar>(r: impl BufRead) -> Result<DenseTensor<T>> {
    let lines = content_lines(r)?;
    let first = lines.first().ok_or_else(|| TtError::Parse("empty dense tensor file".into()))?;
    let shape = parse_list(strip_key(first, "dims:")?, "dims")?;
    let values = lines[1..].iter().map(|l| parse_value(l)).collect::<Result<Vec<T>>>()?;
    DenseTensor::new(shape, values)
}

pub fn write_tt<T: Scalar>(x: &TtTensor<T>, mut w: impl Write) -> Result<()> {
    let ranks: Vec<String> = x.ranks().iter().map(|r| r.to_string()).collect();
    writeln!(w, "tt-ranks: {}", ranks.join(" "))?;
    writeln!(w, "{}", dims_line(&x.shape()))?;
    for (k, c) in x.cores().iter().enumerate() {
        writeln!(w, "core {}: {} {} {}", k + 1, c.left(), c.mid(), c.right())?;
        for v in c.as_slice() {
            writeln!(w, "{v:.17e}")?;
        }
    }
    Ok(())
}

pub fn read_tt<T: Scalar>(r: impl BufRead) -> Result<TtTensor<T>> {
    let lines = content_lines(r)?;
    if lines.len() < 2 {
        return Err(TtError::Parse("truncated tensor-train file".into()));
    }
    let ranks: Vec<usize> = parse_list(strip_key(&lines[0], "tt-ranks:")?, "rank")?;
    let shape: Vec<usize> = parse_list(strip_key(&lines[1], "dims:")?, "dims")?;
    let mut cores = Vec::with_capacity(shape.len());
    let mut pos = 2;
    for k in 0..shape.len() {
        let header = lines.get(pos).ok_or_else(|| TtError::Parse(format!("missing core {}", k + 1)))?;
        let prefix = format!("core {}:", k + 1);
        let dims: Vec<usize> = parse_list(strip_key(header, &prefix)?, "core dims")?;
        if dims.len() != 3 {
            return Err(TtError::Parse(format!("core header {header:?}")));
        }
        let len = dims[0] * dims[1] * dims[2];
        pos += 1;
        let body = lines
            .get(pos..pos + len)
            .ok_or_else(|| TtError::Parse(format!("core {} is truncated", k + 1)))?;
        let values = body.iter().map(|l| parse_value(l)).collect::<Result<Vec<T>>>()?;
        cores.push(Tensor3::from_vec(dims[0], dims[1], dims[2], values)?);
        pos += len;
    }
    if pos != lines.len() {
        return Err(TtError::Parse("trailing data after the last core".into()));
    }
    let x = TtTensor::new(cores)?;
    if x.ranks() != ranks || x.shape() != shape {
        return Err(TtError::Parse("header does not match the cores".into()));
    }
    Ok(x)
}

pub fn write_samples<T: Scalar>(s: &SampleSet<T>, mut w: impl Write) -> Result<()> {
    let dims: Vec<String> = s.shape().iter().map(|n| n.to_string()).collect();
    writeln!(w, "# dims: {}, ratio: {:e}", dims.join(" "), s.ratio())?;
    for (idx, v) in s.indices().zip(s.values()) {
        for i in idx {
            write!(w, "{},", i + 1)?;
        }
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

pub fn read_samples<T: Scalar>(r: impl BufRead) -> Result<SampleSet<T>> {
    let lines = content_lines(r)?;
    let first = lines.first().ok_or_else(|| TtError::Parse("empty sample file".into()))?;
    let header = strip_key(first, "# dims:")?;
    let dims_part = header.split(',').next().unwrap_or("");
    let shape: Vec<usize> = parse_list(dims_part, "dims")?;
    let d = shape.len();
    let mut indices = Vec::with_capacity(d * (lines.len() - 1));
    let mut values = Vec::with_capacity(lines.len() - 1);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != d + 1 {
            return Err(TtError::Parse(format!("expected {} fields in {line:?}", d + 1)));
        }
        for f in &fields[..d] {
            let i: usize = f.parse().map_err(|_| TtError::Parse(format!("bad index {f:?}")))?;
            if i == 0 {
                return Err(TtError::Parse("indices are 1-based".into()));
            }
            indices.push(i - 1);
        }
        values.push(parse_value(fields[d])?);
    }
    SampleSet::from_flat(shape, indices, values)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn save_dense<T: Scalar>(a: &DenseTensor<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_dense(a, &mut w)?;
    Ok(w.flush()?)
}

pub fn load_dense<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseTensor<T>> {
    read_dense(open(path.as_ref())?)
}

pub fn save_tt<T: Scalar>(x: &TtTensor<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_tt(x, &mut w)?;
    Ok(w.flush()?)
}

pub fn load_tt<T: Scalar>(path: impl AsRef<Path>) -> Result<TtTensor<T>> {
    read_tt(open(path.as_ref())?)
}

pub fn save_samples<T: Scalar>(s: &SampleSet<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_samples(s, &mut w)?;
    Ok(w.flush()?)
}

pub fn load_samples<T: Scalar>(path: impl AsRef<Path>) -> Result<SampleSet<T>> {
    read_samples(open(path.as_ref())?)
}
