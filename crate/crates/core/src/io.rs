//! File formats: matrix/vector CSV (one row per matrix row, 17
//! significant digits, no header), the flat key-value config format,
//! and the atomic-set spec block.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::atoms::{AtomicSet, Frame};
use crate::error::{Error, Result};

/// Render a matrix in the CSV convention.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    std::fs::write(path, matrix_to_csv(m))
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    parse_matrix_csv(&text).map_err(|msg| Error::Parse { path: path.display().to_string(), msg })
}

pub fn parse_matrix_csv(text: &str) -> std::result::Result<DMatrix<f64>, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, String> = line
            .split(',')
            .map(|tok| tok.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", ln + 1)))
            .collect();
        let row = row?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format!("line {}: ragged row ({} vs {})", ln + 1, row.len(), first.len()));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("empty matrix".into());
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// A vector is a single CSV row.
pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    let m = DMatrix::from_fn(1, v.len(), |_, j| v[j]);
    write_matrix_csv(path, &m)
}

pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path)?;
    if m.nrows() == 1 {
        Ok(DVector::from_fn(m.ncols(), |j, _| m[(0, j)]))
    } else if m.ncols() == 1 {
        Ok(DVector::from_fn(m.nrows(), |i, _| m[(i, 0)]))
    } else {
        Err(Error::Parse {
            path: path.display().to_string(),
            msg: format!("expected a vector, got {}x{}", m.nrows(), m.ncols()),
        })
    }
}

/// Parse the flat `key = value` config format (`#` comments).
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected `key = value`", ln + 1)));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Serializable description of an atomic set: kind, dims, optional
/// atoms-file path.
#[derive(Debug, Clone, PartialEq)]
pub enum AtomicSetSpec {
    Canonical { dim: usize },
    /// An equispaced full-circle frame of R^2 with `n` atoms.
    Circle { n: usize },
    FrameFile { path: PathBuf },
    RankOne { rows: usize, cols: usize },
}

impl AtomicSetSpec {
    /// Parse the compact CLI form: `canonical:D`, `circle:N`,
    /// `frame:PATH`, `rankone:RxC`.
    pub fn parse(text: &str) -> Result<AtomicSetSpec> {
        let (kind, arg) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("bad set spec `{text}`: expected kind:arg")))?;
        match kind {
            "canonical" => Ok(AtomicSetSpec::Canonical {
                dim: arg.parse().map_err(|_| Error::Config(format!("bad dim `{arg}`")))?,
            }),
            "circle" => Ok(AtomicSetSpec::Circle {
                n: arg.parse().map_err(|_| Error::Config(format!("bad atom count `{arg}`")))?,
            }),
            "frame" => Ok(AtomicSetSpec::FrameFile { path: PathBuf::from(arg) }),
            "rankone" => {
                let (r, c) = arg
                    .split_once('x')
                    .ok_or_else(|| Error::Config(format!("bad shape `{arg}`: expected RxC")))?;
                Ok(AtomicSetSpec::RankOne {
                    rows: r.parse().map_err(|_| Error::Config(format!("bad rows `{r}`")))?,
                    cols: c.parse().map_err(|_| Error::Config(format!("bad cols `{c}`")))?,
                })
            }
            other => Err(Error::Config(format!("unknown set kind `{other}`"))),
        }
    }

    /// Read from config keys: `set.kind` plus `set.dim`, `set.rows`,
    /// `set.cols`, `set.atoms_file`, `set.atoms`.
    pub fn from_config(map: &BTreeMap<String, String>) -> Result<AtomicSetSpec> {
        let kind = map
            .get("set.kind")
            .ok_or_else(|| Error::Config("missing key `set.kind`".into()))?;
        let get_usize = |key: &str| -> Result<usize> {
            map.get(key)
                .ok_or_else(|| Error::Config(format!("missing key `{key}`")))?
                .parse()
                .map_err(|_| Error::Config(format!("bad integer for `{key}`")))
        };
        match kind.as_str() {
            "canonical" => Ok(AtomicSetSpec::Canonical { dim: get_usize("set.dim")? }),
            "circle" => Ok(AtomicSetSpec::Circle { n: get_usize("set.atoms")? }),
            "frame" => Ok(AtomicSetSpec::FrameFile {
                path: PathBuf::from(
                    map.get("set.atoms_file")
                        .ok_or_else(|| Error::Config("missing key `set.atoms_file`".into()))?,
                ),
            }),
            "rankone" => Ok(AtomicSetSpec::RankOne {
                rows: get_usize("set.rows")?,
                cols: get_usize("set.cols")?,
            }),
            other => Err(Error::Config(format!("unknown set kind `{other}`"))),
        }
    }

    /// Materialize the atomic set (reads the atoms file if any).
    pub fn build(&self) -> Result<AtomicSet> {
        match self {
            AtomicSetSpec::Canonical { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidSet("dimension must be positive".into()));
                }
                Ok(AtomicSet::canonical(*dim))
            }
            AtomicSetSpec::Circle { n } => {
                if *n < 2 {
                    return Err(Error::InvalidSet("need at least 2 atoms".into()));
                }
                Ok(AtomicSet::frame(Frame::circle(*n)))
            }
            AtomicSetSpec::FrameFile { path } => {
                let m = read_matrix_csv(path)?;
                Ok(AtomicSet::frame(Frame::new(m)?))
            }
            AtomicSetSpec::RankOne { rows, cols } => {
                if *rows == 0 || *cols == 0 {
                    return Err(Error::InvalidSet("shape must be positive".into()));
                }
                Ok(AtomicSet::rank_one(*rows, *cols))
            }
        }
    }

    /// Config-block rendering (round-trips through `from_config`).
    pub fn to_config(&self) -> String {
        match self {
            AtomicSetSpec::Canonical { dim } => format!("set.kind = canonical\nset.dim = {dim}\n"),
            AtomicSetSpec::Circle { n } => format!("set.kind = circle\nset.atoms = {n}\n"),
            AtomicSetSpec::FrameFile { path } => {
                format!("set.kind = frame\nset.atoms_file = {}\n", path.display())
            }
            AtomicSetSpec::RankOne { rows, cols } => {
                format!("set.kind = rankone\nset.rows = {rows}\nset.cols = {cols}\n")
            }
        }
    }
}
