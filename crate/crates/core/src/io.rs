//! File formats: CSV and RZF feature matrices, clustering and selection
//! JSON, label CSVs and generic JSON reports.
//!
//! RZF layout: the bytes `RZF1`, `n` and `m` as little-endian `u32`, then
//! `n·m` little-endian `f32` values in row-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{Cluster, Clustering, Features, SelectionResult};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"RZF1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Rzf,
}

impl MatrixFormat {
    /// `.rzf` files are binary; anything else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("rzf") => Self::Rzf,
            _ => Self::Csv,
        }
    }
}

pub fn load_features<T: Scalar>(path: impl AsRef<Path>) -> Result<Features<T>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    match MatrixFormat::from_path(path) {
        MatrixFormat::Rzf => read_rzf(reader),
        MatrixFormat::Csv => read_csv(reader),
    }
}

pub fn save_features<T: Scalar>(fs: &Features<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path)?);
    match MatrixFormat::from_path(path) {
        MatrixFormat::Rzf => write_rzf(fs, &mut w)?,
        MatrixFormat::Csv => write_csv(fs, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

pub fn read_rzf<T: Scalar>(mut r: impl Read) -> Result<Features<T>> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head[..4]).map_err(|_| Error::BadMagic)?;
    if &head[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    r.read_exact(&mut head[4..])?;
    let n = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let m = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    if n == 0 || m == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut bytes = vec![0u8; n * m * 4];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(4)
        .map(|b| T::of(f32::from_le_bytes(b.try_into().unwrap()) as f64))
        .collect();
    Features::new(data, n, m)
}

pub fn write_rzf<T: Scalar>(fs: &Features<T>, mut w: impl Write) -> Result<()> {
    let dim = |x: usize| {
        u32::try_from(x)
            .map_err(|_| Error::InvalidArgument(format!("{x} exceeds the RZF size limit")))
    };
    w.write_all(MAGIC)?;
    w.write_all(&dim(fs.n())?.to_le_bytes())?;
    w.write_all(&dim(fs.m())?.to_le_bytes())?;
    for v in fs.as_slice() {
        w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
    }
    Ok(())
}

fn is_number(s: &str) -> bool {
    s.trim().parse::<f64>().is_ok()
}

/// Reads comma-separated rows. A first line with a non-numeric feature field
/// is a header; a non-numeric first column holds external ids.
pub fn read_csv<T: Scalar>(r: impl BufRead) -> Result<Features<T>> {
    let mut lines = Vec::new();
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((no + 1, line));
        }
    }
    let mut body = &lines[..];
    if let Some((_, first)) = body.first() {
        let fields: Vec<&str> = first.split(',').collect();
        let header = if fields.len() == 1 {
            !is_number(fields[0])
        } else {
            fields[1..].iter().any(|f| !is_number(f))
        };
        if header {
            body = &body[1..];
        }
    }
    let Some((_, first)) = body.first() else {
        return Err(Error::EmptyMatrix);
    };
    let with_ids = !is_number(first.split(',').next().unwrap_or(""));
    let skip = usize::from(with_ids);

    let mut data = Vec::new();
    let mut ids = Vec::new();
    let mut m = None;
    for (row, (line_no, line)) in body.iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() <= skip {
            return Err(Error::DimensionMismatch { row });
        }
        let width = fields.len() - skip;
        if *m.get_or_insert(width) != width {
            return Err(Error::DimensionMismatch { row });
        }
        if with_ids {
            ids.push(fields[0].trim().to_string());
        }
        for (col, f) in fields[skip..].iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                line: *line_no,
                msg: format!("not a number: {:?}", f.trim()),
            })?;
            let v = T::of(v);
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            data.push(v);
        }
    }
    let fs = Features::new(data, body.len(), m.unwrap_or(0))?;
    if with_ids {
        fs.with_external_ids(ids)
    } else {
        Ok(fs)
    }
}

pub fn write_csv<T: Scalar>(fs: &Features<T>, mut w: impl Write) -> Result<()> {
    for i in 0..fs.n() {
        if let Some(id) = fs.external_id(i) {
            write!(w, "{id},")?;
        }
        let row: Vec<String> = fs.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub cluster_id: usize,
    pub members: Vec<usize>,
    pub centroid: Vec<f64>,
}

pub fn clustering_records<T: Scalar>(c: &Clustering<T>) -> Vec<ClusterRecord> {
    c.clusters
        .iter()
        .enumerate()
        .map(|(cluster_id, cl)| ClusterRecord {
            cluster_id,
            members: cl.members.clone(),
            centroid: cl.centroid.iter().map(|v| v.as_f64()).collect(),
        })
        .collect()
}

/// Writes one record per cluster. Refuses anything that is not a partition.
pub fn save_clustering<T: Scalar>(c: &Clustering<T>, path: impl AsRef<Path>) -> Result<()> {
    c.check_partition()?;
    write_json(&clustering_records(c), path)
}

pub fn load_clustering<T: Scalar>(path: impl AsRef<Path>) -> Result<Clustering<T>> {
    let mut records: Vec<ClusterRecord> = read_json(path)?;
    records.sort_by_key(|r| r.cluster_id);
    let source_n = records.iter().map(|r| r.members.len()).sum();
    let c = Clustering {
        clusters: records
            .into_iter()
            .map(|r| {
                let mut members = r.members;
                members.sort_unstable();
                Cluster {
                    members,
                    centroid: r.centroid.into_iter().map(T::of).collect(),
                }
            })
            .collect(),
        source_n,
    };
    c.check_partition()?;
    Ok(c)
}

/// Path of the flat index list written next to a selection file.
pub fn index_list_path(path: &Path) -> PathBuf {
    path.with_extension("idx")
}

/// Writes the selection as JSON plus a sorted, newline-delimited index list
/// next to it (same stem, `.idx` extension).
pub fn save_selection(s: &SelectionResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_json(s, path)?;
    let mut w = BufWriter::new(File::create(index_list_path(path))?);
    for i in &s.global {
        writeln!(w, "{i}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_selection(path: impl AsRef<Path>) -> Result<SelectionResult> {
    read_json(path)
}

pub fn read_index_list(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (no, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse().map_err(|_| Error::Parse {
            line: no + 1,
            msg: format!("not an index: {t:?}"),
        })?);
    }
    Ok(out)
}

/// `index,label` rows under a header line.
pub fn save_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "index,label")?;
    for (i, l) in labels.iter().enumerate() {
        writeln!(w, "{i},{l}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `index,label` rows (header optional). Every index in `0..n` must
/// appear exactly once.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let mut pairs = Vec::new();
    for (no, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: no + 1, msg };
        let (a, b) = t
            .split_once(',')
            .ok_or_else(|| bad("expected index,label".into()))?;
        match (a.trim().parse::<usize>(), b.trim().parse::<usize>()) {
            (Ok(i), Ok(l)) => pairs.push((i, l)),
            _ if no == 0 && pairs.is_empty() => continue,
            _ => return Err(bad(format!("expected index,label, got {t:?}"))),
        }
    }
    let n = pairs.len();
    let mut out = vec![usize::MAX; n];
    for (i, l) in pairs {
        if i >= n || out[i] != usize::MAX {
            return Err(Error::InvalidArgument(format!(
                "label indices must cover 0..{n} exactly once (index {i})"
            )));
        }
        out[i] = l;
    }
    Ok(out)
}

/// Pretty JSON with a trailing newline; byte-identical for equal values.
pub fn write_json<V: Serialize + ?Sized>(value: &V, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<V: DeserializeOwned>(path: impl AsRef<Path>) -> Result<V> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
