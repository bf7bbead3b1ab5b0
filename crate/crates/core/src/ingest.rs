//! Long-format CSV panels to dense tensors and back, and flat key=value
//! configuration files.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{fmt_f64, parse_f64};
use crate::selection::csv_err;
use crate::tensor::DenseTensor;

/// What to put in label combinations absent from the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillPolicy {
    #[default]
    Error,
    Zero,
    /// Mean of the observed values of the same series (same labels on every
    /// mode but the first), or of all observed values if the series is empty.
    Mean,
}

impl std::str::FromStr for FillPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(FillPolicy::Error),
            "zero" => Ok(FillPolicy::Zero),
            "mean" => Ok(FillPolicy::Mean),
            other => Err(Error::InvalidArgument(format!("unknown fill policy '{}'", other))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelOrder {
    #[default]
    FirstSeen,
    Lexicographic,
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// One column per tensor mode; the first is the sample mode.
    pub mode_columns: Vec<String>,
    pub value_column: String,
    pub fill: FillPolicy,
    pub order: LabelOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub tensor: DenseTensor,
    /// Labels per mode, in tensor index order.
    pub labels: Vec<Vec<String>>,
    pub mode_names: Vec<String>,
    pub value_name: String,
}

pub fn ingest_csv_path(path: impl AsRef<std::path::Path>, opts: &IngestOptions) -> Result<Panel> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Ingest(format!("cannot open {}: {}", path.as_ref().display(), e)))?;
    ingest_csv(file, opts)
}

pub fn ingest_csv<R: Read>(reader: R, opts: &IngestOptions) -> Result<Panel> {
    if opts.mode_columns.is_empty() {
        return Err(Error::InvalidArgument("at least one mode column is required".into()));
    }
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Ingest(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Ingest(format!("column '{}' not found in header", name)))
    };
    let mode_idx: Vec<usize> = opts.mode_columns.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let value_idx = find(&opts.value_column)?;
    let order = mode_idx.len();

    let mut labels: Vec<Vec<String>> = vec![Vec::new(); order];
    let mut lookup: Vec<HashMap<String, usize>> = vec![HashMap::new(); order];
    let mut cells: HashMap<Vec<usize>, (f64, usize)> = HashMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| Error::Ingest(format!("row {}: {}", line, e)))?;
        let mut key = Vec::with_capacity(order);
        for (m, &c) in mode_idx.iter().enumerate() {
            let label = rec.get(c).unwrap_or("").trim().to_string();
            let next = labels[m].len();
            let id = *lookup[m].entry(label.clone()).or_insert_with(|| {
                labels[m].push(label);
                next
            });
            key.push(id);
        }
        let raw = rec.get(value_idx).unwrap_or("");
        let value = parse_f64(raw)
            .ok_or_else(|| Error::Ingest(format!("row {}: value '{}' is not a number", line, raw)))?;
        if let Some((_, first)) = cells.insert(key, (value, line)) {
            return Err(Error::Ingest(format!("row {}: duplicate cell, first given on row {}", line, first)));
        }
    }
    if cells.is_empty() {
        return Err(Error::Ingest("no data rows".into()));
    }

    // remap[m][first-seen id] = final index
    let remap: Vec<Vec<usize>> = labels
        .iter_mut()
        .map(|ls| {
            let mut idx: Vec<usize> = (0..ls.len()).collect();
            if opts.order == LabelOrder::Lexicographic {
                idx.sort_by(|&a, &b| ls[a].cmp(&ls[b]));
                let sorted: Vec<String> = idx.iter().map(|&i| ls[i].clone()).collect();
                *ls = sorted;
            }
            let mut inv = vec![0; idx.len()];
            for (pos, &i) in idx.iter().enumerate() {
                inv[i] = pos;
            }
            inv
        })
        .collect();
    let shape: Vec<usize> = labels.iter().map(|l| l.len()).collect();
    let mut data = vec![f64::NAN; shape.iter().product()];
    let mut present = vec![false; data.len()];
    let probe = DenseTensor::zeros(shape.clone())?;
    for (key, (value, _)) in &cells {
        let idx: Vec<usize> = key.iter().enumerate().map(|(m, &k)| remap[m][k]).collect();
        let lin = probe.linear_index(&idx);
        data[lin] = *value;
        present[lin] = true;
    }
    if cells.len() < data.len() {
        fill_missing(&mut data, &present, &shape, &labels, &opts.mode_columns, opts.fill)?;
    }
    Ok(Panel {
        tensor: DenseTensor::new(shape, data)?,
        labels,
        mode_names: opts.mode_columns.clone(),
        value_name: opts.value_column.clone(),
    })
}

fn fill_missing(
    data: &mut [f64],
    present: &[bool],
    shape: &[usize],
    labels: &[Vec<String>],
    names: &[String],
    fill: FillPolicy,
) -> Result<()> {
    let n = shape[0];
    match fill {
        FillPolicy::Error => {
            let lin = present.iter().position(|p| !p).expect("some cell is missing");
            let probe = DenseTensor::zeros(shape.to_vec())?;
            let idx = probe.multi_index(lin);
            let desc: Vec<String> =
                idx.iter().enumerate().map(|(m, &i)| format!("{}={}", names[m], labels[m][i])).collect();
            Err(Error::Ingest(format!(
                "missing cell {} ({} of {} cells absent)",
                desc.join(", "),
                present.iter().filter(|p| !**p).count(),
                data.len()
            )))
        }
        FillPolicy::Zero => {
            for (v, &p) in data.iter_mut().zip(present) {
                if !p {
                    *v = 0.0;
                }
            }
            Ok(())
        }
        FillPolicy::Mean => {
            let observed: Vec<f64> = data.iter().zip(present).filter(|(_, p)| **p).map(|(v, _)| *v).collect();
            let overall = observed.iter().sum::<f64>() / observed.len() as f64;
            // first mode is fastest, so each series is a contiguous run of n entries
            for (series, chunk) in data.chunks_mut(n).enumerate() {
                let seen = &present[series * n..(series + 1) * n];
                let (sum, count) =
                    chunk.iter().zip(seen).filter(|(_, p)| **p).fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
                let fill = if count > 0 { sum / count as f64 } else { overall };
                for (v, &p) in chunk.iter_mut().zip(seen) {
                    if !p {
                        *v = fill;
                    }
                }
            }
            Ok(())
        }
    }
}

/// Writes the panel back in long format, one row per cell, with the first
/// mode varying slowest.
pub fn export_csv<W: Write>(panel: &Panel, w: W) -> Result<()> {
    let t = &panel.tensor;
    if panel.labels.len() != t.order() || panel.labels.iter().zip(t.shape()).any(|(l, &s)| l.len() != s) {
        return Err(Error::DimensionMismatch("labels do not match tensor shape".into()));
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = panel.mode_names.clone();
    header.push(panel.value_name.clone());
    out.write_record(&header).map_err(csv_err)?;
    let shape = t.shape();
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..t.len() {
        let mut row: Vec<String> = idx.iter().enumerate().map(|(m, &i)| panel.labels[m][i].clone()).collect();
        row.push(fmt_f64(t.get(&idx)));
        out.write_record(&row).map_err(csv_err)?;
        for m in (0..shape.len()).rev() {
            idx[m] += 1;
            if idx[m] < shape[m] {
                break;
            }
            idx[m] = 0;
        }
    }
    out.flush()?;
    Ok(())
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped
/// and a repeated key is an error.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key = value", n + 1)))?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::InvalidArgument(format!("config line {}: empty key", n + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::InvalidArgument(format!("config line {}: duplicate key '{}'", n + 1, key)));
        }
    }
    Ok(out)
}

/// Comma-separated list of numbers, e.g. a penalty grid.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| parse_f64(p).ok_or_else(|| Error::InvalidArgument(format!("'{}' is not a number", p))))
        .collect()
}

/// Comma-separated list of non-negative integers.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| Error::InvalidArgument(format!("'{}' is not an integer", p))))
        .collect()
}
