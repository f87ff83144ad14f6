use std::io::Read;
use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

pub const N_FEATURES: usize = 30;
pub const LABEL_COLUMN: &str = "Class";

/// `Time, V1, …, V28, Amount`.
pub fn feature_names() -> Vec<String> {
    std::iter::once("Time".to_string())
        .chain((1..=28).map(|i| format!("V{i}")))
        .chain(std::iter::once("Amount".to_string()))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Tensor,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Tensor, labels: Vec<u8>) -> Result<Self> {
        let (rows, cols) = features.dims2()?;
        if cols != N_FEATURES {
            return Err(Error::dim(format!(
                "{cols} feature columns, expected {N_FEATURES}"
            )));
        }
        if rows != labels.len() {
            return Err(Error::dim(format!(
                "{rows} rows but {} labels",
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::Schema(format!(
                "label {} at row {i} is not 0 or 1",
                labels[i]
            )));
        }
        Ok(Self {
            features,
            labels,
            feature_names: feature_names(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    /// Features and labels of the given rows, in order.
    pub fn subset(&self, idx: &[usize]) -> Result<(Tensor, Vec<u8>)> {
        let x = self.features.select_rows(idx)?;
        Ok((x, idx.iter().map(|&i| self.labels[i]).collect()))
    }
}

/// Reads a CSV with the `Time, V1..V28, Amount, Class` header, in any column order.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Err(Error::Schema("empty file".into()));
    }
    let mut wanted = feature_names();
    wanted.push(LABEL_COLUMN.to_string());
    let mut cols = Vec::with_capacity(wanted.len());
    for name in &wanted {
        match header.iter().position(|h| h.trim() == name) {
            Some(i) => cols.push(i),
            None => return Err(Error::Schema(format!("missing column {name}"))),
        }
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut row = 0usize;
    while rdr.read_record(&mut record)? {
        row += 1;
        for (k, &c) in cols.iter().enumerate() {
            let cell = record.get(c).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: wanted[k].clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: wanted[k].clone(),
                    message: format!("{cell:?} is not finite"),
                });
            }
            if k < N_FEATURES {
                data.push(v);
            } else if v == 0.0 || v == 1.0 {
                labels.push(v as u8);
            } else {
                return Err(Error::Parse {
                    row,
                    column: LABEL_COLUMN.into(),
                    message: format!("class {cell:?} is not 0 or 1"),
                });
            }
        }
    }
    if row == 0 {
        return Err(Error::Schema("no data rows".into()));
    }
    Dataset::new(Tensor::matrix(row, N_FEATURES, data)?, labels)
}

/// Writes `ds` with the standard header; numbers use the shortest exact form.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = ds.feature_names.clone();
    header.push(LABEL_COLUMN.into());
    w.write_record(&header)?;
    for (i, &y) in ds.labels.iter().enumerate() {
        let mut rec: Vec<String> = ds.features.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
