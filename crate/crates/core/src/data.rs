//! Row-major observation matrix and its CSV text form.

use std::io::{BufRead, Write};

use nalgebra::DVector;

use crate::error::{Error, Result};

/// `T` observations in `R^n`, stored row-major so each sample is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "data dimension must be positive".into(),
            ));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: values.len() % dim,
            });
        }
        Ok(Self { dim, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(dim, values)
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self {
            dim,
            values: Vec::with_capacity(dim * rows),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.dim);
        self.values.extend_from_slice(row);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn row_vector(&self, i: usize) -> DVector<f64> {
        DVector::from_column_slice(self.row(i))
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> DataMatrix {
        DataMatrix {
            dim: self.dim,
            values: self.values[start * self.dim..end * self.dim].to_vec(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> DataMatrix {
        let mut out = DataMatrix::with_capacity(self.dim, idx.len());
        for &i in idx {
            out.push(self.row(i));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut acc = vec![crate::numeric::KahanSum::default(); self.dim];
        for row in self.rows() {
            for (a, &v) in acc.iter_mut().zip(row) {
                a.add(v);
            }
        }
        let t = self.len() as f64;
        DVector::from_iterator(self.dim, acc.into_iter().map(|a| a.total() / t))
    }

    /// Parses comma-separated rows. A first line that does not parse as numbers is
    /// treated as a header.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut dim = 0;
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if dim == 0 && values.is_empty() => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
            };
            if dim == 0 {
                dim = row.len();
            } else if row.len() != dim {
                return Err(Error::Parse(format!(
                    "line {}: expected {dim} columns, found {}",
                    lineno + 1,
                    row.len()
                )));
            }
            values.extend(row);
        }
        if dim == 0 {
            return Err(Error::Parse("no numeric rows found".into()));
        }
        Self::new(dim, values)
    }

    pub fn read_csv_path(path: &std::path::Path) -> Result<Self> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    /// Writes one row per sample with 17 significant digits so values round-trip exactly.
    pub fn write_csv<W: Write>(&self, mut w: W, header: Option<&[String]>) -> Result<()> {
        if let Some(names) = header {
            writeln!(w, "{}", names.join(","))?;
        }
        let mut line = String::new();
        for row in self.rows() {
            line.clear();
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: &std::path::Path, header: Option<&[String]>) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w, header)?;
        w.flush()?;
        Ok(())
    }
}
