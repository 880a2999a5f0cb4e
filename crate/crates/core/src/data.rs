//! Observational samples `(X, T, Y)` and treatment-arm views.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::subset::SubsetId;

/// An `n x p` predictor matrix with a binary treatment and observed outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    t: Vec<u8>,
    y: Vec<f64>,
    column_names: Vec<String>,
}

impl Dataset {
    /// Validates shapes, treatment labels, and finiteness.
    pub fn new(x: DMatrix<f64>, t: Vec<u8>, y: Vec<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|i| format!("X{i}")).collect();
        Self::with_names(x, t, y, names)
    }

    pub fn with_names(
        x: DMatrix<f64>,
        t: Vec<u8>,
        y: Vec<f64>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 {
            return Err(Error::TooFewObservations { needed: 2, have: n });
        }
        if p == 0 {
            return Err(Error::EmptyDimension);
        }
        if t.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "x has {n} rows but t has {} and y has {}",
                t.len(),
                y.len()
            )));
        }
        if column_names.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "{} column names for {p} columns",
                column_names.len()
            )));
        }
        if let Some(bad) = t.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidData(format!("treatment value {bad} is not 0/1")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("predictor matrix has non-finite values".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("outcome has non-finite values".into()));
        }
        Ok(Self {
            x,
            t,
            y,
            column_names,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn t(&self) -> &[u8] {
        &self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Same `T` and `Y`, new predictors.
    pub fn with_predictors(&self, x: DMatrix<f64>) -> Result<Self> {
        Self::with_names(x, self.t.clone(), self.y.clone(), self.column_names.clone())
    }

    /// Loads the CSV schema `T,Y,X1..Xp` (header required, any column order).
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let t_col = find("T").ok_or_else(|| Error::InvalidData("missing column T".into()))?;
        let y_col = find("Y").ok_or_else(|| Error::InvalidData("missing column Y".into()))?;

        let mut x_cols = Vec::new();
        for (i, h) in headers.iter().enumerate() {
            if i == t_col || i == y_col {
                continue;
            }
            let idx = h
                .strip_prefix('X')
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::InvalidData(format!("unexpected column `{h}`")))?;
            x_cols.push((idx, i));
        }
        x_cols.sort_unstable();
        for (k, &(idx, _)) in x_cols.iter().enumerate() {
            if idx != k + 1 {
                return Err(Error::InvalidData(format!(
                    "predictor columns must be X1..Xp without gaps; found X{idx} at position {}",
                    k + 1
                )));
            }
        }
        let p = x_cols.len();
        if p == 0 {
            return Err(Error::InvalidData("no predictor columns".into()));
        }
        crate::subset::check_dimension(p)?;

        let mut t = Vec::new();
        let mut y = Vec::new();
        let mut flat = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = line + 2;
            let field = |i: usize| -> Result<&str> {
                rec.get(i)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| Error::InvalidData(format!("row {row}: missing value")))
            };
            let tv = field(t_col)?;
            let tv: u8 = match tv.parse::<f64>() {
                Ok(v) if v == 0.0 => 0,
                Ok(v) if v == 1.0 => 1,
                _ => {
                    return Err(Error::InvalidData(format!(
                        "row {row}: treatment `{tv}` is not 0/1"
                    )))
                }
            };
            t.push(tv);
            y.push(parse_real(field(y_col)?, row)?);
            for &(_, c) in &x_cols {
                flat.push(parse_real(field(c)?, row)?);
            }
        }
        let n = t.len();
        let x = DMatrix::from_row_slice(n, p, &flat);
        Self::new(x, t, y)
    }

    /// Writes the CSV schema read by [`Dataset::from_csv_reader`].
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["T".to_string(), "Y".to_string()];
        header.extend((1..=self.p()).map(|i| format!("X{i}")));
        w.write_record(&header)?;
        for r in 0..self.n() {
            let mut rec = vec![self.t[r].to_string(), format!("{:e}", self.y[r])];
            rec.extend((0..self.p()).map(|c| format!("{:e}", self.x[(r, c)])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_real(s: &str, row: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::InvalidData(format!("row {row}: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::InvalidData(format!("row {row}: non-finite value `{s}`")));
    }
    Ok(v)
}

/// The rows of one treatment arm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupView {
    pub arm: u8,
    pub rows: Vec<usize>,
}

impl GroupView {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Gathers this arm's rows of `m`.
    pub fn select_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m.select_rows(self.rows.iter())
    }

    pub fn select<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.rows.iter().map(|&r| v[r]).collect()
    }
}

/// Partitions the rows by treatment label.
pub fn split_by_treatment(d: &Dataset) -> Result<(GroupView, GroupView)> {
    let (mut r0, mut r1) = (Vec::new(), Vec::new());
    for (i, &t) in d.t().iter().enumerate() {
        if t == 0 {
            r0.push(i);
        } else {
            r1.push(i);
        }
    }
    if r0.is_empty() {
        return Err(Error::EmptyGroup { arm: 0 });
    }
    if r1.is_empty() {
        return Err(Error::EmptyGroup { arm: 1 });
    }
    Ok((GroupView { arm: 0, rows: r0 }, GroupView { arm: 1, rows: r1 }))
}

/// Columns of `m` indexed by `a`, in ascending order.
pub fn subset_columns(m: &DMatrix<f64>, a: SubsetId) -> DMatrix<f64> {
    debug_assert_eq!(m.ncols(), a.dimension());
    m.select_columns(a.positions().collect::<Vec<_>>().iter())
}

/// Rows of `m` indexed by `a`, in ascending order.
pub fn subset_rows(m: &DMatrix<f64>, a: SubsetId) -> DMatrix<f64> {
    debug_assert_eq!(m.nrows(), a.dimension());
    m.select_rows(a.positions().collect::<Vec<_>>().iter())
}

/// The principal block `m[a, b]`.
pub fn block(m: &DMatrix<f64>, rows: SubsetId, cols: SubsetId) -> DMatrix<f64> {
    let r: Vec<usize> = rows.positions().collect();
    let c: Vec<usize> = cols.positions().collect();
    DMatrix::from_fn(r.len(), c.len(), |i, j| m[(r[i], c[j])])
}
