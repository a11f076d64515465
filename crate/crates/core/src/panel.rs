//! The `n × p` sample matrix shared by simulation, estimation and IO.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    data: DMatrix<f64>,
    seed: Option<u64>,
    process_tag: String,
}

impl TimeSeriesPanel {
    /// Rows are time points, columns are nodes.
    pub fn new(data: DMatrix<f64>, process_tag: impl Into<String>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyInput("panel needs n >= 1 and p >= 1".into()));
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parse { line: k % data.nrows() + 1, msg: "non-finite panel entry".into() });
        }
        Ok(Self { data, seed: None, process_tag: process_tag.into() })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn process_tag(&self) -> &str {
        &self.process_tag
    }

    /// Writes `t,<prefix>1..<prefix>p` followed by one row per time point (t starts at 1).
    pub fn write_csv<W: Write>(&self, mut w: W, prefix: &str) -> std::io::Result<()> {
        let mut header = String::from("t");
        for k in 1..=self.p() {
            header.push_str(&format!(",{prefix}{k}"));
        }
        writeln!(w, "{header}")?;
        for t in 0..self.n() {
            let mut line = format!("{}", t + 1);
            for k in 0..self.p() {
                line.push_str(&format!(",{}", self.data[(t, k)]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads a panel CSV. A non-numeric first line is a header; a leading header column
    /// named `t` is dropped from every row.
    pub fn read_csv<R: BufRead>(r: R, process_tag: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut drop_first = false;
        let mut width = None;
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if rows.is_empty() && width.is_none() && fields.iter().any(|f| f.parse::<f64>().is_err()) {
                drop_first = fields[0].eq_ignore_ascii_case("t");
                width = Some(fields.len());
                continue;
            }
            if let Some(w) = width {
                if fields.len() != w {
                    return Err(Error::Parse {
                        line: k + 1,
                        msg: format!("expected {w} fields, found {}", fields.len()),
                    });
                }
            } else {
                width = Some(fields.len());
            }
            let skip = usize::from(drop_first);
            let mut row = Vec::with_capacity(fields.len() - skip);
            for f in &fields[skip..] {
                let v: f64 = f.parse().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad number `{f}`") })?;
                if !v.is_finite() {
                    return Err(Error::Parse { line: k + 1, msg: format!("non-finite value `{f}`") });
                }
                row.push(v);
            }
            rows.push(row);
        }
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyInput("panel file has no data rows".into()));
        }
        let (n, p) = (rows.len(), rows[0].len());
        Self::new(DMatrix::from_fn(n, p, |t, k| rows[t][k]), process_tag)
    }
}
