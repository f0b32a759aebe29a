//! Sample panels, lag alignment and standardization.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `T × n` matrix of observations with one named column per variable.
///
/// Storage is column-major so that lagged views of a variable are plain
/// subslices of its column.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    columns: Vec<Vec<f64>>,
    names: Vec<String>,
}

/// A variable observed `lag` steps before the target time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaggedVar {
    pub var: usize,
    pub lag: usize,
}

impl LaggedVar {
    pub fn new(var: usize, lag: usize) -> Self {
        LaggedVar { var, lag }
    }

    /// Ordering used by the backward phase: descending lag, then ascending
    /// variable. Nearer lags screen off farther ones, so the farther copy of
    /// a redundant pair is tested while the nearer one still conditions it.
    pub fn removal_key(&self) -> (std::cmp::Reverse<usize>, usize) {
        (std::cmp::Reverse(self.lag), self.var)
    }
}

impl fmt::Display for LaggedVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}(t-{})", self.var, self.lag)
    }
}

impl TimeSeriesPanel {
    /// Builds a panel from per-variable columns.
    pub fn from_columns(columns: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidPanel("panel has no variables".into()));
        }
        if names.len() != columns.len() {
            return Err(Error::InvalidPanel(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let t = columns[0].len();
        if t < 2 {
            return Err(Error::InvalidPanel(format!(
                "need at least 2 time steps, got {t}"
            )));
        }
        let mut seen = HashSet::new();
        for (name, col) in names.iter().zip(&columns) {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidPanel(format!("duplicate variable name `{name}`")));
            }
            if col.len() != t {
                return Err(Error::InvalidPanel(format!(
                    "column `{name}` has {} rows, expected {t}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidPanel(format!(
                    "non-finite value in column `{name}` at time step {row}"
                )));
            }
        }
        Ok(TimeSeriesPanel { columns, names })
    }

    /// Builds a panel from row-major samples (`rows[t][j]`).
    pub fn from_rows(rows: &[Vec<f64>], names: Vec<String>) -> Result<Self> {
        let n = names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); n];
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidPanel(format!(
                    "row {t} has {} values, expected {n}",
                    row.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(columns, names)
    }

    /// Default names `X1..Xn`.
    pub fn default_names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("X{i}")).collect()
    }

    pub fn n_steps(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, var: usize) -> &[f64] {
        &self.columns[var]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Row-major copy of the values.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_steps())
            .map(|t| self.columns.iter().map(|c| c[t]).collect())
            .collect()
    }

    /// The aligned view of `lagged` over the common window that drops the
    /// first `tau_max` rows: element `r` is `x[var][r + tau_max - lag]`.
    pub fn lagged_column(&self, lagged: LaggedVar, tau_max: usize) -> Result<&[f64]> {
        check_alignment(self, &[lagged], tau_max)?;
        let t = self.n_steps();
        Ok(&self.columns[lagged.var][tau_max - lagged.lag..t - lagged.lag])
    }

    /// The target column over the common window: `x[target][tau_max..]`.
    pub fn target_column(&self, target: usize, tau_max: usize) -> Result<&[f64]> {
        if target >= self.n_vars() {
            return Err(Error::Config(format!(
                "target {target} out of range for {} variables",
                self.n_vars()
            )));
        }
        if tau_max >= self.n_steps() {
            return Err(insufficient(tau_max, self.n_steps()));
        }
        Ok(&self.columns[target][tau_max..])
    }

    /// Reads a panel from CSV: a header row of names, then one row per time step.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(e, 1))?;
        let names: Vec<String> = headers.iter().map(str::to_owned).collect();
        if names.is_empty() || names.iter().any(String::is_empty) {
            return Err(Error::Parse {
                row: 1,
                column: names.iter().position(String::is_empty).map_or(1, |c| c + 1),
                message: "header must name every column".into(),
            });
        }
        let n = names.len();
        let mut columns = vec![Vec::new(); n];
        for (i, record) in rdr.records().enumerate() {
            let row = i + 2;
            let record = record.map_err(|e| csv_error(e, row))?;
            if record.len() != n {
                return Err(Error::Parse {
                    row,
                    column: record.len().min(n) + 1,
                    message: format!("expected {n} fields, found {}", record.len()),
                });
            }
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    row,
                    column: j + 1,
                    message: format!("`{field}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        column: j + 1,
                        message: format!("non-finite value `{field}`"),
                    });
                }
                columns[j].push(v);
            }
        }
        Self::from_columns(columns, names)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.to_csv_writer(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_writer<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{}", self.names.join(","))?;
        let mut line = String::new();
        for t in 0..self.n_steps() {
            line.clear();
            for (j, col) in self.columns.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format_float(col[t]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Shortest decimal form that parses back to the same bits.
pub(crate) fn format_float(v: f64) -> String {
    let s = format!("{v}");
    if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn csv_error(e: csv::Error, row: usize) -> Error {
    Error::Parse {
        row: e.position().map_or(row, |p| p.line() as usize),
        column: 1,
        message: e.to_string(),
    }
}

fn insufficient(tau_max: usize, t: usize) -> Error {
    Error::InsufficientData(format!(
        "tau_max={tau_max} leaves no aligned rows in a series of length {t}"
    ))
}

fn check_alignment(panel: &TimeSeriesPanel, regressors: &[LaggedVar], tau_max: usize) -> Result<()> {
    if tau_max >= panel.n_steps() {
        return Err(insufficient(tau_max, panel.n_steps()));
    }
    for r in regressors {
        if r.lag == 0 {
            return Err(Error::Config(format!(
                "{r}: lag must be at least 1 (no contemporaneous regressors)"
            )));
        }
        if r.lag > tau_max {
            return Err(Error::Config(format!("{r}: lag exceeds tau_max={tau_max}")));
        }
        if r.var >= panel.n_vars() {
            return Err(Error::Config(format!(
                "{r}: variable out of range for {} variables",
                panel.n_vars()
            )));
        }
    }
    Ok(())
}

/// Target and regressor columns aligned on the window `[tau_max, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub target: Vec<f64>,
    /// One entry per regressor, each of length `T - tau_max`.
    pub regressors: Vec<Vec<f64>>,
}

impl Design {
    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    /// Regressor matrix in row-major order.
    pub fn regressor_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows())
            .map(|r| self.regressors.iter().map(|c| c[r]).collect())
            .collect()
    }
}

/// Aligns `target` against the lagged `regressors`, dropping the first
/// `tau_max` rows regardless of each regressor's own lag.
pub fn build_design(
    panel: &TimeSeriesPanel,
    target: usize,
    regressors: &[LaggedVar],
    tau_max: usize,
) -> Result<Design> {
    check_alignment(panel, regressors, tau_max)?;
    let target = panel.target_column(target, tau_max)?.to_vec();
    let regressors = regressors
        .iter()
        .map(|&r| panel.lagged_column(r, tau_max).map(<[f64]>::to_vec))
        .collect::<Result<_>>()?;
    Ok(Design { target, regressors })
}

/// Maps every column to sample mean 0 and sample standard deviation 1
/// (denominator `T - 1`) with one affine map over the full series.
pub fn standardize(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    let columns = panel
        .columns
        .iter()
        .zip(&panel.names)
        .map(|(col, name)| {
            let t = col.len() as f64;
            let mean = col.iter().sum::<f64>() / t;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
            let sd = var.sqrt();
            if !(sd > 0.0) || col.iter().all(|&v| v == col[0]) {
                return Err(Error::DegenerateVariable { name: name.clone() });
            }
            Ok(col.iter().map(|v| (v - mean) / sd).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeriesPanel {
        columns,
        names: panel.names.clone(),
    })
}
