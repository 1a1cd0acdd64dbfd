//! Tagged scalar series against time, the unit of persistence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub name: String,
    pub columns: Vec<String>,
    pub t: Vec<f64>,
    /// One row per time, `columns.len()` entries each.
    pub rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        TimeSeries {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            t: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn scalar(name: &str, t: Vec<f64>, v: Vec<f64>) -> Self {
        TimeSeries {
            name: name.to_string(),
            columns: vec!["value".into()],
            rows: v.into_iter().map(|x| vec![x]).collect(),
            t,
        }
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::param(
                &self.name,
                format!("row of {} values for {} columns", row.len(), self.columns.len()),
            ));
        }
        if let Some(&last) = self.t.last() {
            if !(t > last) {
                return Err(Error::param(&self.name, format!("time {t} not after {last}")));
            }
        }
        self.t.push(t);
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t")?;
        for c in &self.columns {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for (t, row) in self.t.iter().zip(&self.rows) {
            write!(w, "{}", fmt17(*t))?;
            for v in row {
                write!(w, ",{}", fmt17(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Second-order finite-difference derivative on a possibly nonuniform grid:
/// three-point centered formula inside, one-sided three-point at the ends.
pub fn derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    assert_eq!(n, y.len());
    if n < 3 {
        return if n == 2 {
            let d = (y[1] - y[0]) / (t[1] - t[0]);
            vec![d, d]
        } else {
            vec![0.0; n]
        };
    }
    let three = |i0: usize, at: f64| {
        let (a, b, c) = (t[i0], t[i0 + 1], t[i0 + 2]);
        let la = (2.0 * at - b - c) / ((a - b) * (a - c));
        let lb = (2.0 * at - a - c) / ((b - a) * (b - c));
        let lc = (2.0 * at - a - b) / ((c - a) * (c - b));
        la * y[i0] + lb * y[i0 + 1] + lc * y[i0 + 2]
    };
    (0..n)
        .map(|i| match i {
            0 => three(0, t[0]),
            _ if i == n - 1 => three(n - 3, t[n - 1]),
            _ => three(i - 1, t[i]),
        })
        .collect()
}

/// Cumulative trapezoid integral starting from zero.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    for i in 0..t.len() {
        if i > 0 {
            acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
        }
        out.push(acc);
    }
    out
}
