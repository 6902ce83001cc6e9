//! CSV tables of trajectories and convergence sweeps.

use std::path::Path;

use crate::error::{Error, Result};
use crate::invariants::InvariantReport;
use crate::packet::{canonical_dim, CanonicalState};

/// Column names of a trajectory file in dimension `d`.
pub fn trajectory_header(d: usize) -> Vec<String> {
    let dd = canonical_dim(d);
    let mut h = vec!["t".to_string()];
    h.extend((0..dd).map(|i| format!("qb_{i}")));
    h.extend((0..dd).map(|i| format!("pb_{i}")));
    h.extend(invariant_columns(d));
    h.push("S".into());
    h
}

/// Names of the monitored quantities, in file order.
pub fn invariant_columns(d: usize) -> Vec<String> {
    let mut h = vec![
        "sympl_residual".to_string(),
        "modified_residual".to_string(),
        "linear_momentum".to_string(),
    ];
    for i in 0..d {
        for j in (i + 1)..d {
            h.push(format!("L_{}_{}", i + 1, j + 1));
        }
    }
    h.push("energy".into());
    h
}

pub fn invariant_values(r: &InvariantReport) -> Vec<f64> {
    let d = r.angular_momentum.nrows();
    let mut v = vec![r.sympl_residual, r.modified_boris_residual, r.linear_momentum];
    for i in 0..d {
        for j in (i + 1)..d {
            v.push(r.angular_momentum[(i, j)]);
        }
    }
    v.push(r.energy);
    v
}

pub fn trajectory_row(state: &CanonicalState, report: &InvariantReport) -> Vec<f64> {
    let mut row = vec![state.t];
    row.extend(state.qb.iter());
    row.extend(state.pb.iter());
    row.extend(invariant_values(report));
    row.push(state.phase);
    row
}

/// Full-precision rendering; parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// A parsed numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut w = csv::Writer::from_path(path)?;
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_value(v)))?;
        }
        Ok(())
    }

    /// Empty fields read as NaN.
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    if f.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        f.parse::<f64>()
                            .map_err(|e| Error::Config(format!("{}: bad number '{f}': {e}", path.display())))
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Table { header, rows })
    }
}
