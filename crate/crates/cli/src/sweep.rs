//! One run per parameter value, in parallel, plus an aggregate table.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hyperminimal::Error;

use crate::config::{DataSpec, RunConfig};
use crate::pipeline::run;
use crate::report::{csv_error, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Resolution,
    Amplitude,
    L,
    BasisIndex,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub area: Option<f64>,
    pub euler_integral: Option<f64>,
    pub max_identity_residual: Option<f64>,
    pub verdict: Option<String>,
    pub mms_error: Option<f64>,
    pub passed: bool,
    pub error: Option<String>,
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<Report>,
}

fn as_count(value: f64, what: &str) -> Result<usize, Error> {
    if value >= 0.0 && value.fract() == 0.0 {
        Ok(value as usize)
    } else {
        Err(Error::InvalidParameter(format!("{what} must be a non-negative integer, got {value}")))
    }
}

/// `template` with `axis` set to `value`.
pub fn instantiate(template: &RunConfig, axis: Axis, value: f64) -> Result<RunConfig, Error> {
    let mut c = template.clone();
    match axis {
        Axis::Resolution => c.resolution = as_count(value, "resolution")?,
        Axis::L => {
            if value.fract() != 0.0 {
                return Err(Error::InvalidParameter(format!("l must be an integer, got {value}")));
            }
            c.l = value as i64;
        }
        Axis::Amplitude => match &mut c.data {
            DataSpec::BasisElement { amplitude, .. } | DataSpec::Random { amplitude } => *amplitude = value,
            DataSpec::Manufactured { u_star } => *u_star = value,
            _ => return Err(Error::InvalidParameter("the data spec has no amplitude".into())),
        },
        Axis::BasisIndex => match &mut c.data {
            DataSpec::BasisElement { index, .. } => *index = as_count(value, "basis index")?,
            _ => return Err(Error::InvalidParameter("basis index sweeps need basis_element data".into())),
        },
    }
    if let Some(dir) = &template.output_dir {
        c.output_dir = Some(dir.join(format!("{axis:?}_{value}").to_lowercase()));
    }
    Ok(c)
}

fn row(value: f64, report: &Report) -> SweepRow {
    SweepRow {
        value,
        area: report.invariants.as_ref().map(|i| i.area),
        euler_integral: report.invariants.as_ref().map(|i| i.euler_integral),
        max_identity_residual: report.max_identity_residual(),
        verdict: report.moduli.as_ref().map(|m| format!("{:?}", m.descriptor.verdict)),
        mms_error: report.mms_error,
        passed: report.passed,
        error: report.failed_at.as_ref().map(|f| format!("{}::{}: {}", f.module, f.operation, f.message)),
    }
}

/// Individual failures become rows with `error` set; the sweep itself only
/// fails when the aggregate table cannot be written.
pub fn sweep(template: &RunConfig, axis: Axis, values: &[f64]) -> Result<SweepOutcome, Error> {
    let results: Vec<(SweepRow, Report)> = values
        .par_iter()
        .map(|&v| match instantiate(template, axis, v) {
            Ok(c) => {
                let report = run(&c).report;
                (row(v, &report), report)
            }
            Err(e) => {
                let mut report = Report::new(template);
                report.failed_at = Some(crate::report::FailedAt {
                    module: "cli".into(),
                    operation: "instantiate".into(),
                    message: e.to_string(),
                    payload: crate::report::error_payload(&e),
                });
                (row(v, &report), report)
            }
        })
        .collect();
    let (rows, reports): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    if let Some(dir) = &template.output_dir {
        std::fs::create_dir_all(dir)?;
        write_table(&dir.join("sweep.csv"), &rows)?;
    }
    Ok(SweepOutcome { rows, reports })
}

pub fn write_table(path: &Path, rows: &[SweepRow]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
