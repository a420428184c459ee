//! Report and metric writers. Outputs carry no timestamps or timings, so
//! identical runs produce identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use gesc_core::train::EpochMetrics;
use gesc_core::verify::{BandEnergy, JobResult, VerificationReport};
use serde::Serialize;

use crate::bundle::write_json;
use crate::error::{IoError, IoResult};

/// A report and whether it gates the exit status.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checked {
    #[serde(flatten)]
    pub report: VerificationReport,
    pub hard: bool,
}

impl Checked {
    pub fn hard(report: VerificationReport) -> Self {
        Self { report, hard: true }
    }

    pub fn soft(report: VerificationReport) -> Self {
        Self { report, hard: false }
    }

    pub fn failed_hard(&self) -> bool {
        self.hard && !self.report.pass
    }
}

/// File name for a property: path separators and `=` become `_`.
pub fn report_file_name(property: &str) -> String {
    let stem: String = property.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
    format!("{stem}.json")
}

/// One JSON file per report under `dir`.
pub fn write_reports(dir: &Path, reports: &[Checked]) -> IoResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    reports
        .iter()
        .map(|r| {
            let path = dir.join(report_file_name(&r.report.property));
            write_json(&path, r)?;
            Ok(path)
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> IoError {
    IoError::Format(format!("{}: {e}", path.display()))
}

/// Serializes rows with a header line.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> IoResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

#[derive(Serialize)]
struct BandRow<'a> {
    depth: usize,
    eta_sic: f64,
    band: &'a str,
    laplacian_lo: f64,
    laplacian_hi: f64,
    adjacency_lo: f64,
    adjacency_hi: f64,
    energy: f64,
    fraction: f64,
}

pub fn write_band_csv(path: &Path, rows: &[BandEnergy]) -> IoResult<()> {
    let flat: Vec<BandRow<'_>> = rows
        .iter()
        .map(|r| BandRow {
            depth: r.depth,
            eta_sic: r.eta_sic,
            band: &r.band,
            laplacian_lo: r.laplacian_range.0,
            laplacian_hi: r.laplacian_range.1,
            adjacency_lo: r.adjacency_range.0,
            adjacency_hi: r.adjacency_range.1,
            energy: r.energy,
            fraction: r.fraction,
        })
        .collect();
    write_csv(path, &flat)
}

pub fn write_jobs_csv(path: &Path, rows: &[JobResult]) -> IoResult<()> {
    write_csv(path, rows)
}

/// Per-epoch metrics as JSON lines.
pub struct MetricsLog {
    path: PathBuf,
    out: std::io::BufWriter<fs::File>,
}

impl MetricsLog {
    pub fn create(path: &Path) -> IoResult<Self> {
        let file = fs::File::create(path).map_err(|e| IoError::io(path, e))?;
        Ok(Self {
            path: path.into(),
            out: std::io::BufWriter::new(file),
        })
    }

    pub fn record(&mut self, m: &EpochMetrics) -> IoResult<()> {
        let line = serde_json::to_string(m).map_err(|e| IoError::json(&self.path, e))?;
        writeln!(self.out, "{line}").map_err(|e| IoError::io(&self.path, e))
    }

    pub fn finish(mut self) -> IoResult<()> {
        self.out.flush().map_err(|e| IoError::io(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn property_names_map_to_flat_file_names() {
        assert_eq!(report_file_name("gauge/full/alpha=0.25"), "gauge_full_alpha_0.25.json");
        assert_eq!(report_file_name("sic/self_energy"), "sic_self_energy.json");
    }

    #[test]
    fn soft_failures_do_not_gate() {
        let bad = VerificationReport::new("x", 1, 2.0, 1.0);
        assert!(Checked::hard(bad.clone()).failed_hard());
        assert!(!Checked::soft(bad).failed_hard());
        assert!(!Checked::hard(VerificationReport::new("y", 1, 0.0, 1.0)).failed_hard());
    }
}
