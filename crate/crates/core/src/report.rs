//! CSV and JSON trial reports.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{Algorithm, TrialStats};
use crate::num::round_significant;
use crate::Preset;

/// Significant digits kept for every float in a report.
pub const REPORT_DIGITS: usize = 9;

pub const CSV_HEADER: [&str; 13] = [
    "algorithm",
    "k",
    "d",
    "eps",
    "delta",
    "alpha",
    "preset",
    "n_trials",
    "success_rate",
    "mean_max_error",
    "total_samples_mean",
    "total_samples_predicted",
    "seed_base",
];

/// One report line. Floats are stored already rounded to
/// [`REPORT_DIGITS`] significant digits, so a written and re-read row
/// compares equal to the original.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    pub k: usize,
    pub d: u32,
    pub eps: f64,
    pub delta: f64,
    /// Absent for algorithms that do not take an alpha.
    pub alpha: Option<f64>,
    pub preset: Preset,
    pub n_trials: usize,
    pub success_rate: f64,
    pub mean_max_error: f64,
    pub total_samples_mean: f64,
    pub total_samples_predicted: u64,
    pub seed_base: u64,
}

impl ReportRow {
    pub fn from_stats(stats: &TrialStats) -> Self {
        let r = |x: f64| round_significant(x, REPORT_DIGITS);
        ReportRow {
            algorithm: stats.algorithm,
            k: stats.k,
            d: stats.d,
            eps: r(stats.config.eps),
            delta: r(stats.config.delta),
            alpha: stats.algorithm.uses_alpha().then(|| r(stats.config.alpha)),
            preset: stats.config.preset,
            n_trials: stats.n_trials,
            success_rate: r(stats.success_rate()),
            mean_max_error: r(stats.mean_max_error()),
            total_samples_mean: r(stats.mean_total_samples()),
            total_samples_predicted: stats.predicted_total,
            seed_base: stats.seed_base,
        }
    }
}

impl From<&TrialStats> for ReportRow {
    fn from(stats: &TrialStats) -> Self {
        ReportRow::from_stats(stats)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!("unknown report format `{s}`"))),
        }
    }
}

fn format_float(x: f64) -> String {
    let x = round_significant(x, REPORT_DIGITS);
    format!("{x}")
}

fn csv_fields(row: &ReportRow) -> [String; 13] {
    [
        row.algorithm.to_string(),
        row.k.to_string(),
        row.d.to_string(),
        format_float(row.eps),
        format_float(row.delta),
        row.alpha.map(format_float).unwrap_or_default(),
        row.preset.to_string(),
        row.n_trials.to_string(),
        format_float(row.success_rate),
        format_float(row.mean_max_error),
        format_float(row.total_samples_mean),
        row.total_samples_predicted.to_string(),
        row.seed_base.to_string(),
    ]
}

/// Writes rows to `out` in the given format.
pub fn write_report_to<W: Write>(rows: &[ReportRow], format: ReportFormat, out: W) -> Result<()> {
    let here = Path::new("<stream>");
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let wrap = |source| Error::Csv {
                path: here.to_path_buf(),
                source,
            };
            w.write_record(CSV_HEADER).map_err(wrap)?;
            for row in rows {
                w.write_record(csv_fields(row)).map_err(wrap)?;
            }
            w.flush().map_err(|source| Error::Io {
                path: here.to_path_buf(),
                source,
            })
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows).map_err(|source| Error::Json {
                path: here.to_path_buf(),
                source,
            })?;
            writeln!(out).map_err(|source| Error::Io {
                path: here.to_path_buf(),
                source,
            })
        }
    }
}

/// Writes rows to `path`; errors carry the path.
pub fn write_report(rows: &[ReportRow], format: ReportFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_report_to(rows, format, BufWriter::new(file)).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    let path = path.to_path_buf();
    match e {
        Error::Io { source, .. } => Error::Io { path, source },
        Error::Json { source, .. } => Error::Json { path, source },
        Error::Csv { source, .. } => Error::Csv { path, source },
        other => other,
    }
}

pub fn read_json_report(path: &Path) -> Result<Vec<ReportRow>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::RunConfig;
    use crate::oracle::SampleSizeConfig;

    fn stats() -> TrialStats {
        TrialStats {
            algorithm: Algorithm::Nr1,
            k: 4,
            d: 4,
            config: RunConfig {
                eps: 0.1,
                delta: 0.1,
                alpha: 0.5,
                preset: Preset::Desk,
                sample: SampleSizeConfig::default(),
                max_rounds: None,
            },
            opt: 0.05,
            bound: 0.225,
            n_trials: 3,
            seed_base: 42,
            successes: 2,
            predicted_total: 1234,
            trials: vec![],
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_report_to(&[], ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn one_row_csv() {
        let mut s = stats();
        s.trials = (0..3)
            .map(|i| crate::harness::TrialRecord {
                index: i,
                seed: 42 + i as u64,
                max_error: 0.05,
                success: i < 2,
                total_samples: 1234,
            })
            .collect();
        let row = ReportRow::from_stats(&s);
        let mut buf = Vec::new();
        write_report_to(&[row], ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[1],
            "nr1,4,4,0.1,0.1,0.5,desk,3,0.666666667,0.05,1234,1234,42"
        );
    }

    #[test]
    fn realizable_rows_leave_alpha_empty() {
        let mut s = stats();
        s.algorithm = Algorithm::R1;
        s.trials = vec![crate::harness::TrialRecord {
            index: 0,
            seed: 42,
            max_error: 0.0,
            success: true,
            total_samples: 10,
        }];
        s.n_trials = 1;
        let row = ReportRow::from_stats(&s);
        assert_eq!(row.alpha, None);
        assert_eq!(csv_fields(&row)[5], "");
    }

    #[test]
    fn json_round_trip() {
        let mut s = stats();
        s.trials = vec![crate::harness::TrialRecord {
            index: 0,
            seed: 42,
            max_error: 0.123456789123,
            success: true,
            total_samples: 1001,
        }];
        s.n_trials = 1;
        let row = ReportRow::from_stats(&s);
        assert_eq!(row.mean_max_error, 0.123456789);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_report(std::slice::from_ref(&row), ReportFormat::Json, &path).unwrap();
        assert_eq!(read_json_report(&path).unwrap(), vec![row]);
    }

    #[test]
    fn io_errors_name_the_path() {
        let path = Path::new("/nonexistent-dir/report.csv");
        let err = write_report(&[], ReportFormat::Csv, path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/report.csv"));
    }
}
