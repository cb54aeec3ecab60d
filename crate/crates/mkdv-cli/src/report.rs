//! Experiment reports: CSV rows (the machine-diff surface, byte-stable for a
//! fixed config and seed) and a JSON mirror carrying the config echo and an
//! environment stamp.

use serde::{Deserialize, Serialize};

use mkdv_lab::{LabError, Result};

pub const CSV_HEADER: &str =
    "experiment,index,abscissa,measured,expected_exponent,fitted_exponent,residual,pass";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub index: usize,
    pub abscissa: f64,
    pub measured: f64,
    pub expected_exponent: Option<f64>,
    pub fitted_exponent: Option<f64>,
    pub residual: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvStamp {
    pub artifact_version: String,
    pub grid: String,
    /// Unix seconds; lives only in the JSON mirror so CSV stays reproducible.
    pub timestamp: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_echo: String,
    pub environment: EnvStamp,
    pub rows: Vec<ReportRow>,
    /// Named scalar results (fitted exponents, residuals, extra metrics).
    pub summary: Vec<(String, String)>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config_echo: String, grid: String) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            config_echo,
            environment: EnvStamp {
                artifact_version: env!("CARGO_PKG_VERSION").to_string(),
                grid,
                timestamp: std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            },
            rows: Vec::new(),
            summary: Vec::new(),
            pass: true,
        }
    }
}

/// 17 significant digits: enough for a lossless f64 round trip.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.16e}")
}

fn parse_f64_field(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .map_err(|_| LabError::Argument(format!("bad float field `{s}` in CSV"))),
    }
}

pub fn emit_csv(report: &ExperimentReport) -> String {
    let mut out = String::with_capacity(64 * (report.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            report.experiment,
            row.index,
            fmt_f64(row.abscissa),
            fmt_f64(row.measured),
            opt(row.expected_exponent),
            opt(row.fitted_exponent),
            opt(row.residual),
            row.pass
        ));
    }
    out
}

/// Parse rows back from [`emit_csv`] output; numeric fields reproduce exactly.
pub fn parse_csv(text: &str) -> Result<(String, Vec<ReportRow>)> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(LabError::Argument(format!(
                "bad CSV header: {:?}",
                other.unwrap_or_default()
            )))
        }
    }
    let mut experiment = String::new();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 8 {
            return Err(LabError::Argument(format!(
                "row {}: expected 8 fields, got {}",
                i + 1,
                parts.len()
            )));
        }
        if experiment.is_empty() {
            experiment = parts[0].to_string();
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f64_field(s).map(Some)
            }
        };
        rows.push(ReportRow {
            index: parts[1]
                .parse()
                .map_err(|_| LabError::Argument(format!("bad index `{}`", parts[1])))?,
            abscissa: parse_f64_field(parts[2])?,
            measured: parse_f64_field(parts[3])?,
            expected_exponent: opt(parts[4])?,
            fitted_exponent: opt(parts[5])?,
            residual: opt(parts[6])?,
            pass: parts[7] == "true",
        });
    }
    Ok((experiment, rows))
}

pub fn emit_json(report: &ExperimentReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialization is infallible")
}

pub fn parse_json(text: &str) -> Result<ExperimentReport> {
    serde_json::from_str(text).map_err(|e| LabError::Argument(format!("malformed report: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report(rows: usize) -> ExperimentReport {
        let mut r = ExperimentReport::new("inflate", "experiment = inflate".into(), "L=1024 n=32768".into());
        for i in 0..rows {
            r.rows.push(ReportRow {
                index: i,
                abscissa: 16.0 * (i + 1) as f64,
                measured: 0.12345678901234568 * (i + 1) as f64,
                expected_exponent: Some(0.5),
                fitted_exponent: (i == rows.saturating_sub(1)).then_some(0.4987654321),
                residual: None,
                pass: true,
            });
        }
        r
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = emit_csv(&sample_report(0));
        assert_eq!(csv.trim_end(), CSV_HEADER);
    }

    #[test]
    fn single_point_is_two_lines() {
        let csv = emit_csv(&sample_report(1));
        assert_eq!(csv.trim_end().lines().count(), 2);
    }

    #[test]
    fn roundtrip_reproduces_numeric_fields_exactly() {
        let report = sample_report(5);
        let csv = emit_csv(&report);
        let (exp, rows) = parse_csv(&csv).unwrap();
        assert_eq!(exp, "inflate");
        assert_eq!(rows.len(), report.rows.len());
        for (a, b) in report.rows.iter().zip(&rows) {
            assert_eq!(a.abscissa.to_bits(), b.abscissa.to_bits());
            assert_eq!(a.measured.to_bits(), b.measured.to_bits());
            assert_eq!(a.expected_exponent, b.expected_exponent);
            assert_eq!(a.fitted_exponent, b.fitted_exponent);
            assert_eq!(a.residual, b.residual);
        }
    }

    #[test]
    fn json_roundtrip_is_lossless() {
        let report = sample_report(4);
        let back = parse_json(&emit_json(&report)).unwrap();
        assert_eq!(report.rows, back.rows);
        assert_eq!(report.summary, back.summary);
        assert_eq!(report.config_echo, back.config_echo);
        assert_eq!(report.environment.timestamp, back.environment.timestamp);
        for (a, b) in report.rows.iter().zip(&back.rows) {
            assert_eq!(a.measured.to_bits(), b.measured.to_bits());
        }
    }

    #[test]
    fn awkward_floats_survive() {
        let mut r = sample_report(0);
        for (i, v) in [f64::MIN_POSITIVE, 1.0 + f64::EPSILON, 1e308, -0.0, f64::INFINITY]
            .into_iter()
            .enumerate()
        {
            r.rows.push(ReportRow {
                index: i,
                abscissa: v,
                measured: -v,
                expected_exponent: None,
                fitted_exponent: None,
                residual: Some(v),
                pass: false,
            });
        }
        let (_, rows) = parse_csv(&emit_csv(&r)).unwrap();
        for (a, b) in r.rows.iter().zip(&rows) {
            assert_eq!(a.abscissa.to_bits(), b.abscissa.to_bits());
            assert_eq!(a.measured.to_bits(), b.measured.to_bits());
        }
    }
}
