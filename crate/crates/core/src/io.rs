//! On-disk formats. CSV is RFC 4180 with a header row; JSON is UTF-8 with
//! field names matching the in-memory types.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::ComplexityProfile;
use crate::error::Result;
use crate::pivot::SplitLaw;
use crate::stats::McReport;
use crate::step::StepFunction;

/// Columns `rank, comparisons`.
pub fn write_profile_csv<W: Write>(w: W, p: &ComplexityProfile) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["rank", "comparisons"])?;
    for (i, c) in p.counts.iter().enumerate() {
        out.write_record([(i + 1).to_string(), c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_profile_json<W: Write>(w: W, p: &ComplexityProfile) -> Result<()> {
    serde_json::to_writer_pretty(w, p)?;
    Ok(())
}

/// Columns `t, value`, one row per piece.
pub fn write_step_csv<W: Write>(w: W, f: &StepFunction) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "value"])?;
    for (t, v) in f.breakpoints().iter().zip(f.values()) {
        out.write_record([t.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_step_json<W: Write>(w: W, f: &StepFunction) -> Result<()> {
    serde_json::to_writer_pretty(w, f)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeMeta {
    pub alpha: f64,
    pub m: u32,
    pub seed: u64,
}

pub fn write_cascade_meta<W: Write>(w: W, meta: &CascadeMeta) -> Result<()> {
    serde_json::to_writer_pretty(w, meta)?;
    Ok(())
}

/// Columns `i, probability` over the support of the law.
pub fn write_pmf_csv<W: Write>(w: W, law: &SplitLaw) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["i", "probability"])?;
    for i in law.support() {
        out.write_record([i.to_string(), law.pmf(i).to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub const REPORT_COLUMNS: [&str; 7] = ["estimator", "samples", "point", "std_error", "target", "target_ref", "verdict"];

pub fn write_reports_csv<W: Write>(w: W, reports: &[McReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_COLUMNS)?;
    for r in reports {
        out.write_record([
            r.estimator.clone(),
            r.samples.to_string(),
            r.point.to_string(),
            r.std_error.to_string(),
            r.target.map(|t| t.to_string()).unwrap_or_default(),
            r.target_ref.clone().unwrap_or_default(),
            r.verdict().as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// A report row as serialised to JSON, verdict included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    #[serde(flatten)]
    pub report: McReport,
    pub verdict: crate::stats::Verdict,
}

impl From<&McReport> for ReportRecord {
    fn from(r: &McReport) -> Self {
        ReportRecord { report: r.clone(), verdict: r.verdict() }
    }
}

pub fn write_reports_json<W: Write>(w: W, reports: &[McReport]) -> Result<()> {
    let rows: Vec<ReportRecord> = reports.iter().map(ReportRecord::from).collect();
    serde_json::to_writer_pretty(w, &rows)?;
    Ok(())
}

/// One point of a plot-ready trend curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub x: f64,
    pub y: f64,
    pub series: String,
}

/// Long format: columns `x, y, series`.
pub fn write_trend_csv<W: Write>(w: W, points: &[TrendPoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "series"])?;
    for p in points {
        out.write_record([p.x.to_string(), p.y.to_string(), p.series.clone()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{profile, FindConfig, Variant};
    use crate::pivot::SubsampleRule;

    #[test]
    fn profile_csv_layout() {
        let cfg = FindConfig::new(Variant::ThreeVersion, SubsampleRule::new(1.0, 0.5).unwrap());
        let p = profile(3, &cfg, 1);
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rank,comparisons");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,"));
    }

    #[test]
    fn pmf_csv_rows() {
        let mut buf = Vec::new();
        write_pmf_csv(&mut buf, &SplitLaw::new(5, 3).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().collect::<Vec<_>>(), vec!["i,probability", "2,0.3", "3,0.4", "4,0.3"]);
    }

    #[test]
    fn report_rows_quote_commas() {
        let r = McReport::new("cov a,b", 10, 1.0, 0.1).with_target(1.0, "kernel");
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"cov a,b\",10,1,0.1,1,kernel,green"));
        let mut json = Vec::new();
        write_reports_json(&mut json, &[r]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(v[0]["verdict"], "green");
        assert_eq!(v[0]["estimator"], "cov a,b");
    }
}
