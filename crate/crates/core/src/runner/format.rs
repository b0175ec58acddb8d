use std::fmt::Write as _;
use std::str::FromStr;

use super::{RunReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tap,
    Json,
    Xunit,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Tap => "tap",
            ReportFormat::Json => "json",
            ReportFormat::Xunit => "xml",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tap" => Ok(ReportFormat::Tap),
            "json" => Ok(ReportFormat::Json),
            "xunit" | "xml" => Ok(ReportFormat::Xunit),
            other => Err(format!("unknown report format {other:?} (expected tap, json or xunit)")),
        }
    }
}

pub fn serialize_report(report: &RunReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Tap => tap(report).into_bytes(),
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("run report serializes");
            out.push(b'\n');
            out
        }
        ReportFormat::Xunit => xunit(report).into_bytes(),
    }
}

fn tap(report: &RunReport) -> String {
    let mut out = String::from("TAP version 13\n");
    let _ = writeln!(out, "1..{}", report.records.len());
    for (i, r) in report.records.iter().enumerate() {
        let status = if r.verdict == Verdict::Pass { "ok" } else { "not ok" };
        let _ = writeln!(out, "{status} {} - {} {}", i + 1, r.name(), r.verdict.as_str());
        match r.verdict {
            Verdict::Pass => {}
            Verdict::Fail => {
                let _ = writeln!(out, "# exit code {}", r.exit_code.unwrap_or_default());
            }
            Verdict::Error | Verdict::Timeout => {
                let detail = r.message.as_deref().unwrap_or("no detail");
                let _ = writeln!(out, "# {}: {}", r.verdict.as_str(), one_line(detail));
            }
        }
    }
    out
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

fn xunit(report: &RunReport) -> String {
    let t = &report.totals;
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<testsuite name=\"citkit\" tests=\"{}\" failures=\"{}\" errors=\"{}\" skipped=\"0\" time=\"{:.3}\">",
        report.records.len(),
        t.fail,
        t.error + t.timeout,
        report.wall_time
    );
    for r in &report.records {
        let _ = write!(
            out,
            "  <testcase classname=\"citkit\" name=\"{}\" time=\"{:.3}\"",
            escape(&r.name()),
            r.duration
        );
        match r.verdict {
            Verdict::Pass => out.push_str("/>\n"),
            Verdict::Fail => {
                let _ = writeln!(
                    out,
                    ">\n    <failure message=\"exit code {}\"/>\n  </testcase>",
                    r.exit_code.unwrap_or_default()
                );
            }
            Verdict::Error | Verdict::Timeout => {
                let _ = writeln!(
                    out,
                    ">\n    <error type=\"{}\" message=\"{}\"/>\n  </testcase>",
                    r.verdict.as_str(),
                    escape(r.message.as_deref().unwrap_or(""))
                );
            }
        }
    }
    out.push_str("</testsuite>\n");
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => {}
            c => out.push(c),
        }
    }
    out
}
