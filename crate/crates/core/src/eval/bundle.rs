use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{EvalReport, REPORT_DIGITS};
use super::EvalError;
use crate::stats::round_sig;

pub const BUNDLE_FORMAT: &str = "reportbundle/1";

/// Several named evaluation reports rendered as one comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub format: String,
    pub entries: Vec<BundleEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub name: String,
    pub report: EvalReport,
}

fn fmt(x: f64) -> String {
    format!("{:.4}", round_sig(x, REPORT_DIGITS))
}

impl ReportBundle {
    pub fn new(entries: Vec<(String, EvalReport)>) -> Result<Self, EvalError> {
        if entries.is_empty() {
            return Err(EvalError::EmptyRows);
        }
        let entries = entries.into_iter().map(|(name, report)| BundleEntry { name, report }).collect();
        Ok(Self { format: BUNDLE_FORMAT.to_string(), entries })
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| run | prompts | Mean | Std | Top | Min | Cond |\n");
        out.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
        for e in &self.entries {
            let s = &e.report.summary;
            let cond = e.report.conditional_accuracy.map(fmt).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} |\n",
                e.name,
                e.report.rows.len(),
                fmt(s.mean),
                fmt(s.std),
                fmt(s.top_fraction),
                fmt(s.min_accuracy),
                cond
            ));
        }
        out
    }

    /// Long format: `run,prompt_id,accuracy`.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["run", "prompt_id", "accuracy"])?;
        for e in &self.entries {
            for r in &e.report.rows {
                w.write_record([
                    e.name.clone(),
                    r.prompt_id.clone(),
                    round_sig(r.accuracy, REPORT_DIGITS).to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| EvalError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Writes `report.md`, `report.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), EvalError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.md"), self.to_markdown())?;
        fs::write(dir.join("report.csv"), self.to_csv()?)?;
        let reports: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|e| {
                let report: serde_json::Value = serde_json::from_str(&e.report.to_json())?;
                Ok(serde_json::json!({ "name": e.name, "report": report }))
            })
            .collect::<Result<_, serde_json::Error>>()?;
        let json = serde_json::json!({ "format": self.format, "entries": reports });
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&json)? + "\n")?;
        Ok(())
    }
}
