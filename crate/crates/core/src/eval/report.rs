use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{summarize, PromptEvalRow, Summary};
use super::EvalError;
use crate::stats::round_sig;

pub const REPORT_FORMAT: &str = "evalreport/1";

/// Significant digits kept for every float written to disk.
pub const REPORT_DIGITS: usize = 12;

/// Per-prompt rows plus their summary. Rows are sorted by prompt id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub rows: Vec<PromptEvalRow>,
    pub summary: Summary,
    /// Rows for perturbed prompts; empty when no conditional accuracy was measured.
    #[serde(default)]
    pub adversarial_rows: Vec<PromptEvalRow>,
    /// Macro mean over `adversarial_rows`.
    #[serde(default)]
    pub conditional_accuracy: Option<f64>,
}

impl EvalReport {
    pub fn from_rows(mut rows: Vec<PromptEvalRow>, top_threshold: f64) -> Result<Self, EvalError> {
        rows.sort_by(|a, b| a.prompt_id.cmp(&b.prompt_id));
        let summary = summarize(&rows, top_threshold)?;
        Ok(Self {
            format: REPORT_FORMAT.to_string(),
            rows,
            summary,
            adversarial_rows: Vec::new(),
            conditional_accuracy: None,
        })
    }

    pub fn with_adversarial(mut self, mut rows: Vec<PromptEvalRow>) -> Result<Self, EvalError> {
        rows.sort_by(|a, b| a.prompt_id.cmp(&b.prompt_id));
        self.conditional_accuracy = Some(summarize(&rows, 0.0)?.mean);
        self.adversarial_rows = rows;
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        let mut r = self.clone();
        let round = |x: &mut f64| *x = round_sig(*x, REPORT_DIGITS);
        for row in r.rows.iter_mut().chain(r.adversarial_rows.iter_mut()) {
            round(&mut row.accuracy);
        }
        let s = &mut r.summary;
        for x in [&mut s.mean, &mut s.std, &mut s.min_accuracy, &mut s.max_accuracy, &mut s.top_fraction] {
            round(x);
        }
        if let Some(c) = r.conditional_accuracy.as_mut() {
            round(c);
        }
        let mut out = serde_json::to_string_pretty(&r).expect("report serializes");
        out.push('\n');
        out
    }

    /// Parses a report, rebuilding every derived float from the integer counts.
    /// Stored floats must agree with the rebuilt ones to the written precision.
    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let stored: EvalReport = serde_json::from_str(text)?;
        if stored.format != REPORT_FORMAT {
            return Err(EvalError::Malformed(format!("unknown format {:?}", stored.format)));
        }
        let rebuild = |rows: &[PromptEvalRow]| -> Result<Vec<PromptEvalRow>, EvalError> {
            rows.iter()
                .map(|r| {
                    if r.n_total == 0 || r.n_correct > r.n_total {
                        return Err(EvalError::Malformed(format!("bad counts for {}", r.prompt_id)));
                    }
                    Ok(PromptEvalRow::new(r.prompt_id.clone(), r.n_correct, r.n_total))
                })
                .collect()
        };
        let mut rebuilt = EvalReport::from_rows(rebuild(&stored.rows)?, stored.summary.top_threshold)?;
        if !stored.adversarial_rows.is_empty() {
            rebuilt = rebuilt.with_adversarial(rebuild(&stored.adversarial_rows)?)?;
        }
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * b.abs().max(1e-300) || round_sig(b, REPORT_DIGITS) == a;
        let (s, t) = (&stored.summary, &rebuilt.summary);
        let pairs = [
            (s.mean, t.mean),
            (s.std, t.std),
            (s.min_accuracy, t.min_accuracy),
            (s.max_accuracy, t.max_accuracy),
            (s.top_fraction, t.top_fraction),
        ];
        let row_pairs = stored
            .rows
            .iter()
            .zip(&rebuilt.rows)
            .chain(stored.adversarial_rows.iter().zip(&rebuilt.adversarial_rows))
            .map(|(a, b)| (a.accuracy, b.accuracy));
        if !pairs.into_iter().chain(row_pairs).all(|(a, b)| close(a, b)) {
            return Err(EvalError::Malformed("stored values disagree with counts".into()));
        }
        match (stored.conditional_accuracy, rebuilt.conditional_accuracy) {
            (Some(a), Some(b)) if close(a, b) => {}
            (None, None) => {}
            _ => return Err(EvalError::Malformed("conditional accuracy disagrees with rows".into())),
        }
        Ok(rebuilt)
    }

    /// `prompt_id,accuracy` for the main rows.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["prompt_id", "accuracy"])?;
        for r in &self.rows {
            w.write_record([r.prompt_id.clone(), round_sig(r.accuracy, REPORT_DIGITS).to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| EvalError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Writes `<stem>.json` and `<stem>.csv` side by side.
    pub fn write(&self, json_path: &Path) -> Result<(), EvalError> {
        fs::write(json_path, self.to_json())?;
        fs::write(json_path.with_extension("csv"), self.to_csv()?)?;
        Ok(())
    }

    pub fn read(json_path: &Path) -> Result<Self, EvalError> {
        Self::from_json(&fs::read_to_string(json_path)?)
    }
}
