use std::collections::HashSet;

use super::error::ForgeError;
use super::template::{normalize_body, PromptTemplate, Strategy};

/// Returns the text after an enumeration marker such as `3.` or `12)`.
fn strip_marker(line: &str) -> Option<&str> {
    let t = line.trim_start();
    let digits = t.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 || digits > 4 {
        return None;
    }
    let rest = &t[digits..];
    rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')).map(str::trim_start)
}

/// Extracts templates from raw generator output.
///
/// If any line starts with an enumeration marker (`N.` or `N)`), every marker
/// opens a new item and unmarked lines continue the current one. Otherwise
/// each non-blank line is one template. Items are deduplicated on their
/// normalized body, keeping the first occurrence.
pub fn parse_generated(raw: &str, strategy: Strategy, origin: &str) -> Result<Vec<PromptTemplate>, ForgeError> {
    if raw.trim().is_empty() {
        return Err(ForgeError::EmptyGeneration);
    }
    let lines: Vec<&str> = raw.lines().map(|l| l.trim_end_matches('\r')).collect();
    let enumerated = lines.iter().any(|l| strip_marker(l).is_some());

    let mut items: Vec<String> = Vec::new();
    if enumerated {
        let mut current: Option<String> = None;
        for line in lines {
            if let Some(rest) = strip_marker(line) {
                items.extend(current.take());
                current = Some(rest.to_string());
            } else if line.trim().is_empty() {
                continue;
            } else if let Some(cur) = current.as_mut() {
                cur.push('\n');
                cur.push_str(line);
            }
            // Preamble text before the first marker is dropped.
        }
        items.extend(current);
    } else {
        items = lines.iter().map(|l| l.trim()).filter(|l| !l.is_empty()).map(str::to_owned).collect();
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for item in items {
        let body = item.trim();
        if body.is_empty() || !seen.insert(normalize_body(body)) {
            continue;
        }
        out.push(PromptTemplate::new(body, strategy, origin)?);
    }
    if out.is_empty() {
        return Err(ForgeError::NoTemplatesFound);
    }
    Ok(out)
}

/// Inverse of [`parse_generated`]: a numbered list, one item per template.
pub fn serialize_templates(templates: &[PromptTemplate]) -> String {
    templates
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}. {}\n", i + 1, t.body))
        .collect()
}
