use serde::{Deserialize, Serialize};

use super::{TaskError, TaskInstance};
use crate::forge::{placeholders, PromptTemplate, Segment};

/// A template instantiated with one data point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedExample {
    pub text: String,
    pub gold: String,
}

/// Single-pass literal substitution of every `{name}` in `t.body`.
///
/// Field values are inserted as-is and never rescanned, so a value cannot
/// expand further placeholders. A value that itself looks like a placeholder
/// makes the output fail the completeness check.
pub fn render(t: &PromptTemplate, x: &TaskInstance) -> Result<RenderedExample, TaskError> {
    let mut text = String::with_capacity(t.body.len() + 64);
    for seg in t.segments() {
        match seg {
            Segment::Literal(s) => text.push_str(s),
            Segment::Placeholder(name) => {
                let v = x.fields.get(name).ok_or_else(|| TaskError::MissingField(name.to_string()))?;
                text.push_str(v);
            }
        }
    }
    if !placeholders(&text).is_empty() {
        return Err(TaskError::RenderIncomplete);
    }
    Ok(RenderedExample { text, gold: x.gold.clone() })
}
