use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};

use super::{TaskError, TaskInstance, TaskSchema};

/// Reads a JSON-lines dataset: one object per line with keys equal to the
/// schema field names plus `"gold"`. Blank lines are skipped; reported line
/// numbers are 1-based.
pub fn load_dataset(path: &Path, schema: &TaskSchema) -> Result<Vec<TaskInstance>, TaskError> {
    let text = std::fs::read_to_string(path)?;
    parse_jsonl(&text, schema)
}

pub(crate) fn parse_jsonl(text: &str, schema: &TaskSchema) -> Result<Vec<TaskInstance>, TaskError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Map<String, Value> = serde_json::from_str(line)
            .map_err(|e| TaskError::ParseError { line: line_no, reason: e.to_string() })?;
        let mut fields = Vec::with_capacity(obj.len());
        let mut gold = None;
        for (k, v) in obj {
            let s = v.as_str().ok_or_else(|| TaskError::SchemaError {
                line: line_no,
                reason: format!("value of {k:?} is not a string"),
            })?;
            if k == "gold" {
                gold = Some(s.to_string());
            } else {
                fields.push((k, s.to_string()));
            }
        }
        let gold = gold.ok_or_else(|| TaskError::SchemaError { line: line_no, reason: "missing \"gold\"".into() })?;
        let x = TaskInstance::new(fields, gold);
        schema
            .check(&x)
            .map_err(|e| TaskError::SchemaError { line: line_no, reason: e.to_string() })?;
        out.push(x);
    }
    Ok(out)
}

pub(crate) fn to_jsonl(instances: &[TaskInstance]) -> String {
    let mut s = String::new();
    for x in instances {
        let mut obj = Map::new();
        for (k, v) in &x.fields {
            obj.insert(k.clone(), Value::String(v.clone()));
        }
        obj.insert("gold".into(), Value::String(x.gold.clone()));
        writeln!(s, "{}", Value::Object(obj)).expect("write to string");
    }
    s
}

pub fn write_dataset(path: &Path, instances: &[TaskInstance]) -> Result<(), TaskError> {
    std::fs::write(path, to_jsonl(instances))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::Family;

    fn schema() -> TaskSchema {
        Family::Pattern.schema()
    }

    #[test]
    fn empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        std::fs::write(&p, "").unwrap();
        assert!(load_dataset(&p, &schema()).unwrap().is_empty());
    }

    #[test]
    fn one_line() {
        let xs = parse_jsonl(r#"{"ctx":"a sunny day","A":"x","B":"y","gold":"A"}"#, &schema()).unwrap();
        assert_eq!(xs.len(), 1);
        assert_eq!(xs[0].fields["ctx"], "a sunny day");
    }

    #[test]
    fn fifty_line_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let xs = Family::Pattern.generate(50, 5);
        write_dataset(&p, &xs).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 50);
        assert_eq!(load_dataset(&p, &schema()).unwrap(), xs);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let good = r#"{"ctx":"c","A":"x","B":"y","gold":"A"}"#;
        let text = format!("{good}\n\n{{not json\n");
        assert!(matches!(parse_jsonl(&text, &schema()), Err(TaskError::ParseError { line: 3, .. })));
        let text = format!("{good}\n{}\n", r#"{"ctx":"c","A":"x","gold":"A"}"#);
        assert!(matches!(parse_jsonl(&text, &schema()), Err(TaskError::SchemaError { line: 2, .. })));
        let text = r#"{"ctx":"c","A":"x","B":"y","gold":"Z"}"#;
        assert!(matches!(parse_jsonl(text, &schema()), Err(TaskError::SchemaError { line: 1, .. })));
        let text = r#"{"ctx":1,"A":"x","B":"y","gold":"A"}"#;
        assert!(matches!(parse_jsonl(text, &schema()), Err(TaskError::SchemaError { line: 1, .. })));
    }
}
