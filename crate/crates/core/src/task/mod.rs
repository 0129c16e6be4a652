//! Task schemas, datasets and input construction.

mod family;
mod io;
mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use family::{synth_dataset, Family, FILLER_WORDS};
pub use io::{load_dataset, write_dataset};
pub use render::{render, RenderedExample};

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("missing field {0:?}")]
    MissingField(String),
    #[error("rendered text still contains a placeholder")]
    RenderIncomplete,
    #[error("unknown task family {0:?}")]
    UnknownFamily(String),
    #[error("line {line}: malformed JSON: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("line {line}: {reason}")]
    SchemaError { line: usize, reason: String },
    #[error("instance does not satisfy schema: {0}")]
    InvalidInstance(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSchema {
    pub schema_id: String,
    pub field_names: Vec<String>,
    pub label_space: Vec<String>,
}

impl TaskSchema {
    pub fn new(schema_id: impl Into<String>, field_names: Vec<String>, label_space: Vec<String>) -> Result<Self, TaskError> {
        if field_names.is_empty() {
            return Err(TaskError::InvalidSchema("no fields".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for f in &field_names {
            if f == "gold" {
                return Err(TaskError::InvalidSchema("\"gold\" is reserved".into()));
            }
            if !seen.insert(f) {
                return Err(TaskError::InvalidSchema(format!("duplicate field {f:?}")));
            }
        }
        if label_space.len() < 2 {
            return Err(TaskError::InvalidSchema("label space needs at least two labels".into()));
        }
        let mut labels = std::collections::HashSet::new();
        if !label_space.iter().all(|l| labels.insert(l)) {
            return Err(TaskError::InvalidSchema("duplicate label".into()));
        }
        Ok(Self { schema_id: schema_id.into(), field_names, label_space })
    }

    pub fn has_field(&self, name: &str) -> bool {
        self.field_names.iter().any(|f| f == name)
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_space.iter().position(|l| l == label)
    }

    /// Checks that `x` covers every field and carries a known label.
    pub fn check(&self, x: &TaskInstance) -> Result<(), TaskError> {
        if let Some(missing) = self.field_names.iter().find(|f| !x.fields.contains_key(*f)) {
            return Err(TaskError::InvalidInstance(format!("missing field {missing:?}")));
        }
        if let Some(extra) = x.fields.keys().find(|k| !self.has_field(k)) {
            return Err(TaskError::InvalidInstance(format!("unexpected field {extra:?}")));
        }
        if self.label_index(&x.gold).is_none() {
            return Err(TaskError::InvalidInstance(format!("gold label {:?} not in label space", x.gold)));
        }
        Ok(())
    }
}

/// One labelled data point: field values plus the gold label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub fields: BTreeMap<String, String>,
    pub gold: String,
}

impl TaskInstance {
    pub fn new<K: Into<String>, V: Into<String>>(fields: impl IntoIterator<Item = (K, V)>, gold: impl Into<String>) -> Self {
        Self {
            fields: fields.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
            gold: gold.into(),
        }
    }
}

/// A schema together with validated instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: TaskSchema,
    pub instances: Vec<TaskInstance>,
}

impl Dataset {
    pub fn new(schema: TaskSchema, instances: Vec<TaskInstance>) -> Result<Self, TaskError> {
        for x in &instances {
            schema.check(x)?;
        }
        Ok(Self { schema, instances })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}
