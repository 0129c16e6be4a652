use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::error::ForgeError;
use crate::task::TaskSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ZeroShot,
    FewShot,
    Human,
    Adversarial,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::ZeroShot => "zero_shot",
            Strategy::FewShot => "few_shot",
            Strategy::Human => "human",
            Strategy::Adversarial => "adversarial",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Unassigned,
    Train,
    Test,
    Adversarial,
}

/// One instruction template. Placeholders have the form `{name}` where `name`
/// is an ASCII identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub body: String,
    pub strategy: Strategy,
    pub origin: String,
    pub split: Split,
}

impl PromptTemplate {
    /// Builds a template whose id is derived from its normalized body.
    pub fn new(body: impl Into<String>, strategy: Strategy, origin: impl Into<String>) -> Result<Self, ForgeError> {
        let body = body.into();
        if body.trim().is_empty() {
            return Err(ForgeError::EmptyBody);
        }
        Ok(Self {
            id: template_id(&body),
            body,
            strategy,
            origin: origin.into(),
            split: Split::Unassigned,
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn segments(&self) -> Vec<Segment<'_>> {
        segments(&self.body)
    }

    pub fn placeholder_names(&self) -> Vec<&str> {
        placeholders(&self.body)
    }

    pub fn normalized(&self) -> String {
        normalize_body(&self.body)
    }
}

/// Content-derived id: `p` followed by 12 hex digits of SHA-256 over the normalized body.
pub fn template_id(body: &str) -> String {
    let h = Sha256::digest(normalize_body(body).as_bytes());
    let hex: String = h[..6].iter().map(|b| format!("{b:02x}")).collect();
    format!("p{hex}")
}

/// Lowercase and collapse whitespace runs to a single space (trimmed).
pub fn normalize_body(body: &str) -> String {
    body.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A piece of a template body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment<'a> {
    Literal(&'a str),
    /// Placeholder name, without braces.
    Placeholder(&'a str),
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Length in bytes of a placeholder starting at `s[0] == b'{'`, if any.
fn placeholder_len(s: &[u8]) -> Option<usize> {
    if s.len() < 3 || s[0] != b'{' || !is_ident_start(s[1]) {
        return None;
    }
    let mut i = 2;
    while i < s.len() && is_ident(s[i]) {
        i += 1;
    }
    (i < s.len() && s[i] == b'}').then_some(i + 1)
}

pub(crate) fn segments(body: &str) -> Vec<Segment<'_>> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let mut lit_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(len) = placeholder_len(&bytes[i..]) {
                if lit_start < i {
                    out.push(Segment::Literal(&body[lit_start..i]));
                }
                out.push(Segment::Placeholder(&body[i + 1..i + len - 1]));
                i += len;
                lit_start = i;
                continue;
            }
        }
        i += 1;
    }
    if lit_start < bytes.len() {
        out.push(Segment::Literal(&body[lit_start..]));
    }
    out
}

/// Placeholder names in order of appearance (with repeats).
pub fn placeholders(body: &str) -> Vec<&str> {
    segments(body)
        .into_iter()
        .filter_map(|s| match s {
            Segment::Placeholder(n) => Some(n),
            Segment::Literal(_) => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateValidation {
    pub template_id: String,
    /// Placeholder names not present in the schema, deduplicated and sorted.
    pub unknown_placeholders: Vec<String>,
}

impl TemplateValidation {
    pub fn is_ok(&self) -> bool {
        self.unknown_placeholders.is_empty()
    }
}

impl fmt::Display for TemplateValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "template {} ok", self.template_id)
        } else {
            write!(
                f,
                "template {} has unknown placeholders: {}",
                self.template_id,
                self.unknown_placeholders.join(", ")
            )
        }
    }
}

pub fn validate_template(t: &PromptTemplate, schema: &TaskSchema) -> TemplateValidation {
    let unknown: BTreeSet<String> = placeholders(&t.body)
        .into_iter()
        .filter(|n| !schema.has_field(n))
        .map(str::to_owned)
        .collect();
    TemplateValidation {
        template_id: t.id.clone(),
        unknown_placeholders: unknown.into_iter().collect(),
    }
}

/// A collection of templates with lexically distinct bodies and unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    pub schema_id: String,
    pub partition_seed: u64,
    templates: Vec<PromptTemplate>,
}

impl PromptSet {
    pub fn new(
        schema_id: impl Into<String>,
        partition_seed: u64,
        templates: Vec<PromptTemplate>,
    ) -> Result<Self, ForgeError> {
        let set = Self { schema_id: schema_id.into(), partition_seed, templates };
        set.check()?;
        Ok(set)
    }

    /// Builds a set from templates, silently dropping later duplicates (by id or
    /// normalized body).
    pub fn dedup_from(schema_id: impl Into<String>, templates: Vec<PromptTemplate>) -> Self {
        let mut ids = HashSet::new();
        let mut bodies = HashSet::new();
        let kept = templates
            .into_iter()
            .filter(|t| {
                let fresh = !ids.contains(&t.id) && !bodies.contains(&t.normalized());
                if fresh {
                    ids.insert(t.id.clone());
                    bodies.insert(t.normalized());
                }
                fresh
            })
            .collect();
        Self { schema_id: schema_id.into(), partition_seed: 0, templates: kept }
    }

    fn check(&self) -> Result<(), ForgeError> {
        let mut ids = HashSet::new();
        let mut bodies = HashSet::new();
        for t in &self.templates {
            if t.body.trim().is_empty() {
                return Err(ForgeError::EmptyBody);
            }
            if !ids.insert(t.id.as_str()) || !bodies.insert(t.normalized()) {
                return Err(ForgeError::DuplicateTemplate(t.id.clone()));
            }
        }
        // Distinct normalized bodies already imply train/test disjointness.
        Ok(())
    }

    pub fn templates(&self) -> &[PromptTemplate] {
        &self.templates
    }

    pub fn into_templates(self) -> Vec<PromptTemplate> {
        self.templates
    }

    pub(crate) fn templates_mut(&mut self) -> &mut [PromptTemplate] {
        &mut self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn split(&self, split: Split) -> Vec<&PromptTemplate> {
        self.templates.iter().filter(|t| t.split == split).collect()
    }

    pub fn split_owned(&self, split: Split) -> Vec<PromptTemplate> {
        self.templates.iter().filter(|t| t.split == split).cloned().collect()
    }

    pub fn get(&self, id: &str) -> Option<&PromptTemplate> {
        self.templates.iter().find(|t| t.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("prompt set serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ForgeError> {
        let set: PromptSet = serde_json::from_str(text)?;
        set.check()?;
        Ok(set)
    }

    pub fn write(&self, path: &Path) -> Result<(), ForgeError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, ForgeError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(fields: &[&str]) -> TaskSchema {
        TaskSchema::new("s", fields.iter().map(|s| s.to_string()).collect(), vec!["A".into(), "B".into()])
            .unwrap()
    }

    #[test]
    fn placeholder_scanning() {
        assert_eq!(placeholders("Q: {question} A:{A} B:{B} Answer:"), vec!["question", "A", "B"]);
        assert_eq!(placeholders("no {1x} {} { a} {ok_2}"), vec!["ok_2"]);
        assert_eq!(placeholders("{unterminated"), Vec::<&str>::new());
        assert_eq!(
            segments("{a}-{b}"),
            vec![Segment::Placeholder("a"), Segment::Literal("-"), Segment::Placeholder("b")]
        );
    }

    #[test]
    fn validation_exact_match() {
        let t = PromptTemplate::new("Q: {question} A:{A} B:{B} Answer:", Strategy::Human, "human").unwrap();
        assert!(validate_template(&t, &schema(&["question", "A", "B"])).is_ok());
    }

    #[test]
    fn validation_names_unknown_placeholder() {
        let t = PromptTemplate::new("Q: {question} {X}", Strategy::Human, "human").unwrap();
        let v = validate_template(&t, &schema(&["question"]));
        assert!(!v.is_ok());
        assert_eq!(v.unknown_placeholders, vec!["X".to_string()]);
        assert!(v.to_string().contains('X'));
    }

    #[test]
    fn hellaswag_training_templates_validate() {
        let s = schema(&["ctx", "A", "B", "C", "D"]);
        let bodies = [
            "Based on the given context {ctx}, which of the following options correctly predicts the outcome?\nChoose the correct letter option.\\n A. {A}\\nB. {B}\\nC. {C}\\nD. {D}\\n Answer:",
            "Considering the scenario described in {ctx}, identify the most accurate prediction of the\nfinal result:Select the correct letter.\\n A. {A}\\nB. {B}\\nC. {C}\\nD. {D}\\n Answer:",
            "Given the information in {ctx}, which option best forecasts the correct ending?Provide the\ncorrect letter choice.\\n A. {A}\\nB. {B}\\nC. {C}\\nD. {D}\\n Answer:",
            "From the context {ctx}, which of the following options accurately predicts the conclusion?Write\ndown the correct letter.\\n A. {A}\\nB. {B}\\nC. {C}\\nD. {D}\\n Answer:",
            "Using the details provided in {ctx}, select the option that correctly predicts the final outcome:\nEnter the correct letter.\\n A. {A}\\nB. {B}\\nC. {C}\\nD. {D}\\n Answer:",
            "Based on the context {ctx}, which option is the most accurate prediction of the ending?Choose the\ncorrect letter option.\\n A. {A}\\nB. {B}\\nC. {C}\\nD. {D}\\n Answer:",
            "Given the scenario in {ctx}, identify the option that correctly forecasts the outcome:Select the\ncorrect letter.\\n A. {A}\\nB. {B}\\nC. {C}\\nD. {D}\\n Answer:",
            "Considering the details in {ctx}, which option best predicts the correct conclusion?Provide the\ncorrect letter choice.\\n A. {A}\\nB. {B}\\nC. {C}\\nD. {D}\\n Answer:",
            "Analyze the context {ctx} and determine the correct prediction of the outcome:Indicate the\ncorrect letter.\\n A. {A}\\nB. {B}\\nC. {C}\\nD. {D}\\n Answer:",
            "Analyze the given context {ctx} and determine the most accurate prediction of the final result:\nIndicate the correct letter.\\n A. {A}\\nB. {B}\\nC. {C}\\nD. {D}\\n Answer:",
        ];
        for b in bodies {
            let t = PromptTemplate::new(b, Strategy::ZeroShot, "human").unwrap();
            assert!(validate_template(&t, &s).is_ok(), "{b}");
        }
    }

    #[test]
    fn normalization_collapses_case_and_space() {
        assert_eq!(normalize_body("  Answer  {Q}\n\tNOW "), "answer {q} now");
        assert_eq!(template_id("Answer {q}"), template_id("answer   {q}"));
    }

    #[test]
    fn empty_body_rejected() {
        assert!(matches!(PromptTemplate::new(" \n ", Strategy::Human, "h"), Err(ForgeError::EmptyBody)));
    }

    #[test]
    fn set_rejects_duplicate_bodies() {
        let a = PromptTemplate::new("Solve {q}", Strategy::Human, "h").unwrap();
        let b = PromptTemplate::new("SOLVE  {q}", Strategy::Human, "h").unwrap().with_id("other");
        assert!(matches!(PromptSet::new("s", 0, vec![a.clone(), b.clone()]), Err(ForgeError::DuplicateTemplate(_))));
        assert_eq!(PromptSet::dedup_from("s", vec![a, b]).len(), 1);
    }

    #[test]
    fn json_has_stable_key_order() {
        let t = PromptTemplate::new("Solve {q}", Strategy::ZeroShot, "offline").unwrap().with_id("p1");
        let set = PromptSet::new("pattern", 9, vec![t]).unwrap();
        let golden = "{\n  \"schema_id\": \"pattern\",\n  \"partition_seed\": 9,\n  \"templates\": [\n    {\n      \"id\": \"p1\",\n      \"body\": \"Solve {q}\",\n      \"strategy\": \"zero_shot\",\n      \"origin\": \"offline\",\n      \"split\": \"unassigned\"\n    }\n  ]\n}\n";
        assert_eq!(set.to_json(), golden);
        assert_eq!(PromptSet::from_json(golden).unwrap(), set);
    }
}
