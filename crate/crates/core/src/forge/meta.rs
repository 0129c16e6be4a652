use serde::{Deserialize, Serialize};

use super::error::ForgeError;
use super::template::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaStrategy {
    ZeroShot,
    FewShot,
}

impl From<MetaStrategy> for Strategy {
    fn from(s: MetaStrategy) -> Self {
        match s {
            MetaStrategy::ZeroShot => Strategy::ZeroShot,
            MetaStrategy::FewShot => Strategy::FewShot,
        }
    }
}

/// Instruction sent to a generator model asking for `requested_count` templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPrompt {
    pub text: String,
    pub strategy: MetaStrategy,
    pub requested_count: usize,
}

/// Builds the zero-shot or few-shot generation instruction.
///
/// The few-shot variant shows the generator a worked example whose answer
/// format (`example_format`) is embedded verbatim.
pub fn compose_meta_prompt(
    task_description: &str,
    strategy: MetaStrategy,
    n: usize,
    example_format: Option<&str>,
) -> Result<MetaPrompt, ForgeError> {
    if n == 0 {
        return Err(ForgeError::InvalidArgument("requested prompt count must be at least 1".into()));
    }
    let task = task_description.trim();
    if task.is_empty() {
        return Err(ForgeError::InvalidArgument("task description is empty".into()));
    }
    let text = match strategy {
        MetaStrategy::ZeroShot => format!(
            "Please write {n} detailed English prompts for me to solve a {task}... \n\
             You don't need to design a specific problem, just design a template, and replace the problem\n\
             description with a question. Requirements: diverse styles, lengths, and structures."
        ),
        MetaStrategy::FewShot => {
            let example = example_format.ok_or(ForgeError::MissingExample)?;
            format!(
                "Please write {n} detailed English prompts for me to solve a {task}... \n\
                 An example: Here is the question: {{question}}, \n\
                 let's think step by step and respond in the following format: \n\
                 {example}"
            )
        }
    };
    Ok(MetaPrompt { text, strategy, requested_count: n })
}
