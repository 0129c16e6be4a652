//! Candidate prompt construction.
//!
//! Templates come from a [`GeneratorClient`] (an HTTP chat-completions
//! endpoint or the deterministic [`OfflineGenerator`]), are parsed out of the
//! raw completion, lexically deduplicated, validated against a task schema and
//! finally split into disjoint train / test sets.

mod client;
mod error;
mod meta;
mod offline;
mod parse;
mod partition;
mod template;

pub use client::{
    network_attempts, ClientError, GeneratorClient, HttpTransport, RetryingClient, Transport, API_KEY_ENV,
    FORBID_NETWORK_ENV,
};
pub use error::ForgeError;
pub use meta::{compose_meta_prompt, MetaPrompt, MetaStrategy};
pub use offline::OfflineGenerator;
pub use parse::{parse_generated, serialize_templates};
pub use partition::partition_prompts;
pub use template::{
    normalize_body, placeholders, template_id, validate_template, PromptSet, PromptTemplate,
    Segment, Split, Strategy, TemplateValidation,
};

/// Ask `client` for templates and parse them; `origin` is stamped on every result.
pub fn generate_templates(
    client: &dyn GeneratorClient,
    meta: &MetaPrompt,
    origin: &str,
) -> Result<Vec<PromptTemplate>, ForgeError> {
    let raw = client.generate(meta)?;
    parse_generated(&raw, meta.strategy.into(), origin)
}
