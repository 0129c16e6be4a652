use rand::seq::index;

use super::client::{ClientError, GeneratorClient};
use super::meta::{MetaPrompt, MetaStrategy};
use crate::rng;

/// Deterministic stand-in for a generator model.
///
/// Templates are drawn without replacement from a product grammar: an
/// instruction stem, a frame around the context placeholder, an option block,
/// an answer-format suffix and a layout deciding the order of those parts.
/// Output is a numbered list, as a chat model would return it.
#[derive(Debug, Clone)]
pub struct OfflineGenerator {
    seed: u64,
    stems: Vec<String>,
    contexts: Vec<String>,
    options: Vec<String>,
    suffixes: Vec<String>,
}

const STEMS: &[&str] = &[
    "Read the passage and decide which option fits best.",
    "Consider the following scenario carefully before answering.",
    "Your task is to pick the more suitable choice.",
    "Determine which of the two candidates is correct.",
    "Think about the situation described and select an option.",
    "Using everyday reasoning, choose the right answer.",
    "Below is a short text followed by two possible answers.",
    "Examine the statement and identify the better option.",
    "Solve this single-choice question.",
    "Look for clues in the text to guide your choice.",
    "Pick the option that is most consistent with the description.",
    "You will be shown a description; decide between the choices.",
    "Carefully evaluate both alternatives.",
    "Weigh the evidence and make a decision.",
    "Judge the text and respond with your selection.",
    "Answer the multiple-choice item below.",
];

const FEW_SHOT_STEMS: &[&str] = &[
    "Here is an example question: reason step by step, then choose.",
    "Follow the worked format: read, reflect, and answer with one letter.",
    "Just like in the example, analyse the text before answering.",
    "Step by step, work out which option matches.",
];

const CONTEXTS: &[&str] = &[
    "Context: {ctx}",
    "Passage:\n{ctx}",
    "{ctx}",
    "Here is the situation: {ctx}.",
    "Text: \"{ctx}\"",
    "Scenario -- {ctx}",
    "Description: {ctx}",
    "Consider this: {ctx}",
    "Story: {ctx}\n",
    "Input >> {ctx}",
];

const OPTIONS_2: &[&str] = &[
    "A. {A}\nB. {B}",
    "(A) {A} (B) {B}",
    "Option A: {A}; Option B: {B}",
    "Choices:\n- A: {A}\n- B: {B}",
    "A) {A}\nB) {B}",
    "[A] {A} | [B] {B}",
    "First option (A): {A}. Second option (B): {B}.",
    "A = {A}, B = {B}",
];

const OPTIONS_4: &[&str] = &[
    "A. {A}\nB. {B}\nC. {C}\nD. {D}",
    "(A) {A} (B) {B} (C) {C} (D) {D}",
    "Options: A: {A}; B: {B}; C: {C}; D: {D}",
    "A) {A}\nB) {B}\nC) {C}\nD) {D}",
    "[A] {A} | [B] {B} | [C] {C} | [D] {D}",
    "A = {A}, B = {B}, C = {C}, D = {D}",
];

const SUFFIXES: &[&str] = &[
    "Answer:",
    "Respond with A or B.\nAnswer:",
    "Your answer is just one letter. Answer:",
    "Output only the letter of the correct option.",
    "Which one is it?",
    "The correct choice is",
    "Reply with the corresponding letter.",
    "Answer format: A/B\nAnswer:",
    "Give your final answer now.",
    "Select one. Answer:",
];

impl OfflineGenerator {
    pub fn new(
        seed: u64,
        stems: Vec<String>,
        contexts: Vec<String>,
        options: Vec<String>,
        suffixes: Vec<String>,
    ) -> Self {
        assert!(
            !stems.is_empty() && !contexts.is_empty() && !options.is_empty() && !suffixes.is_empty(),
            "grammar parts must be non-empty"
        );
        Self { seed, stems, contexts, options, suffixes }
    }

    fn owned(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    /// Grammar for the two-choice `pattern` family (fields `ctx`, `A`, `B`).
    pub fn pattern(seed: u64) -> Self {
        Self::new(seed, Self::owned(STEMS), Self::owned(CONTEXTS), Self::owned(OPTIONS_2), Self::owned(SUFFIXES))
    }

    /// Grammar for the four-choice `pattern4` family (fields `ctx`, `A`..`D`).
    pub fn pattern4(seed: u64) -> Self {
        let suffixes = SUFFIXES.iter().map(|s| s.replace("A or B", "A, B, C or D").replace("A/B", "A/B/C/D")).collect();
        Self::new(seed, Self::owned(STEMS), Self::owned(CONTEXTS), Self::owned(OPTIONS_4), suffixes)
    }

    /// Number of distinct bodies the grammar can produce for one strategy.
    pub fn capacity(&self, strategy: MetaStrategy) -> usize {
        self.stem_pool(strategy).len() * self.contexts.len() * self.options.len() * self.suffixes.len() * LAYOUTS
    }

    fn stem_pool(&self, strategy: MetaStrategy) -> Vec<&str> {
        let mut stems: Vec<&str> = self.stems.iter().map(String::as_str).collect();
        if strategy == MetaStrategy::FewShot {
            stems.extend_from_slice(FEW_SHOT_STEMS);
        }
        stems
    }

    fn compose(&self, strategy: MetaStrategy, mut k: usize) -> String {
        let stems = self.stem_pool(strategy);
        let mut pick = |n: usize| {
            let i = k % n;
            k /= n;
            i
        };
        let stem = stems[pick(stems.len())];
        let ctx = &self.contexts[pick(self.contexts.len())];
        let opts = &self.options[pick(self.options.len())];
        let suffix = &self.suffixes[pick(self.suffixes.len())];
        match pick(LAYOUTS) {
            0 => format!("{stem}\n{ctx}\n{opts}\n{suffix}"),
            1 => format!("{ctx}\n{stem}\n{opts}\n{suffix}"),
            2 => format!("{stem}\n{opts}\n{ctx}\n{suffix}"),
            _ => format!("{ctx}\n{opts}\n{stem} {suffix}"),
        }
    }

    /// Renders `n` distinct grammar items as a numbered list.
    pub fn generate_raw(&self, strategy: MetaStrategy, n: usize) -> String {
        let cap = self.capacity(strategy);
        let n = n.min(cap);
        let mut rng = rng::stream_multi("offline-generator", &[self.seed, strategy as u64]);
        index::sample(&mut rng, cap, n)
            .into_iter()
            .enumerate()
            .map(|(i, k)| format!("{}. {}\n", i + 1, self.compose(strategy, k)))
            .collect()
    }
}

const LAYOUTS: usize = 4;

impl GeneratorClient for OfflineGenerator {
    fn identity(&self) -> String {
        "offline".into()
    }

    fn generate(&self, meta: &MetaPrompt) -> Result<String, ClientError> {
        Ok(self.generate_raw(meta.strategy, meta.requested_count))
    }
}
