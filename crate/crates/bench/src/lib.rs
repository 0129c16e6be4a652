//! Shared inputs for the criterion benches.

use paft_core::experiment::{offline_prompt_pool, ExperimentConfig, Workbench};
use paft_core::forge::{partition_prompts, PromptSet};
use paft_core::task::{render, Family, RenderedExample};

/// Rendered examples for the default family under its human template.
pub fn rendered_examples(n: usize, seed: u64) -> Vec<RenderedExample> {
    let family = Family::Pattern;
    let t = family.human_template();
    family.generate(n, seed).iter().map(|x| render(&t, x).expect("human template renders")).collect()
}

/// The 50-prompt offline pool split 40/10.
pub fn partitioned_pool(seed: u64) -> PromptSet {
    let pool = offline_prompt_pool(Family::Pattern, 50, seed).expect("offline pool");
    partition_prompts(&pool, 4, 1, seed).expect("partition")
}

/// A default workbench with smaller data so one iteration stays short.
pub fn small_workbench(seed: u64) -> Workbench {
    let cfg = ExperimentConfig { n_train: 100, n_test: 50, ..Default::default() };
    Workbench::synthetic(&cfg, seed).expect("workbench")
}
