use rand::seq::SliceRandom;

use super::error::ForgeError;
use super::template::{PromptSet, Split};
use crate::rng;

/// Randomly splits the non-adversarial templates of `set` into train and test.
///
/// The test split receives `floor(total * test_weight / (train_weight + test_weight))`
/// templates and train gets the remainder. Template order in the returned set
/// is unchanged; only `split` fields and `partition_seed` are rewritten.
pub fn partition_prompts(
    set: &PromptSet,
    train_weight: u32,
    test_weight: u32,
    seed: u64,
) -> Result<PromptSet, ForgeError> {
    if train_weight == 0 || test_weight == 0 {
        return Err(ForgeError::InvalidArgument("partition weights must be positive".into()));
    }
    let mut out = set.clone();
    out.partition_seed = seed;
    let eligible: Vec<usize> = out
        .templates()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.split != Split::Adversarial)
        .map(|(i, _)| i)
        .collect();
    let total = eligible.len();
    let n_test = total * test_weight as usize / (train_weight + test_weight) as usize;
    if n_test == 0 || n_test == total {
        return Err(ForgeError::DegeneratePartition { total, train_weight, test_weight });
    }
    let mut order = eligible;
    order.shuffle(&mut rng::stream("partition", seed));
    let templates = out.templates_mut();
    for (rank, &i) in order.iter().enumerate() {
        templates[i].split = if rank < n_test { Split::Test } else { Split::Train };
    }
    Ok(out)
}
