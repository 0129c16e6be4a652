use rand::seq::SliceRandom;
use rand::Rng;

use super::{TaskError, TaskInstance, TaskSchema};
use crate::forge::{PromptTemplate, Strategy};
use crate::rng;

/// Registered synthetic task families.
///
/// `pattern` (two labels) and `pattern4` (four labels) both hide a cue-vote
/// pattern in the context: each label owns a lexicon of cue words, the context
/// mixes neutral filler words with one or three cues, and the gold label is
/// the label whose cues occur most often (ties go to the lowest label index).
/// The option fields are filler and carry no signal, so the label depends
/// only on field content and never on the template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Pattern,
    Pattern4,
}

pub const FILLER_WORDS: &[&str] = &[
    "the", "farmer", "walked", "toward", "a", "river", "near", "old", "house", "with", "his", "dog",
    "she", "found", "small", "box", "under", "table", "they", "opened", "window", "after", "lunch",
    "market", "street", "child", "carried", "basket", "bread", "train", "station", "evening", "letter",
    "garden", "path", "teacher", "read", "story", "boat", "hill",
];

const CUES: [&[&str]; 4] = [
    &["sunny", "cheerful", "golden", "radiant", "careful", "correct", "best", "clear"],
    &["stormy", "gloomy", "bitter", "murky", "short", "final", "single", "brief"],
    &["quick", "swift", "rapid", "hasty", "brisk", "speedy", "only", "step"],
    &["silent", "hushed", "muffled", "calm", "quiet", "still", "one", "just"],
];

const LABELS: [&str; 4] = ["A", "B", "C", "D"];

impl Family {
    pub fn from_name(name: &str) -> Result<Self, TaskError> {
        match name {
            "pattern" => Ok(Family::Pattern),
            "pattern4" => Ok(Family::Pattern4),
            other => Err(TaskError::UnknownFamily(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Pattern => "pattern",
            Family::Pattern4 => "pattern4",
        }
    }

    pub fn n_labels(self) -> usize {
        match self {
            Family::Pattern => 2,
            Family::Pattern4 => 4,
        }
    }

    pub fn schema(self) -> TaskSchema {
        let k = self.n_labels();
        let mut fields = vec!["ctx".to_string()];
        fields.extend(LABELS[..k].iter().map(|s| s.to_string()));
        TaskSchema::new(self.name(), fields, LABELS[..k].iter().map(|s| s.to_string()).collect())
            .expect("built-in schema is valid")
    }

    /// Cue lexicon for label index `label`.
    pub fn cues(self, label: usize) -> &'static [&'static str] {
        CUES[label]
    }

    /// Closed-form labelling rule applied to a context string.
    pub fn label_of(self, ctx: &str) -> &'static str {
        let k = self.n_labels();
        let mut counts = vec![0usize; k];
        for w in ctx.split_whitespace() {
            for (label, cues) in CUES[..k].iter().enumerate() {
                if cues.contains(&w) {
                    counts[label] += 1;
                }
            }
        }
        let best = counts.iter().copied().max().unwrap_or(0);
        LABELS[counts.iter().position(|&c| c == best).unwrap_or(0)]
    }

    /// A plain, human-written template for fixed-prompt fine-tuning.
    pub fn human_template(self) -> PromptTemplate {
        let body = match self {
            Family::Pattern => "Question: {ctx}\nA. {A}\nB. {B}\nAnswer:",
            Family::Pattern4 => "Question: {ctx}\nA. {A}\nB. {B}\nC. {C}\nD. {D}\nAnswer:",
        };
        PromptTemplate::new(body, Strategy::Human, "human").expect("non-empty")
    }

    /// `n` instances, deterministic in `(self, n, seed)`.
    pub fn generate(self, n: usize, seed: u64) -> Vec<TaskInstance> {
        let k = self.n_labels();
        let mut rng = rng::stream_multi("synth-dataset", &[seed, k as u64]);
        (0..n)
            .map(|_| {
                let gold = rng.gen_range(0..k);
                let mut words: Vec<&str> = (0..rng.gen_range(4..=6))
                    .map(|_| *FILLER_WORDS.choose(&mut rng).expect("non-empty"))
                    .collect();
                words.push(CUES[gold].choose(&mut rng).expect("non-empty"));
                if rng.gen_bool(0.5) {
                    // Majority of three: one more gold cue and one distractor.
                    let other = (gold + rng.gen_range(1..k)) % k;
                    words.push(CUES[gold].choose(&mut rng).expect("non-empty"));
                    words.push(CUES[other].choose(&mut rng).expect("non-empty"));
                }
                words.shuffle(&mut rng);
                let ctx = words.join(" ");
                let mut fields = vec![("ctx".to_string(), ctx)];
                for label in &LABELS[..k] {
                    let a = FILLER_WORDS.choose(&mut rng).expect("non-empty");
                    let b = FILLER_WORDS.choose(&mut rng).expect("non-empty");
                    fields.push((label.to_string(), format!("{a} {b}")));
                }
                TaskInstance::new(fields, LABELS[gold])
            })
            .collect()
    }
}

/// Synthesizes a dataset for a registered family name.
pub fn synth_dataset(family: &str, n: usize, seed: u64) -> Result<Vec<TaskInstance>, TaskError> {
    Ok(Family::from_name(family)?.generate(n, seed))
}
