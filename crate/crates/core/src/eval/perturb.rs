use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::forge::{PromptTemplate, Segment, Split, Strategy};
use crate::model::fnv1a64;
use crate::rng::{stream_multi, StreamRng};

/// Attempts made before [`perturb_template`] gives up.
pub const MAX_PERTURB_ATTEMPTS: u64 = 100;

const PUNCTUATION: [char; 6] = ['.', ',', ';', ':', '!', '?'];

/// Character/word-level noise applied to the literal text of a template.
/// Placeholders are never touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbOp {
    /// Swap two adjacent letters.
    TypoSwap,
    /// Delete a non-whitespace character.
    CharDrop,
    /// Replace punctuation with other punctuation, or insert a mark before a space.
    PunctuationJitter,
    /// Swap neighbouring words.
    WordShuffleWindow,
    /// Flip the case of a letter.
    CaseFlip,
}

impl PerturbOp {
    pub const ALL: [PerturbOp; 5] = [
        PerturbOp::TypoSwap,
        PerturbOp::CharDrop,
        PerturbOp::PunctuationJitter,
        PerturbOp::WordShuffleWindow,
        PerturbOp::CaseFlip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbOp::TypoSwap => "typo_swap",
            PerturbOp::CharDrop => "char_drop",
            PerturbOp::PunctuationJitter => "punctuation_jitter",
            PerturbOp::WordShuffleWindow => "word_shuffle_window",
            PerturbOp::CaseFlip => "case_flip",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }

    fn apply(self, text: &str, intensity: f64, rng: &mut StreamRng) -> String {
        let hit = |rng: &mut StreamRng| rng.gen::<f64>() < intensity;
        match self {
            PerturbOp::TypoSwap => {
                let mut c: Vec<char> = text.chars().collect();
                let mut i = 0;
                while i + 1 < c.len() {
                    if c[i].is_alphabetic() && c[i + 1].is_alphabetic() && c[i] != c[i + 1] && hit(rng) {
                        c.swap(i, i + 1);
                        i += 2;
                    } else {
                        i += 1;
                    }
                }
                c.into_iter().collect()
            }
            PerturbOp::CharDrop => text.chars().filter(|ch| ch.is_whitespace() || !hit(rng)).collect(),
            PerturbOp::PunctuationJitter => {
                let mut out = String::with_capacity(text.len() + 8);
                for ch in text.chars() {
                    if PUNCTUATION.contains(&ch) && hit(rng) {
                        let others: Vec<char> = PUNCTUATION.iter().copied().filter(|&p| p != ch).collect();
                        out.push(others[rng.gen_range(0..others.len())]);
                    } else if ch == ' ' && out.chars().last().is_some_and(char::is_alphanumeric) && hit(rng) {
                        out.push(PUNCTUATION[rng.gen_range(0..PUNCTUATION.len())]);
                        out.push(ch);
                    } else {
                        out.push(ch);
                    }
                }
                out
            }
            PerturbOp::WordShuffleWindow => {
                // Alternating runs of non-whitespace and whitespace; only words move.
                let mut runs: Vec<String> = Vec::new();
                for ch in text.chars() {
                    match runs.last_mut() {
                        Some(last) if last.chars().next().unwrap().is_whitespace() == ch.is_whitespace() => {
                            last.push(ch)
                        }
                        _ => runs.push(ch.to_string()),
                    }
                }
                let words: Vec<usize> =
                    (0..runs.len()).filter(|&i| !runs[i].starts_with(char::is_whitespace)).collect();
                let mut k = 0;
                while k + 1 < words.len() {
                    if runs[words[k]] != runs[words[k + 1]] && hit(rng) {
                        runs.swap(words[k], words[k + 1]);
                        k += 2;
                    } else {
                        k += 1;
                    }
                }
                runs.concat()
            }
            PerturbOp::CaseFlip => text
                .chars()
                .map(|ch| {
                    if ch.is_alphabetic() && hit(rng) {
                        if ch.is_uppercase() {
                            ch.to_lowercase().next().unwrap_or(ch)
                        } else {
                            ch.to_uppercase().next().unwrap_or(ch)
                        }
                    } else {
                        ch
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub ops: Vec<PerturbOp>,
    /// Per-position probability of applying an op, in (0, 1].
    pub intensity: f64,
    pub seed: u64,
}

impl PerturbSpec {
    pub fn new(ops: Vec<PerturbOp>, intensity: f64, seed: u64) -> Self {
        Self { ops, intensity, seed }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.ops.is_empty() {
            return Err(EvalError::InvalidArgument("no perturbation ops".into()));
        }
        if !(self.intensity > 0.0 && self.intensity <= 1.0) {
            return Err(EvalError::InvalidArgument(format!("intensity {} outside (0, 1]", self.intensity)));
        }
        Ok(())
    }
}

fn perturb_once(t: &PromptTemplate, spec: &PerturbSpec, rng: &mut StreamRng) -> String {
    let mut out = String::with_capacity(t.body.len());
    for seg in t.segments() {
        match seg {
            Segment::Placeholder(name) => {
                out.push('{');
                out.push_str(name);
                out.push('}');
            }
            Segment::Literal(text) => {
                let mut s = text.to_string();
                for op in &spec.ops {
                    s = op.apply(&s, spec.intensity, rng);
                }
                out.push_str(&s);
            }
        }
    }
    out
}

/// Derives an adversarial variant of `t` by perturbing only its literal text.
///
/// Each attempt draws from a stream keyed by (seed, attempt, template body). A
/// candidate is accepted when it has exactly the original placeholders in the
/// original order and a non-blank body; noise on literal text can still fuse
/// braces with neighbouring characters, so the check is not redundant.
/// Candidates identical to the original are also retried; the body comes back
/// unchanged only when no attempt alters it (e.g. a template made only of
/// placeholders).
pub fn perturb_template(t: &PromptTemplate, spec: &PerturbSpec) -> Result<PromptTemplate, EvalError> {
    spec.validate()?;
    let want: Vec<&str> = t.placeholder_names();
    let body_key = fnv1a64(t.body.as_bytes());
    let mut unchanged = false;
    for attempt in 0..MAX_PERTURB_ATTEMPTS {
        let mut rng = stream_multi("perturb", &[spec.seed, attempt, body_key]);
        let body = perturb_once(t, spec, &mut rng);
        if body.trim().is_empty() || crate::forge::placeholders(&body) != want {
            continue;
        }
        if body == t.body {
            unchanged = true;
            continue;
        }
        return adversarial(t, body, spec.seed);
    }
    if unchanged {
        return adversarial(t, t.body.clone(), spec.seed);
    }
    Err(EvalError::PerturbFailed(t.id.clone()))
}

fn adversarial(t: &PromptTemplate, body: String, seed: u64) -> Result<PromptTemplate, EvalError> {
    let mut out = PromptTemplate::new(body, Strategy::Adversarial, format!("perturb:{}", t.id))
        .map_err(|e| EvalError::InvalidTemplate(e.to_string()))?
        .with_split(Split::Adversarial);
    out.id = format!("{}-adv{seed}", t.id);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tpl(body: &str) -> PromptTemplate {
        PromptTemplate::new(body, Strategy::Human, "test").unwrap()
    }

    fn spec(ops: Vec<PerturbOp>, intensity: f64, seed: u64) -> PerturbSpec {
        PerturbSpec::new(ops, intensity, seed)
    }

    #[test]
    fn placeholders_survive_every_op() {
        let t = tpl("Question: {ctx}\nA. {A}\nB. {B}\nAnswer, please:");
        for op in PerturbOp::ALL {
            for seed in 0..20 {
                let p = perturb_template(&t, &spec(vec![op], 0.5, seed)).unwrap();
                assert_eq!(p.placeholder_names(), t.placeholder_names(), "{op:?} seed {seed}");
                assert_eq!(p.split, Split::Adversarial);
                assert_eq!(p.strategy, Strategy::Adversarial);
            }
        }
    }

    #[test]
    fn placeholder_only_body_is_unchanged() {
        let t = tpl("{ctx}{A}{B}");
        let p = perturb_template(&t, &spec(PerturbOp::ALL.to_vec(), 1.0, 3)).unwrap();
        assert_eq!(p.body, t.body);
    }

    #[test]
    fn same_seed_same_output() {
        let t = tpl("Read the passage {ctx} and pick one of {A} or {B}.");
        let s = spec(PerturbOp::ALL.to_vec(), 0.3, 9);
        assert_eq!(perturb_template(&t, &s).unwrap(), perturb_template(&t, &s).unwrap());
    }

    #[test]
    fn full_intensity_case_flip_inverts_letters() {
        let t = tpl("Ab {x} cD");
        let p = perturb_template(&t, &spec(vec![PerturbOp::CaseFlip], 1.0, 0)).unwrap();
        assert_eq!(p.body, "aB {x} Cd");
    }

    #[test]
    fn invalid_specs_rejected() {
        let t = tpl("x {a}");
        assert!(matches!(perturb_template(&t, &spec(vec![], 0.5, 0)), Err(EvalError::InvalidArgument(_))));
        assert!(matches!(
            perturb_template(&t, &spec(vec![PerturbOp::CaseFlip], 0.0, 0)),
            Err(EvalError::InvalidArgument(_))
        ));
    }

    #[test]
    fn op_names_round_trip() {
        for op in PerturbOp::ALL {
            assert_eq!(PerturbOp::from_name(op.name()), Some(op));
        }
    }
}
