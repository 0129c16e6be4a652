use serde::{Deserialize, Serialize};

use crate::forge::{PromptTemplate, Segment};
use crate::model::sparse_features;

/// Default embedding dimension.
pub const EMBED_DIM: usize = 1 << 12;

const EMBED_NGRAMS: [usize; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptEmbedding {
    pub prompt_id: String,
    pub vector: Vec<f64>,
}

/// Hashed character 1–3-gram counts of the body, L2-normalised. Placeholders
/// contribute their bare names, so `{ctx}` and `ctx` embed alike.
pub fn embed_prompt(t: &PromptTemplate, dim: usize) -> PromptEmbedding {
    let text: String = t
        .segments()
        .into_iter()
        .map(|s| match s {
            Segment::Literal(l) => l,
            Segment::Placeholder(p) => p,
        })
        .collect();
    let mut vector = vec![0.0; dim];
    let feats = sparse_features(&text, dim, &EMBED_NGRAMS);
    let norm = feats.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    for (i, v) in feats {
        vector[i as usize] = v / norm;
    }
    PromptEmbedding { prompt_id: t.id.clone(), vector }
}

pub fn embed_prompts(ts: &[PromptTemplate], dim: usize) -> Vec<PromptEmbedding> {
    ts.iter().map(|t| embed_prompt(t, dim)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::Strategy;

    #[test]
    fn unit_norm_and_placeholder_names() {
        let a = embed_prompt(&PromptTemplate::new("Read {ctx} now", Strategy::Human, "t").unwrap(), 256);
        let b = embed_prompt(&PromptTemplate::new("Read ctx now", Strategy::Human, "t").unwrap(), 256);
        let n: f64 = a.vector.iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert_eq!(a.vector, b.vector);
    }
}
