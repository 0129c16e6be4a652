//! Feature hashing.
//!
//! A text is turned into counts of its character n-grams (Unicode scalar
//! values, not bytes). Each n-gram's UTF-8 encoding is hashed with 64-bit
//! FNV-1a and the count is added to bucket `hash & (d - 1)`.
//!
//! FNV-1a 64: start from `0xcbf29ce484222325`; for each byte, `h ^= byte;
//! h = h.wrapping_mul(0x100000001b3)`. Test vectors:
//!
//! | input      | hash                 |
//! |------------|----------------------|
//! | `""`       | `0xcbf29ce484222325` |
//! | `"a"`      | `0xaf63dc4c8601ec8c` |
//! | `"foobar"` | `0x85944171f73967e8` |

pub const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Dense hashed n-gram counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Sorted `(bucket, value)` pairs with distinct buckets.
pub type SparseFeatures = Vec<(u32, f64)>;

fn check_args(d: usize, ngram_sizes: &[usize]) {
    assert!(d.is_power_of_two() && d <= 1 << 31, "dimension must be a power of two, got {d}");
    assert!(
        !ngram_sizes.is_empty() && ngram_sizes.iter().all(|n| (1..=5).contains(n)),
        "n-gram sizes must be a non-empty subset of 1..=5"
    );
}

/// Hashed counts as a sparse vector.
///
/// # Panics
/// If `d` is not a power of two or `ngram_sizes` is empty or outside `1..=5`.
pub fn sparse_features(text: &str, d: usize, ngram_sizes: &[usize]) -> SparseFeatures {
    check_args(d, ngram_sizes);
    let mask = (d - 1) as u64;
    let mut bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
    bounds.push(text.len());
    let n_chars = bounds.len() - 1;
    let mut buckets: Vec<u32> = Vec::with_capacity(n_chars * ngram_sizes.len());
    for &n in ngram_sizes {
        if n > n_chars {
            continue;
        }
        for s in 0..=(n_chars - n) {
            let gram = &text.as_bytes()[bounds[s]..bounds[s + n]];
            buckets.push((fnv1a64(gram) & mask) as u32);
        }
    }
    buckets.sort_unstable();
    let mut out: SparseFeatures = Vec::new();
    for b in buckets {
        match out.last_mut() {
            Some((last, v)) if *last == b => *v += 1.0,
            _ => out.push((b, 1.0)),
        }
    }
    out
}

/// Hashed counts as a dense vector of dimension `d`.
pub fn featurize(text: &str, d: usize, ngram_sizes: &[usize]) -> FeatureVector {
    let mut values = vec![0.0; d];
    for (i, v) in sparse_features(text, d, ngram_sizes) {
        values[i as usize] = v;
    }
    FeatureVector { values }
}
