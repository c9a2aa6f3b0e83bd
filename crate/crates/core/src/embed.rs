//! Reference text embedder: signed, hashed bag of words, L2-normalized.
//!
//! Hashing scheme (pinned; stored embeddings depend on it):
//!
//! 1. Tokenize: lowercase, split on anything that is not a Unicode letter or
//!    digit, drop tokens in [`STOPWORDS`].
//! 2. For each token `h = fnv1a64(token_bytes)`, bucket `h % dim`, sign `+1`
//!    when bit 0 of `h / dim` is clear and `-1` otherwise.
//! 3. Accumulate `sign * term_frequency` per bucket and L2-normalize, unless
//!    every bucket is zero.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Minimum supported embedding dimension.
pub const MIN_DIM: usize = 8;
/// Default embedding dimension for new sessions.
pub const DEFAULT_DIM: usize = 128;

/// The 30 function words removed by [`tokenize`], sorted.
///
/// Changing this list changes every stored embedding.
pub const STOPWORDS: [&str; 30] = [
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "does", "for", "from", "has", "how",
    "in", "is", "it", "its", "of", "on", "or", "s", "so", "that", "the", "this", "to", "was",
    "what", "with",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Splits `text` into lowercase content tokens, in order of appearance.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut flush = |current: &mut String| {
        if !current.is_empty() {
            if !is_stopword(current) {
                tokens.push(core::mem::take(current));
            } else {
                current.clear();
            }
        }
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else {
            flush(&mut current);
        }
    }
    flush(&mut current);
    tokens
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// A fixed-length semantic vector: unit norm, or all zeros for empty text.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn zeros(dim: usize) -> Self {
        Embedding(vec![0.0; dim])
    }

    /// Wraps raw values; non-finite entries are rejected.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Embedding(values))
        } else {
            Err(Error::InvalidParam("embedding entries must be finite"))
        }
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl AsRef<[f64]> for Embedding {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Contract for anything that maps text to a fixed-dimension embedding.
///
/// Implementations must be pure: the same text always yields the same vector.
pub trait Embedder {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Embedding;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedBagOfWords {
    dim: usize,
}

impl HashedBagOfWords {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < MIN_DIM {
            return Err(Error::EmbedDimTooSmall(dim));
        }
        Ok(HashedBagOfWords { dim })
    }
}

impl Embedder for HashedBagOfWords {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Embedding {
        let dim = self.dim as u64;
        let mut acc = vec![0.0f64; self.dim];
        for token in tokenize(text) {
            let h = fnv1a64(token.as_bytes());
            let index = (h % dim) as usize;
            let sign = if (h / dim) & 1 == 0 { 1.0 } else { -1.0 };
            acc[index] += sign;
        }
        let n = norm(&acc);
        if n > 0.0 {
            acc.iter_mut().for_each(|v| *v /= n);
        }
        Embedding(acc)
    }
}

/// Embeds `text` with the reference embedder.
pub fn embed_text(text: &str, dim: usize) -> Result<Embedding> {
    Ok(HashedBagOfWords::new(dim)?.embed(text))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Cosine similarity of two equal-length vectors; `0.0` if either is zero.
pub fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    cosine_slices(&a.0, &b.0)
}
