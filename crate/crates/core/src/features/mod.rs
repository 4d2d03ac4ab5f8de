//! Per-token input vectors: word embeddings, POS tags and POS embeddings.

mod embeddings;
mod pos;

pub use embeddings::{
    load_embeddings, load_embeddings_filtered, oov_init, parse_embeddings, EmbeddingTable,
    DEFAULT_DIM, OOV_INIT_RANGE,
};
pub use pos::{is_numeric, pos_tag, pos_tag_words, tag_word, PosTag};

use std::borrow::Cow;
use std::collections::BTreeMap;

use crate::corpus::Phrase;
use crate::error::{Error, Result};
use crate::math::Tensor;

/// Trainable vector per POS tag, zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct PosEmbeddingTable {
    dim: usize,
    rows: BTreeMap<PosTag, Tensor>,
}

impl PosEmbeddingTable {
    pub fn new(dim: usize) -> Self {
        PosEmbeddingTable {
            dim,
            rows: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row for `tag`, created as zeros if missing.
    pub fn ensure(&mut self, tag: &PosTag) -> &mut Tensor {
        let dim = self.dim;
        self.rows
            .entry(tag.clone())
            .or_insert_with(|| Tensor::zeros(vec![1, dim]).trainable())
    }

    pub fn insert(&mut self, tag: PosTag, values: Vec<f64>) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::Shape(format!(
                "POS row has {} values, table dimension is {}",
                values.len(),
                self.dim
            )));
        }
        self.rows.insert(tag, Tensor::vector(values).trainable());
        Ok(())
    }

    /// Tags never seen in training contribute a zero vector.
    pub fn lookup(&self, tag: &PosTag) -> Cow<'_, [f64]> {
        match self.rows.get(tag) {
            Some(t) => Cow::Borrowed(t.values()),
            None => Cow::Owned(vec![0.0; self.dim]),
        }
    }

    pub fn row(&self, tag: &PosTag) -> Option<&Tensor> {
        self.rows.get(tag)
    }

    pub fn row_mut(&mut self, tag: &PosTag) -> Option<&mut Tensor> {
        self.rows.get_mut(tag)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&PosTag, &Tensor)> {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Encode a phrase as an `s x d` matrix whose row `i` is the word vector of
/// token `i` plus the vector of its POS tag.
pub fn encode_phrase(
    phrase: &Phrase,
    words: &EmbeddingTable,
    tags: &PosEmbeddingTable,
) -> Result<Tensor> {
    if words.dim() != tags.dim() {
        return Err(Error::Shape(format!(
            "word dimension {} != POS dimension {}",
            words.dim(),
            tags.dim()
        )));
    }
    let d = words.dim();
    let mut values = Vec::with_capacity(phrase.len() * d);
    for token in &phrase.tokens {
        let w = words.lookup(&token.lower);
        let p = tags.lookup(&token.pos);
        values.extend(w.iter().zip(p.iter()).map(|(a, b)| a + b));
    }
    Tensor::matrix(phrase.len(), d, values)
}
