//! Annotated ingredient phrases: tokenization, the TSV corpus format,
//! vocabularies and train/dev splitting.

mod label;
mod tokenize;
mod tsv;
mod vocab;

pub use label::{Label, LabelAliases, NUM_LABELS};
pub use tokenize::{token_spans, tokenize, tokenize_surfaces, Token};
pub use tsv::{load_corpora, load_corpus, parse_corpus, write_corpus, write_corpus_to};
pub use vocab::{build_vocab, Vocab};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::PosTag;

/// One ingredient phrase, optionally with one gold label per token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phrase {
    pub raw: String,
    pub tokens: Vec<Token>,
    pub gold: Option<Vec<Label>>,
}

impl Phrase {
    /// Tokenize and tag free text. The result carries no gold labels.
    pub fn from_raw(raw: &str) -> Self {
        Phrase {
            raw: raw.to_string(),
            tokens: tokenize(raw),
            gold: None,
        }
    }

    /// Build a phrase from pre-split tokens. `raw` becomes the surfaces joined
    /// by single spaces. Missing POS tags are computed.
    pub fn from_tokens(
        surfaces: &[&str],
        pos: Option<Vec<PosTag>>,
        gold: Option<Vec<Label>>,
    ) -> Result<Self> {
        if let Some(g) = &gold {
            if g.len() != surfaces.len() {
                return Err(Error::Shape(format!(
                    "{} labels for {} tokens",
                    g.len(),
                    surfaces.len()
                )));
            }
        }
        if surfaces.iter().any(|s| s.is_empty() || s.chars().any(char::is_whitespace)) {
            return Err(Error::InvalidArgument(
                "token surfaces must be non-empty and contain no whitespace".into(),
            ));
        }
        let pos = match pos {
            Some(p) if p.len() == surfaces.len() => p,
            Some(p) => {
                return Err(Error::Shape(format!(
                    "{} POS tags for {} tokens",
                    p.len(),
                    surfaces.len()
                )))
            }
            None => crate::features::pos_tag_words(surfaces),
        };
        let raw = surfaces.join(" ");
        let mut offset = 0;
        let tokens = surfaces
            .iter()
            .zip(pos)
            .map(|(s, tag)| {
                let span = (offset, offset + s.len());
                offset = span.1 + 1;
                Token::new(s, tag, span)
            })
            .collect();
        Ok(Phrase { raw, tokens, gold })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }
}

/// Reject phrases without gold labels, reporting the first offender.
pub fn require_labels(phrases: &[Phrase]) -> Result<()> {
    match phrases.iter().position(|p| p.gold.is_none()) {
        Some(index) => Err(Error::Unlabeled { index }),
        None => Ok(()),
    }
}

/// Deterministically partition `phrases` into `(train, dev)`.
///
/// The dev side holds `ceil(n * dev_fraction)` phrases chosen by a seeded
/// shuffle; both sides keep the input order.
pub fn split_train_dev(
    phrases: &[Phrase],
    dev_fraction: f64,
    seed: u64,
) -> Result<(Vec<Phrase>, Vec<Phrase>)> {
    if !(0.0..1.0).contains(&dev_fraction) {
        return Err(Error::InvalidArgument(format!(
            "dev fraction must be in [0, 1), got {dev_fraction}"
        )));
    }
    let n = phrases.len();
    // Guard against 0.1 * 30 = 3.0000000000000004 style round-up.
    let dev_len = ((n as f64 * dev_fraction) - 1e-9).ceil().max(0.0) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_dev = vec![false; n];
    for &i in &order[..dev_len] {
        is_dev[i] = true;
    }
    let (dev, train): (Vec<_>, Vec<_>) = phrases
        .iter()
        .cloned()
        .zip(is_dev)
        .partition(|(_, d)| *d);
    Ok((
        train.into_iter().map(|(p, _)| p).collect(),
        dev.into_iter().map(|(p, _)| p).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phrases(n: usize) -> Vec<Phrase> {
        (0..n)
            .map(|i| Phrase::from_raw(&format!("{} cups flour", i + 1)))
            .collect()
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let all = phrases(10);
        let (train, dev) = split_train_dev(&all, 0.2, 7).unwrap();
        assert_eq!(dev.len(), 2);
        assert_eq!(train.len(), 8);
        for d in &dev {
            assert!(!train.contains(d));
        }
        let mut union: Vec<_> = train.iter().chain(&dev).map(|p| p.raw.clone()).collect();
        union.sort();
        let mut expected: Vec<_> = all.iter().map(|p| p.raw.clone()).collect();
        expected.sort();
        assert_eq!(union, expected);
    }

    #[test]
    fn split_edge_cases() {
        let all = phrases(10);
        let (train, dev) = split_train_dev(&all, 0.0, 7).unwrap();
        assert!(dev.is_empty());
        assert_eq!(train, all);
        assert_eq!(
            split_train_dev(&all, 0.2, 7).unwrap(),
            split_train_dev(&all, 0.2, 7).unwrap()
        );
        assert!(split_train_dev(&all, 1.0, 7).is_err());
        let (_, dev) = split_train_dev(&phrases(30), 0.1, 1).unwrap();
        assert_eq!(dev.len(), 3);
        let (_, dev) = split_train_dev(&phrases(11), 0.1, 1).unwrap();
        assert_eq!(dev.len(), 2);
    }

    #[test]
    fn from_tokens_checks_lengths() {
        assert!(Phrase::from_tokens(&["a", "b"], None, Some(vec![Label::Name])).is_err());
        let p = Phrase::from_tokens(&["1", "cup"], None, None).unwrap();
        assert_eq!(p.raw, "1 cup");
        assert_eq!(p.tokens[1].span, (2, 5));
    }
}
