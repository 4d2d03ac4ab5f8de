use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::Phrase;

/// Dense index over lowercased token strings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr")]
pub struct Vocab {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    frozen: bool,
    oov: BTreeSet<String>,
}

#[derive(Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
    frozen: bool,
    oov: BTreeSet<String>,
}

impl From<VocabRepr> for Vocab {
    fn from(r: VocabRepr) -> Self {
        Vocab::from_parts(r.tokens, r.oov, r.frozen)
    }
}

impl Vocab {
    pub fn from_parts(tokens: Vec<String>, oov: BTreeSet<String>, frozen: bool) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab {
            tokens,
            index,
            frozen,
            oov,
        }
    }

    /// Add `token` if unseen and the vocabulary is not frozen.
    pub fn add(&mut self, token: &str) -> Option<usize> {
        if let Some(&i) = self.index.get(token) {
            return Some(i);
        }
        if self.frozen {
            return None;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        Some(i)
    }

    /// Index of a token, or `None` for tokens outside the vocabulary. Callers
    /// route `None` to the unseen-token embedding path.
    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Tokens seen in the corpus but absent from the pretrained embeddings.
    pub fn oov_set(&self) -> &BTreeSet<String> {
        &self.oov
    }
}

/// Index every distinct lowercased token of `phrases` in first-seen order and
/// record the ones `known` does not contain.
pub fn build_vocab<F>(phrases: &[Phrase], known: F) -> Vocab
where
    F: Fn(&str) -> bool,
{
    let mut vocab = Vocab::default();
    for token in phrases.iter().flat_map(|p| &p.tokens) {
        if !vocab.contains(&token.lower) {
            vocab.add(&token.lower);
            if !known(&token.lower) {
                vocab.oov.insert(token.lower.clone());
            }
        }
    }
    vocab.freeze();
    vocab
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn empty_corpus() {
        let v = build_vocab(&[], |_| true);
        assert!(v.is_empty());
        assert!(v.oov_set().is_empty());
    }

    #[test]
    fn single_known_token() {
        let p = Phrase::from_raw("salt");
        let v = build_vocab(&[p], |t| t == "salt");
        assert_eq!(v.len(), 1);
        assert!(v.oov_set().is_empty());
    }

    #[test]
    fn oov_is_set_difference() {
        let phrases = [Phrase::from_raw("Salt pepper"), Phrase::from_raw("salt zaatar")];
        let known: HashSet<&str> = ["salt", "pepper"].into_iter().collect();
        let v = build_vocab(&phrases, |t| known.contains(t));
        assert_eq!(v.len(), 3);
        assert_eq!(v.oov_set().iter().collect::<Vec<_>>(), ["zaatar"]);
        assert_eq!(v.get("pepper"), Some(1));
    }

    #[test]
    fn frozen_lookup_never_fails() {
        let mut v = build_vocab(&[Phrase::from_raw("salt")], |_| true);
        assert!(v.is_frozen());
        assert_eq!(v.get("saffron"), None);
        assert_eq!(v.add("saffron"), None);
        assert_eq!(v.len(), 1);
    }
}
