//! Fixed feature templates for the CRF baseline.
//!
//! Per position `i` the extractor emits, in this order:
//!
//! | template | example |
//! |---|---|
//! | `bias` | `bias` |
//! | current / previous / next lowercased token | `w=garlic`, `prev=<BOS>`, `next=<EOS>` |
//! | POS at `i-1`, `i`, `i+1` and the trigram | `pos-1=CD`, `pos=NN`, `pos+1=,`, `pos3=CD|NN|,` |
//! | suffixes of length 2 and 3 | `suf2=ic`, `suf3=lic` |
//! | word shape, runs collapsed | `shape=x`, `shape=d/d` |
//! | `is_numeric`, `has_slash`, `is_punct` | only when they hold |

use crate::corpus::Phrase;
use crate::features::is_numeric;

pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";

/// `X` upper, `x` lower, `d` digit, anything else kept; repeats collapsed.
pub fn word_shape(word: &str) -> String {
    let mut out = String::new();
    for c in word.chars() {
        let s = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else {
            c
        };
        if !out.ends_with(s) {
            out.push(s);
        }
    }
    out
}

fn suffix(word: &str, n: usize) -> Option<&str> {
    let count = word.chars().count();
    if count < n {
        return None;
    }
    let start = word.char_indices().nth(count - n).map(|(i, _)| i)?;
    Some(&word[start..])
}

/// Feature ids active at `position`. Panics if `position` is out of range.
pub fn extract_features(phrase: &Phrase, position: usize) -> Vec<String> {
    let tokens = &phrase.tokens;
    let tok = &tokens[position];
    let prev = position.checked_sub(1).map(|j| &tokens[j]);
    let next = tokens.get(position + 1);
    let word = |t: Option<&crate::corpus::Token>, edge: &str| {
        t.map_or_else(|| edge.to_string(), |t| t.lower.clone())
    };
    let pos = |t: Option<&crate::corpus::Token>, edge: &str| {
        t.map_or_else(|| edge.to_string(), |t| t.pos.as_str().to_string())
    };

    let mut f = vec![
        "bias".to_string(),
        format!("w={}", tok.lower),
        format!("prev={}", word(prev, BOS)),
        format!("next={}", word(next, EOS)),
    ];
    let (p0, p1, p2) = (pos(prev, BOS), tok.pos.as_str().to_string(), pos(next, EOS));
    f.push(format!("pos-1={p0}"));
    f.push(format!("pos={p1}"));
    f.push(format!("pos+1={p2}"));
    f.push(format!("pos3={p0}|{p1}|{p2}"));
    for n in [2, 3] {
        if let Some(s) = suffix(&tok.lower, n) {
            f.push(format!("suf{n}={s}"));
        }
    }
    f.push(format!("shape={}", word_shape(&tok.surface)));
    if is_numeric(&tok.surface) {
        f.push("is_numeric".into());
    }
    if tok.surface.contains('/') {
        f.push("has_slash".into());
    }
    if !tok.surface.is_empty() && tok.surface.chars().all(|c| !c.is_alphanumeric()) {
        f.push("is_punct".into());
    }
    f
}
