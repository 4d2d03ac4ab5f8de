use serde::{Deserialize, Serialize};

use crate::features::PosTag;

/// One token of an ingredient phrase.
///
/// `span` holds byte offsets into the raw phrase, so
/// `&raw[span.0..span.1] == surface`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub pos: PosTag,
    pub span: (usize, usize),
}

impl Token {
    pub fn new(surface: &str, pos: PosTag, span: (usize, usize)) -> Self {
        Token {
            surface: surface.to_string(),
            lower: surface.to_lowercase(),
            pos,
            span,
        }
    }
}

fn always_split(c: char) -> bool {
    matches!(c, '(' | ')' | ';')
}

/// Split raw text into token spans (byte offsets).
///
/// Rules, applied per whitespace-delimited chunk:
/// `(`, `)` and `;` are always their own token; `,` is its own token unless
/// it sits between two digits (`1,000`); `:` is split off only at the edges
/// of a chunk. Everything else, including `/` and `.` inside numbers, stays
/// attached.
pub fn token_spans(raw: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut chunk_start = None;
    for (i, c) in raw.char_indices().chain(std::iter::once((raw.len(), ' '))) {
        match (c.is_whitespace(), chunk_start) {
            (true, Some(start)) => {
                split_chunk(raw, start, i, &mut spans);
                chunk_start = None;
            }
            (false, None) => chunk_start = Some(i),
            _ => {}
        }
    }
    spans
}

fn split_chunk(raw: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let chunk = &raw[start..end];
    let chars: Vec<(usize, char)> = chunk.char_indices().collect();
    let mut piece_start: Option<usize> = None;
    let mut pieces = Vec::new();
    for (k, &(off, c)) in chars.iter().enumerate() {
        let is_split = always_split(c)
            || (c == ','
                && !(k > 0
                    && chars[k - 1].1.is_ascii_digit()
                    && chars.get(k + 1).is_some_and(|n| n.1.is_ascii_digit())));
        if is_split {
            if let Some(ps) = piece_start.take() {
                pieces.push((start + ps, start + off));
            }
            pieces.push((start + off, start + off + c.len_utf8()));
        } else if piece_start.is_none() {
            piece_start = Some(off);
        }
    }
    if let Some(ps) = piece_start {
        pieces.push((start + ps, end));
    }

    for (ps, pe) in pieces {
        let text = &raw[ps..pe];
        if text.len() == 1 || !text.contains(':') {
            out.push((ps, pe));
            continue;
        }
        let lead = text.len() - text.trim_start_matches(':').len();
        let trail = text.len() - text.trim_end_matches(':').len();
        if lead == text.len() {
            out.extend((ps..pe).map(|b| (b, b + 1)));
            continue;
        }
        out.extend((ps..ps + lead).map(|b| (b, b + 1)));
        out.push((ps + lead, pe - trail));
        out.extend((pe - trail..pe).map(|b| (b, b + 1)));
    }
}

/// Surface strings of `raw` under the tokenizer rules.
pub fn tokenize_surfaces(raw: &str) -> Vec<&str> {
    token_spans(raw).into_iter().map(|(s, e)| &raw[s..e]).collect()
}

/// Tokenize and POS-tag a raw phrase.
pub fn tokenize(raw: &str) -> Vec<Token> {
    let spans = token_spans(raw);
    let surfaces: Vec<&str> = spans.iter().map(|&(s, e)| &raw[s..e]).collect();
    let tags = crate::features::pos_tag_words(&surfaces);
    spans
        .into_iter()
        .zip(surfaces)
        .zip(tags)
        .map(|((span, surface), pos)| Token::new(surface, pos, span))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn garlic_clove() {
        assert_eq!(
            tokenize_surfaces("1 garlic clove, crushed"),
            ["1", "garlic", "clove", ",", "crushed"]
        );
    }

    #[test]
    fn cream_cheese_package() {
        assert_eq!(
            tokenize_surfaces("1 (8 ounce) package cream cheese, softened"),
            ["1", "(", "8", "ounce", ")", "package", "cream", "cheese", ",", "softened"]
        );
    }

    #[test]
    fn empty_and_blank() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \t ").is_empty());
    }

    #[test]
    fn numbers_stay_whole() {
        assert_eq!(tokenize_surfaces("1/2 cup"), ["1/2", "cup"]);
        assert_eq!(tokenize_surfaces("1.5 lb"), ["1.5", "lb"]);
        assert_eq!(tokenize_surfaces("1,000 g"), ["1,000", "g"]);
        assert_eq!(tokenize_surfaces("salt,pepper"), ["salt", ",", "pepper"]);
    }

    #[test]
    fn colons_and_semicolons() {
        assert_eq!(tokenize_surfaces("note: salt;"), ["note", ":", "salt", ";"]);
        assert_eq!(tokenize_surfaces("1:2"), ["1:2"]);
        assert_eq!(tokenize_surfaces("::"), [":", ":"]);
    }

    #[test]
    fn lowercase_and_spans() {
        let raw = "2 Large EGGS, beaten";
        for t in tokenize(raw) {
            assert_eq!(t.lower, t.surface.to_lowercase());
            assert_eq!(&raw[t.span.0..t.span.1], t.surface);
        }
    }

    proptest! {
        #[test]
        fn spans_are_ordered_and_cover_non_whitespace(raw in "[a-zA-Z0-9 ,();:/.½é]{0,40}") {
            let spans = token_spans(&raw);
            let mut last_end = 0;
            for &(s, e) in &spans {
                prop_assert!(s < e && e <= raw.len());
                prop_assert!(s >= last_end);
                prop_assert!(raw[last_end..s].chars().all(char::is_whitespace));
                prop_assert!(!raw[s..e].chars().any(char::is_whitespace));
                last_end = e;
            }
            prop_assert!(raw[last_end..].chars().all(char::is_whitespace));
        }

        #[test]
        fn idempotent_on_joined_output(raw in "[a-zA-Z0-9 ,();:/.]{0,40}") {
            let first = tokenize_surfaces(&raw);
            let joined = first.join(" ");
            prop_assert_eq!(tokenize_surfaces(&joined), first);
        }
    }
}
