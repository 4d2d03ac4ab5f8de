//! Deterministic lexicon + suffix-rule part-of-speech tagger over the Penn
//! Treebank tagset.
//!
//! Precedence: punctuation, numerals, lexicon, suffix rules (`-ly` RB,
//! `-ed` VBN, `-ing` VBG), then NN.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// A Penn Treebank POS tag (or [`PosTag::UNKNOWN`]). Never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PosTag(String);

impl PosTag {
    pub const UNKNOWN: &'static str = "UNK";

    /// Build a tag; an empty string becomes `UNK`.
    pub fn new(tag: &str) -> Self {
        let tag = tag.trim();
        if tag.is_empty() {
            PosTag(Self::UNKNOWN.to_string())
        } else {
            PosTag(tag.to_string())
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[rustfmt::skip]
const LEXICON: &[(&str, &str)] = &[
    // determiners and predeterminers
    ("a", "DT"), ("an", "DT"), ("the", "DT"), ("some", "DT"), ("any", "DT"),
    ("each", "DT"), ("every", "DT"), ("another", "DT"), ("this", "DT"),
    ("that", "DT"), ("these", "DT"), ("those", "DT"), ("all", "DT"),
    ("both", "DT"), ("no", "DT"), ("half", "PDT"),
    // prepositions and subordinators
    ("of", "IN"), ("in", "IN"), ("for", "IN"), ("with", "IN"), ("without", "IN"),
    ("into", "IN"), ("from", "IN"), ("at", "IN"), ("on", "IN"), ("about", "IN"),
    ("by", "IN"), ("per", "IN"), ("if", "IN"), ("as", "IN"), ("like", "IN"),
    ("than", "IN"), ("over", "IN"), ("under", "IN"), ("until", "IN"),
    ("through", "IN"), ("before", "IN"), ("after", "IN"), ("between", "IN"),
    ("onto", "IN"), ("plus", "CC"), ("to", "TO"),
    // conjunctions, particles, adverbs
    ("and", "CC"), ("or", "CC"), ("but", "CC"), ("nor", "CC"), ("&", "CC"),
    ("not", "RB"), ("very", "RB"), ("well", "RB"), ("just", "RB"), ("too", "RB"),
    ("also", "RB"), ("then", "RB"), ("only", "RB"), ("more", "RBR"),
    ("less", "RBR"), ("up", "RP"), ("off", "RP"), ("out", "RP"), ("away", "RB"),
    ("together", "RB"), ("halfway", "RB"), ("plenty", "NN"),
    // number words
    ("one", "CD"), ("two", "CD"), ("three", "CD"), ("four", "CD"), ("five", "CD"),
    ("six", "CD"), ("seven", "CD"), ("eight", "CD"), ("nine", "CD"), ("ten", "CD"),
    ("eleven", "CD"), ("twelve", "CD"), ("dozen", "CD"), ("hundred", "CD"),
    // adjectives
    ("large", "JJ"), ("small", "JJ"), ("medium", "JJ"), ("big", "JJ"),
    ("little", "JJ"), ("extra", "JJ"), ("fresh", "JJ"), ("hot", "JJ"),
    ("cold", "JJ"), ("warm", "JJ"), ("cool", "JJ"), ("lukewarm", "JJ"),
    ("dry", "JJ"), ("optional", "JJ"), ("whole", "JJ"), ("red", "JJ"),
    ("green", "JJ"), ("yellow", "JJ"), ("white", "JJ"), ("black", "JJ"),
    ("brown", "JJ"), ("sweet", "JJ"), ("sour", "JJ"), ("sharp", "JJ"),
    ("mild", "JJ"), ("light", "JJ"), ("dark", "JJ"), ("heavy", "JJ"),
    ("thick", "JJ"), ("thin", "JJ"), ("fine", "JJ"), ("coarse", "JJ"),
    ("ripe", "JJ"), ("raw", "JJ"), ("lean", "JJ"), ("boneless", "JJ"),
    ("skinless", "JJ"), ("unsalted", "JJ"), ("salted", "JJ"), ("firm", "JJ"),
    ("soft", "JJ"), ("plain", "JJ"), ("kosher", "JJ"), ("jumbo", "JJ"),
    ("baby", "JJ"), ("mini", "JJ"), ("extra-large", "JJ"),
    ("all-purpose", "JJ"), ("granulated", "JJ"), ("active", "JJ"),
    ("instant", "JJ"), ("low-fat", "JJ"), ("nonfat", "JJ"), ("fat-free", "JJ"),
    ("additional", "JJ"), ("equal", "JJ"), ("several", "JJ"), ("few", "JJ"),
    ("many", "JJ"), ("much", "JJ"), ("other", "JJ"), ("curly", "JJ"),
    ("italian", "JJ"), ("french", "JJ"), ("greek", "JJ"), ("mexican", "JJ"),
    ("virgin", "JJ"), ("semisweet", "JJ"), ("bittersweet", "JJ"),
    ("frozen", "VBN"), ("ground", "VBN"), ("beaten", "VBN"), ("cut", "VBN"),
    ("torn", "VBN"), ("split", "VBN"), ("broken", "VBN"), ("shaken", "VBN"),
    ("dried", "VBN"),
    // units
    ("cup", "NN"), ("cups", "NNS"), ("c", "NN"), ("teaspoon", "NN"),
    ("teaspoons", "NNS"), ("tsp", "NN"), ("tablespoon", "NN"),
    ("tablespoons", "NNS"), ("tbsp", "NN"), ("tbs", "NN"), ("ounce", "NN"),
    ("ounces", "NNS"), ("oz", "NN"), ("pound", "NN"), ("pounds", "NNS"),
    ("lb", "NN"), ("lbs", "NNS"), ("gram", "NN"), ("grams", "NNS"), ("g", "NN"),
    ("kilogram", "NN"), ("kg", "NN"), ("ml", "NN"), ("liter", "NN"),
    ("liters", "NNS"), ("pinch", "NN"), ("dash", "NN"), ("clove", "NN"),
    ("cloves", "NNS"), ("can", "NN"), ("cans", "NNS"), ("package", "NN"),
    ("packages", "NNS"), ("slice", "NN"), ("slices", "NNS"), ("stick", "NN"),
    ("sticks", "NNS"), ("piece", "NN"), ("pieces", "NNS"), ("bunch", "NN"),
    ("head", "NN"), ("sprig", "NN"), ("sprigs", "NNS"), ("stalk", "NN"),
    ("stalks", "NNS"), ("pint", "NN"), ("quart", "NN"), ("gallon", "NN"),
    ("jar", "NN"), ("bottle", "NN"), ("box", "NN"), ("bag", "NN"),
    ("envelope", "NN"), ("container", "NN"), ("handful", "NN"),
    // frequent nouns that the suffix rules would mislabel
    ("seed", "NN"), ("seeds", "NNS"), ("bed", "NN"), ("need", "NN"),
    ("shred", "NN"), ("icing", "NN"), ("dressing", "NN"), ("filling", "NN"),
    ("topping", "NN"), ("pudding", "NN"), ("stuffing", "NN"),
    ("seasoning", "NN"), ("shortening", "NN"), ("ring", "NN"), ("rings", "NNS"),
    ("string", "NN"), ("spring", "NN"), ("wing", "NN"), ("wings", "NNS"),
    ("everything", "NN"), ("jelly", "NN"), ("belly", "NN"), ("family", "NN"),
    ("baking", "NN"), ("taste", "NN"), ("temperature", "NN"), ("room", "NN"),
    ("salt", "NN"), ("pepper", "NN"), ("water", "NN"), ("sugar", "NN"),
    ("flour", "NN"), ("butter", "NN"), ("oil", "NN"), ("garlic", "NN"),
    ("onion", "NN"), ("onions", "NNS"), ("egg", "NN"), ("eggs", "NNS"),
    ("milk", "NN"), ("cream", "NN"), ("cheese", "NN"), ("juice", "NN"),
    ("zest", "NN"), ("sauce", "NN"), ("vanilla", "NN"), ("chicken", "NN"),
    ("beef", "NN"), ("garnish", "NN"), ("serving", "NN"), ("servings", "NNS"),
    // verbs that show up in preparation notes
    ("drain", "VB"), ("rinse", "VB"), ("peel", "VB"), ("divide", "VB"),
    ("serve", "VB"), ("use", "VB"), ("see", "VB"), ("is", "VBZ"),
    ("are", "VBP"), ("be", "VB"),
];

fn lexicon() -> &'static HashMap<&'static str, &'static str> {
    static MAP: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    MAP.get_or_init(|| LEXICON.iter().copied().collect())
}

fn is_vulgar_fraction(c: char) -> bool {
    matches!(c, '¼' | '½' | '¾' | '⅐'..='⅞')
}

/// Digits optionally mixed with `/ . , -` (fractions, decimals, ranges), or
/// unicode vulgar fractions.
pub fn is_numeric(word: &str) -> bool {
    word.chars().any(|c| c.is_ascii_digit() || is_vulgar_fraction(c))
        && word
            .chars()
            .all(|c| c.is_ascii_digit() || is_vulgar_fraction(c) || matches!(c, '/' | '.' | ',' | '-'))
}

fn punctuation_tag(word: &str) -> Option<&'static str> {
    let tag = match word {
        "," => ",",
        "(" | "[" | "{" => "-LRB-",
        ")" | "]" | "}" => "-RRB-",
        ";" | ":" | "-" | "--" => ":",
        "." | "!" | "?" => ".",
        "&" => "CC",
        "$" => "$",
        "#" => "#",
        "\"" | "``" => "``",
        "''" => "''",
        w if w.chars().all(|c| !c.is_alphanumeric()) => "SYM",
        _ => return None,
    };
    Some(tag)
}

/// Tag a single word, independent of context.
pub fn tag_word(word: &str) -> PosTag {
    if let Some(tag) = punctuation_tag(word) {
        return PosTag::new(tag);
    }
    if is_numeric(word) {
        return PosTag::new("CD");
    }
    let lower = word.to_lowercase();
    if let Some(tag) = lexicon().get(lower.as_str()) {
        return PosTag::new(tag);
    }
    let alphabetic = lower.chars().all(|c| c.is_alphabetic() || c == '-' || c == '\'');
    let tag = if !alphabetic {
        "NN"
    } else if lower.len() > 3 && lower.ends_with("ly") {
        "RB"
    } else if lower.len() > 3 && lower.ends_with("ed") {
        "VBN"
    } else if lower.len() > 4 && lower.ends_with("ing") {
        "VBG"
    } else {
        "NN"
    };
    PosTag::new(tag)
}

/// Tag every word of a sequence.
pub fn pos_tag_words<S: AsRef<str>>(words: &[S]) -> Vec<PosTag> {
    words.iter().map(|w| tag_word(w.as_ref())).collect()
}

/// Tag the tokens of a phrase.
pub fn pos_tag(tokens: &[crate::corpus::Token]) -> Vec<PosTag> {
    tokens.iter().map(|t| tag_word(&t.surface)).collect()
}
