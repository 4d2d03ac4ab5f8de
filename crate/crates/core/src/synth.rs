//! Small labelled corpora for tests, examples and benchmarks.
//!
//! [`toy_corpus`] is a fixed handful of phrases. [`synthetic`] generates an
//! ingredient-like corpus whose test split uses words never seen in
//! training, together with a word-vector table in which words of the same
//! class lie close together. A tagger that reads the vectors can label the
//! unseen words; one that relies on surface features mostly cannot.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Label, Phrase};
use crate::error::Result;
use crate::features::EmbeddingTable;

const TOY: &[&[(&str, Label)]] = {
    use Label::*;
    &[
        &[("1", Quantity), ("garlic", Name), ("clove", Name), (",", Others), ("crushed", State)],
        &[("2", Quantity), ("cups", Unit), ("flour", Name)],
        &[("1", Quantity), ("large", Size), ("onion", Name), (",", Others), ("chopped", State)],
        &[("salt", Name), ("to", Others), ("taste", Others)],
        &[("3", Quantity), ("tablespoons", Unit), ("butter", Name), (",", Others), ("melted", State)],
        &[("1/2", Quantity), ("teaspoon", Unit), ("dried", DryFresh), ("oregano", Name)],
        &[("1", Quantity), ("cup", Unit), ("cold", Temperature), ("water", Name)],
        &[("2", Quantity), ("small", Size), ("tomatoes", Name), (",", Others), ("diced", State)],
        &[("1/4", Quantity), ("cup", Unit), ("fresh", DryFresh), ("parsley", Name)],
        &[("4", Quantity), ("ounces", Unit), ("cream", Name), ("cheese", Name), (",", Others), ("softened", State)],
    ]
};

/// Ten hand-labelled ingredient phrases covering all eight classes.
pub fn toy_corpus() -> Vec<Phrase> {
    TOY.iter()
        .map(|rows| {
            let words: Vec<&str> = rows.iter().map(|(w, _)| *w).collect();
            let gold = rows.iter().map(|(_, l)| *l).collect();
            Phrase::from_tokens(&words, None, Some(gold)).expect("toy phrase")
        })
        .collect()
}

const NAMES: &[&str] = &[
    "flour", "sugar", "butter", "onion", "garlic", "salt", "pepper", "milk", "egg", "eggs",
    "rice", "chicken", "beef", "pork", "carrot", "carrots", "celery", "potato", "potatoes",
    "tomato", "tomatoes", "basil", "oregano", "thyme", "parsley", "cilantro", "cumin", "paprika",
    "cinnamon", "nutmeg", "ginger", "honey", "vinegar", "oil", "lemon", "lime", "orange", "apple",
    "banana", "spinach", "lettuce", "cabbage", "broccoli", "mushrooms", "shallot", "leek",
    "cheese", "cream", "yogurt", "bacon", "ham", "turkey", "salmon", "shrimp", "tuna", "beans",
    "lentils", "chickpeas", "oats", "walnuts", "almonds", "pecans", "raisins", "cranberries",
    "vanilla", "cocoa", "chocolate", "molasses", "mustard", "mayonnaise", "ketchup", "zucchini",
    "eggplant", "cucumber", "avocado", "corn", "peas", "sage", "rosemary", "dill", "mint",
    "chives", "scallions", "pasta", "noodles", "bread", "tofu", "coconut", "pineapple", "mango",
];
const STATES: &[&str] = &[
    "chopped", "minced", "diced", "sliced", "grated", "melted", "softened", "crushed", "peeled",
    "beaten", "drained", "rinsed", "shredded", "cubed", "halved", "mashed", "toasted", "sifted",
    "packed", "divided", "quartered", "trimmed", "seeded", "cored", "julienned", "cooked",
    "pitted", "zested", "squeezed", "whisked",
];
const UNITS: &[&str] = &[
    "cup", "cups", "tablespoon", "tablespoons", "teaspoon", "teaspoons", "pound", "pounds",
    "ounce", "ounces", "clove", "cloves", "pinch", "can", "cans", "package", "slice", "slices",
    "quart", "pint", "gram", "grams", "dash", "stick", "sprig", "bunch", "head", "jar", "liter",
    "kilogram",
];
const QUANTITIES: &[&str] = &["1", "2", "3", "4", "5", "6", "8", "10", "12", "1/2", "1/4", "3/4", "1/3", "2/3", "1 1/2"];
const SIZES: &[&str] = &[
    "large", "small", "medium", "big", "thin", "thick", "jumbo", "tiny", "heaping", "level",
    "generous", "huge", "petite", "mini", "whole",
];
const TEMPERATURES: &[&str] = &[
    "hot", "cold", "warm", "frozen", "chilled", "lukewarm", "boiling", "iced", "cool", "scalding",
    "tepid", "steaming",
];
const DRY_FRESH: &[&str] = &[
    "dried", "fresh", "dry", "freshly", "dehydrated", "sundried", "crisp", "raw", "powdered",
    "desiccated", "green", "ripe",
];
const OTHERS: &[&str] = &["of", "to", "taste", "for", "and", "or", "optional", "about", "plus", "into"];

fn lexicon(label: Label) -> &'static [&'static str] {
    match label {
        Label::Name => NAMES,
        Label::State => STATES,
        Label::Unit => UNITS,
        Label::Quantity => QUANTITIES,
        Label::Size => SIZES,
        Label::Temperature => TEMPERATURES,
        Label::DryFresh => DRY_FRESH,
        Label::Others => OTHERS,
    }
}

/// Classes whose vocabulary is split between training and test.
const SPLIT_CLASSES: [Label; 5] = [Label::Name, Label::State, Label::Size, Label::Temperature, Label::DryFresh];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub train: usize,
    pub test: usize,
    /// Width of the generated word vectors.
    pub dim: usize,
    /// Fraction of each split class's vocabulary that appears only in test.
    pub held_out: f64,
    /// Spread of word vectors around their class centre (centres have unit
    /// scale per component).
    pub spread: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            train: 400,
            test: 200,
            dim: 32,
            held_out: 0.4,
            spread: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub train: Vec<Phrase>,
    pub test: Vec<Phrase>,
    /// Vectors for every generated word (seen and held out).
    pub embeddings: EmbeddingTable,
    /// Words that occur only in `test`.
    pub held_out: Vec<String>,
}

struct Vocabulary {
    seen: Vec<Vec<&'static str>>,
    unseen: Vec<Vec<&'static str>>,
}

impl Vocabulary {
    fn pick(&self, label: Label, test: bool, rng: &mut ChaCha8Rng) -> &'static str {
        let i = label.index();
        let pool = if test && !self.unseen[i].is_empty() && rng.gen_bool(0.5) {
            &self.unseen[i]
        } else {
            &self.seen[i]
        };
        pool.choose(rng).copied().expect("non-empty lexicon")
    }
}

fn phrase(vocab: &Vocabulary, test: bool, rng: &mut ChaCha8Rng) -> Result<Phrase> {
    let mut rows: Vec<(&str, Label)> = Vec::new();
    let add = |label: Label, rng: &mut ChaCha8Rng, rows: &mut Vec<(&str, Label)>| {
        rows.push((vocab.pick(label, test, rng), label));
    };
    if rng.gen_bool(0.85) {
        let q = vocab.pick(Label::Quantity, test, rng);
        for part in q.split(' ') {
            rows.push((part, Label::Quantity));
        }
        if rng.gen_bool(0.75) {
            add(Label::Unit, rng, &mut rows);
            if rng.gen_bool(0.2) {
                rows.push(("of", Label::Others));
            }
        }
    }
    // Modifiers come in random order so position says little about class.
    let mut modifiers: Vec<Label> = [Label::Size, Label::Temperature, Label::DryFresh]
        .into_iter()
        .filter(|_| rng.gen_bool(0.35))
        .collect();
    if rng.gen_bool(0.25) {
        modifiers.push(Label::State);
    }
    modifiers.shuffle(rng);
    for label in modifiers {
        add(label, rng, &mut rows);
    }
    add(Label::Name, rng, &mut rows);
    if rng.gen_bool(0.3) {
        add(Label::Name, rng, &mut rows);
    }
    if rng.gen_bool(0.5) {
        rows.push((",", Label::Others));
        add(Label::State, rng, &mut rows);
    }
    if rng.gen_bool(0.15) {
        add(Label::Others, rng, &mut rows);
    }
    let words: Vec<&str> = rows.iter().map(|(w, _)| *w).collect();
    let gold = rows.iter().map(|(_, l)| *l).collect();
    Phrase::from_tokens(&words, None, Some(gold))
}

/// Generate a synthetic corpus and its class-clustered word vectors.
pub fn synthetic(config: &SynthConfig) -> Result<SynthData> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seen = vec![Vec::new(); Label::ALL.len()];
    let mut unseen = vec![Vec::new(); Label::ALL.len()];
    let mut held_out = Vec::new();
    for label in Label::ALL {
        let mut words = lexicon(label).to_vec();
        let i = label.index();
        if SPLIT_CLASSES.contains(&label) {
            words.shuffle(&mut rng);
            let k = ((words.len() as f64) * config.held_out).round() as usize;
            let k = k.min(words.len() - 1);
            unseen[i] = words.split_off(words.len() - k);
            held_out.extend(unseen[i].iter().map(|w| w.to_string()));
        }
        seen[i] = words;
    }
    let vocab = Vocabulary { seen, unseen };

    let mut embeddings = EmbeddingTable::new(config.dim, config.seed);
    for label in Label::ALL {
        let centre: Vec<f64> = (0..config.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for word in lexicon(label).iter().flat_map(|w| w.split(' ')) {
            if embeddings.is_pretrained(word) {
                continue;
            }
            let v = centre
                .iter()
                .map(|c| c + config.spread * rng.gen_range(-1.0..1.0))
                .collect();
            embeddings.insert_pretrained(word, v)?;
        }
    }
    embeddings.insert_pretrained(",", (0..config.dim).map(|_| rng.gen_range(-1.0..1.0)).collect())?;

    let train = (0..config.train)
        .map(|_| phrase(&vocab, false, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let test = (0..config.test)
        .map(|_| phrase(&vocab, true, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthData {
        train,
        test,
        embeddings,
        held_out,
    })
}
