//! Comparison taggers: a feature-based linear-chain CRF trained as an
//! averaged structured perceptron, and a majority-class tagger.

mod features;
mod viterbi;

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use features::{extract_features, word_shape, BOS, EOS};
pub use viterbi::ChainScores;

use crate::container;
use crate::corpus::{require_labels, Label, LabelAliases, Phrase, NUM_LABELS};
use crate::error::{Error, Result};
use crate::eval::Tagger;

pub const CRF_MAGIC: &[u8; 8] = b"INGCRF01";

const L: usize = NUM_LABELS;
const TRANS_LEN: usize = L * L;
/// Weights per feature block after the emission table: transitions, start, stop.
const TAIL_LEN: usize = TRANS_LEN + 2 * L;

/// Linear-chain CRF over the eight attribute classes.
///
/// All weights live in one flat vector: `features x 8` emission weights,
/// then the `8 x 8` transition matrix, then start and stop weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    features: Vec<String>,
    index: HashMap<String, usize>,
    weights: Vec<f64>,
    aliases: LabelAliases,
    epochs: usize,
    seed: u64,
}

impl CrfModel {
    fn zeros(features: Vec<String>) -> Self {
        let index = features.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        let weights = vec![0.0; features.len() * L + TAIL_LEN];
        CrfModel {
            features,
            index,
            weights,
            aliases: LabelAliases::default(),
            epochs: 0,
            seed: 0,
        }
    }

    pub fn with_aliases(mut self, aliases: LabelAliases) -> Self {
        self.aliases = aliases;
        self
    }

    pub fn aliases(&self) -> &LabelAliases {
        &self.aliases
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn emission_len(&self) -> usize {
        self.features.len() * L
    }

    /// Emission weight of a feature id for a label, 0 for unseen features.
    pub fn emission(&self, feature: &str, label: Label) -> f64 {
        self.index
            .get(feature)
            .map_or(0.0, |&f| self.weights[f * L + label.index()])
    }

    pub fn transition(&self, from: Label, to: Label) -> f64 {
        self.weights[self.emission_len() + from.index() * L + to.index()]
    }

    fn feature_ids(&self, phrase: &Phrase) -> Vec<Vec<usize>> {
        (0..phrase.len())
            .map(|i| {
                extract_features(phrase, i)
                    .iter()
                    .filter_map(|f| self.index.get(f).copied())
                    .collect()
            })
            .collect()
    }

    fn decode_ids(&self, ids: &[Vec<usize>]) -> Vec<usize> {
        let mut emissions = vec![0.0; ids.len() * L];
        for (row, fs) in emissions.chunks_mut(L).zip(ids) {
            for &f in fs {
                for (e, w) in row.iter_mut().zip(&self.weights[f * L..(f + 1) * L]) {
                    *e += w;
                }
            }
        }
        let e = self.emission_len();
        ChainScores {
            n: L,
            emissions: &emissions,
            transitions: &self.weights[e..e + TRANS_LEN],
            start: &self.weights[e + TRANS_LEN..e + TRANS_LEN + L],
            stop: &self.weights[e + TRANS_LEN + L..],
        }
        .viterbi()
        .0
    }

    /// Highest-scoring label sequence for a phrase.
    pub fn viterbi(&self, phrase: &Phrase) -> Vec<Label> {
        self.decode_ids(&self.feature_ids(phrase))
            .into_iter()
            .map(|i| Label::from_index(i).expect("label index"))
            .collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = CrfHeader {
            labels: Label::ALL.to_vec(),
            aliases: self.aliases.clone(),
            features: self.features.clone(),
            epochs: self.epochs,
            seed: self.seed,
        };
        container::encode(CRF_MAGIC, &header, &self.weights)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, weights): (CrfHeader, Vec<f64>) = container::decode(CRF_MAGIC, bytes)?;
        if header.labels != Label::ALL {
            return Err(Error::Checkpoint("label inventory does not match".into()));
        }
        let mut model = CrfModel::zeros(header.features);
        if model.index.len() != model.features.len() {
            return Err(Error::Checkpoint("duplicate feature ids".into()));
        }
        if weights.len() != model.weights.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} weights, found {}",
                model.weights.len(),
                weights.len()
            )));
        }
        if !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::Checkpoint("non-finite weight".into()));
        }
        model.weights = weights;
        model.aliases = header.aliases;
        model.epochs = header.epochs;
        model.seed = header.seed;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        container::write_file(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&container::read_file(path.as_ref())?)
    }
}

#[derive(Serialize, Deserialize)]
struct CrfHeader {
    labels: Vec<Label>,
    aliases: LabelAliases,
    features: Vec<String>,
    epochs: usize,
    seed: u64,
}

/// Averaged perceptron state: current weights `w`, the running sum `u` of
/// updates scaled by their time stamp, and the stamp `c`.
struct Perceptron {
    model: CrfModel,
    u: Vec<f64>,
    c: f64,
}

impl Perceptron {
    fn path_indices(&self, ids: &[Vec<usize>], path: &[usize]) -> Vec<usize> {
        let e = self.model.emission_len();
        let mut out = Vec::new();
        for (t, (&y, fs)) in path.iter().zip(ids).enumerate() {
            out.extend(fs.iter().map(|&f| f * L + y));
            if t == 0 {
                out.push(e + TRANS_LEN + y);
            } else {
                out.push(e + path[t - 1] * L + y);
            }
        }
        if let Some(&last) = path.last() {
            out.push(e + TRANS_LEN + L + last);
        }
        out
    }

    /// Decode one phrase and update on mismatch. Returns whether it updated.
    fn step(&mut self, ids: &[Vec<usize>], gold: &[usize]) -> bool {
        let pred = self.model.decode_ids(ids);
        let changed = pred != gold;
        if changed {
            let c = self.c;
            for i in self.path_indices(ids, gold) {
                self.model.weights[i] += 1.0;
                self.u[i] += c;
            }
            for i in self.path_indices(ids, &pred) {
                self.model.weights[i] -= 1.0;
                self.u[i] -= c;
            }
        }
        self.c += 1.0;
        changed
    }

    fn finish(mut self) -> CrfModel {
        let c = self.c;
        for (w, u) in self.model.weights.iter_mut().zip(&self.u) {
            *w -= u / c;
        }
        self.model
    }
}

/// Train the CRF baseline with an averaged structured perceptron. Phrase
/// order is reshuffled every epoch from `seed`.
pub fn train_crf(train: &[Phrase], epochs: usize, seed: u64) -> Result<CrfModel> {
    require_labels(train)?;
    let mut names = Vec::new();
    let mut seen = HashMap::new();
    for phrase in train {
        for i in 0..phrase.len() {
            for f in extract_features(phrase, i) {
                if !seen.contains_key(&f) {
                    seen.insert(f.clone(), names.len());
                    names.push(f);
                }
            }
        }
    }
    let mut model = CrfModel::zeros(names);
    model.epochs = epochs;
    model.seed = seed;
    let examples: Vec<(Vec<Vec<usize>>, Vec<usize>)> = train
        .iter()
        .filter(|p| !p.is_empty())
        .map(|p| {
            let gold = p.gold.as_ref().expect("checked above");
            (model.feature_ids(p), gold.iter().map(|l| l.index()).collect())
        })
        .collect();
    let n = model.weights.len();
    let mut learner = Perceptron {
        model,
        u: vec![0.0; n],
        c: 1.0,
    };
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (ids, gold) = &examples[i];
            learner.step(ids, gold);
        }
    }
    Ok(learner.finish())
}

impl Tagger for CrfModel {
    fn tag(&self, phrase: &Phrase) -> Result<Vec<Label>> {
        Ok(self.viterbi(phrase))
    }
}

/// Tags every token with the most frequent training label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityTagger {
    pub label: Label,
}

impl MajorityTagger {
    /// Most frequent gold label; ties go to the lowest label index.
    pub fn train(train: &[Phrase]) -> Result<Self> {
        require_labels(train)?;
        let mut counts = [0usize; L];
        for phrase in train {
            for l in phrase.gold.as_deref().unwrap_or_default() {
                counts[l.index()] += 1;
            }
        }
        let mut best = 0;
        for (i, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = i;
            }
        }
        Ok(MajorityTagger {
            label: Label::from_index(best).expect("label index"),
        })
    }
}

impl Tagger for MajorityTagger {
    fn tag(&self, phrase: &Phrase) -> Result<Vec<Label>> {
        Ok(vec![self.label; phrase.len()])
    }
}
