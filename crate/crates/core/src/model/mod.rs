//! The self-attention tagger: parameters, forward pass, training,
//! checkpoints and structured output.

mod checkpoint;
mod forward;
mod structure;
mod train;

pub use structure::{structure, ParseResult, Span, TokenPrediction};
pub use train::{EpochRecord, Gradients, TrainLog, Trainer};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocab, LabelAliases, Phrase, Vocab, NUM_LABELS};
use crate::error::{Error, Result};
use crate::features::{EmbeddingTable, PosEmbeddingTable, PosTag, DEFAULT_DIM};
use crate::math::Tensor;

/// How attention scores a query against a context vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFn {
    /// `q . k / sqrt(d)`.
    #[default]
    ScaledDot,
    /// `v . tanh(q Wa + k Ua)` with a hidden width of `d`.
    Additive,
}

/// Model and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub n_layers: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub score_fn: ScoreFn,
    /// Add each sub-layer's input to its output.
    pub residual: bool,
    /// Add fixed sinusoidal position vectors to the encoder output.
    pub positional: bool,
    pub dim: usize,
    /// Learned query/key/value projections; when off, all three are the
    /// layer input.
    pub qkv: bool,
    /// ReLU after the feed-forward linear map.
    pub ffn_relu: bool,
    /// Let pretrained word vectors receive updates.
    pub tune_embeddings: bool,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            n_layers: 4,
            learning_rate: 5e-5,
            batch_size: 1,
            dropout_rate: 0.1,
            max_epochs: 20,
            patience: 3,
            seed: 13,
            score_fn: ScoreFn::ScaledDot,
            residual: false,
            positional: false,
            dim: DEFAULT_DIM,
            qkv: true,
            ffn_relu: false,
            tune_embeddings: false,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_layers == 0 {
            return bad("n_layers must be at least 1".into());
        }
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad(format!("learning rate {} is not a finite non-negative number", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} not in [0, 1)", self.dropout_rate));
        }
        Ok(())
    }
}

/// Parameters of the additive score function.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveParams {
    pub query: Tensor,
    pub key: Tensor,
    pub score: Tensor,
}

/// One self-attention + feed-forward layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub query: Option<Tensor>,
    pub key: Option<Tensor>,
    pub value: Option<Tensor>,
    pub additive: Option<AdditiveParams>,
    pub ffn_weight: Tensor,
    pub ffn_bias: Tensor,
    pub norm_gain: Tensor,
    pub norm_bias: Tensor,
}

/// Which tensor of a layer a [`ParamKey`] names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerSlot {
    Query,
    Key,
    Value,
    AdditiveQuery,
    AdditiveKey,
    AdditiveScore,
    FfnWeight,
    FfnBias,
    NormGain,
    NormBias,
}

impl LayerSlot {
    pub const ALL: [LayerSlot; 10] = [
        LayerSlot::Query,
        LayerSlot::Key,
        LayerSlot::Value,
        LayerSlot::AdditiveQuery,
        LayerSlot::AdditiveKey,
        LayerSlot::AdditiveScore,
        LayerSlot::FfnWeight,
        LayerSlot::FfnBias,
        LayerSlot::NormGain,
        LayerSlot::NormBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerSlot::Query => "query",
            LayerSlot::Key => "key",
            LayerSlot::Value => "value",
            LayerSlot::AdditiveQuery => "additive_query",
            LayerSlot::AdditiveKey => "additive_key",
            LayerSlot::AdditiveScore => "additive_score",
            LayerSlot::FfnWeight => "ffn_weight",
            LayerSlot::FfnBias => "ffn_bias",
            LayerSlot::NormGain => "norm_gain",
            LayerSlot::NormBias => "norm_bias",
        }
    }
}

impl LayerParams {
    pub fn get(&self, slot: LayerSlot) -> Option<&Tensor> {
        match slot {
            LayerSlot::Query => self.query.as_ref(),
            LayerSlot::Key => self.key.as_ref(),
            LayerSlot::Value => self.value.as_ref(),
            LayerSlot::AdditiveQuery => self.additive.as_ref().map(|a| &a.query),
            LayerSlot::AdditiveKey => self.additive.as_ref().map(|a| &a.key),
            LayerSlot::AdditiveScore => self.additive.as_ref().map(|a| &a.score),
            LayerSlot::FfnWeight => Some(&self.ffn_weight),
            LayerSlot::FfnBias => Some(&self.ffn_bias),
            LayerSlot::NormGain => Some(&self.norm_gain),
            LayerSlot::NormBias => Some(&self.norm_bias),
        }
    }

    pub fn get_mut(&mut self, slot: LayerSlot) -> Option<&mut Tensor> {
        match slot {
            LayerSlot::Query => self.query.as_mut(),
            LayerSlot::Key => self.key.as_mut(),
            LayerSlot::Value => self.value.as_mut(),
            LayerSlot::AdditiveQuery => self.additive.as_mut().map(|a| &mut a.query),
            LayerSlot::AdditiveKey => self.additive.as_mut().map(|a| &mut a.key),
            LayerSlot::AdditiveScore => self.additive.as_mut().map(|a| &mut a.score),
            LayerSlot::FfnWeight => Some(&mut self.ffn_weight),
            LayerSlot::FfnBias => Some(&mut self.ffn_bias),
            LayerSlot::NormGain => Some(&mut self.norm_gain),
            LayerSlot::NormBias => Some(&mut self.norm_bias),
        }
    }
}

/// Names one trainable tensor of a [`TaggerModel`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKey {
    Layer(usize, LayerSlot),
    Output,
    Word(String),
    Tag(PosTag),
}

/// All parameters of the tagger plus what is needed to reproduce its
/// inputs: vocabulary, label aliases, hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub hyper: Hyper,
    pub layers: Vec<LayerParams>,
    /// `d x 8` output projection.
    pub output: Tensor,
    pub words: EmbeddingTable,
    pub tags: PosEmbeddingTable,
    pub vocab: Vocab,
    pub aliases: LabelAliases,
}

fn xavier<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let values = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..=limit))
        .collect();
    Tensor::new(vec![fan_in, fan_out], values)
        .expect("xavier shape")
        .trainable()
}

fn identity(d: usize) -> Tensor {
    let mut t = Tensor::zeros(vec![d, d]).trainable();
    for i in 0..d {
        t.values_mut()[i * d + i] = 1.0;
    }
    t
}

impl LayerParams {
    fn init<R: Rng>(hyper: &Hyper, rng: &mut R) -> Self {
        let d = hyper.dim;
        let proj = || hyper.qkv.then(|| identity(d));
        let additive = (hyper.score_fn == ScoreFn::Additive).then(|| AdditiveParams {
            query: xavier(rng, d, d),
            key: xavier(rng, d, d),
            score: xavier(rng, 1, d),
        });
        LayerParams {
            query: proj(),
            key: proj(),
            value: proj(),
            additive,
            ffn_weight: xavier(rng, d, d),
            ffn_bias: Tensor::zeros(vec![1, d]).trainable(),
            norm_gain: Tensor::vector(vec![1.0; d]).trainable(),
            norm_bias: Tensor::zeros(vec![1, d]).trainable(),
        }
    }
}

impl TaggerModel {
    /// Fresh model for `train`: vocabulary, unseen-token rows, POS rows and
    /// seeded layer weights. Pretrained rows are kept only for tokens of the
    /// training vocabulary.
    pub fn init(hyper: Hyper, train: &[Phrase], pretrained: Option<&EmbeddingTable>) -> Result<Self> {
        hyper.validate()?;
        if let Some(p) = pretrained {
            if p.dim() != hyper.dim {
                return Err(Error::Shape(format!(
                    "embedding file has dimension {}, model dimension is {}",
                    p.dim(),
                    hyper.dim
                )));
            }
        }
        let vocab = build_vocab(train, |t| pretrained.is_some_and(|p| p.is_pretrained(t)));
        let mut words = EmbeddingTable::new(hyper.dim, hyper.seed);
        for token in vocab.tokens() {
            let row = pretrained
                .filter(|p| p.is_pretrained(token))
                .and_then(|p| p.row(token));
            match row {
                Some(row) => words.insert_pretrained(token, row.values().to_vec())?,
                None => {
                    words.embed_token(token);
                }
            }
        }
        words.set_pretrained_trainable(hyper.tune_embeddings);

        let mut tags = PosEmbeddingTable::new(hyper.dim);
        for token in train.iter().flat_map(|p| &p.tokens) {
            tags.ensure(&token.pos);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let layers = (0..hyper.n_layers)
            .map(|_| LayerParams::init(&hyper, &mut rng))
            .collect();
        let output = xavier(&mut rng, hyper.dim, NUM_LABELS);
        Ok(TaggerModel {
            hyper,
            layers,
            output,
            words,
            tags,
            vocab,
            aliases: LabelAliases::default(),
        })
    }

    pub fn with_aliases(mut self, aliases: LabelAliases) -> Self {
        self.aliases = aliases;
        self
    }

    pub fn param(&self, key: &ParamKey) -> Option<&Tensor> {
        match key {
            ParamKey::Layer(i, slot) => self.layers.get(*i)?.get(*slot),
            ParamKey::Output => Some(&self.output),
            ParamKey::Word(w) => self.words.row(w),
            ParamKey::Tag(t) => self.tags.row(t),
        }
    }

    pub fn param_mut(&mut self, key: &ParamKey) -> Option<&mut Tensor> {
        match key {
            ParamKey::Layer(i, slot) => self.layers.get_mut(*i)?.get_mut(*slot),
            ParamKey::Output => Some(&mut self.output),
            ParamKey::Word(w) => self.words.row_mut(w),
            ParamKey::Tag(t) => self.tags.row_mut(t),
        }
    }

    /// Keys of every tensor that can receive gradients.
    pub fn trainable_keys(&self) -> Vec<ParamKey> {
        let mut keys = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for slot in LayerSlot::ALL {
                if layer.get(slot).is_some_and(|t| t.requires_grad) {
                    keys.push(ParamKey::Layer(i, slot));
                }
            }
        }
        keys.push(ParamKey::Output);
        keys.extend(
            self.words
                .pretrained_rows()
                .chain(self.words.oov_rows())
                .filter(|(_, t)| t.requires_grad)
                .map(|(w, _)| ParamKey::Word(w.to_string())),
        );
        keys.extend(self.tags.rows().map(|(t, _)| ParamKey::Tag(t.clone())));
        keys
    }

    /// Add pretrained rows for tokens the model has never seen, so inference
    /// on new text can use them instead of random vectors.
    pub fn extend_pretrained(&mut self, table: &EmbeddingTable) -> Result<usize> {
        self.words.extend_pretrained(table)
    }
}
