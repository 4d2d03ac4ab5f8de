//! Ingredient phrase tagging.
//!
//! Every token of an ingredient phrase ("1 garlic clove, crushed") gets one
//! of eight attribute classes ([`Label`]) from a self-attention tagger, and
//! the labelled tokens are grouped into a structured record. A linear-chain
//! CRF tagger trained with the averaged perceptron is included as a
//! comparison baseline, along with token-level evaluation.
//!
//! ```
//! use ingtag_core::{Hyper, Phrase, TaggerModel};
//!
//! let hyper = Hyper { dim: 16, n_layers: 1, ..Hyper::default() };
//! let train = ingtag_core::synth::toy_corpus();
//! let model = TaggerModel::init(hyper, &train, None).unwrap();
//! let parsed = model.parse(&Phrase::from_raw("1 garlic clove, crushed")).unwrap();
//! assert_eq!(parsed.tokens.len(), 5);
//! ```

pub mod baseline;
mod container;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod math;
pub mod model;
pub mod synth;

pub use baseline::{CrfModel, MajorityTagger};
pub use corpus::{Label, LabelAliases, Phrase, Token, Vocab, NUM_LABELS};
pub use error::{Error, Result};
pub use eval::{evaluate, evaluate_tagger, MetricReport, Tagger};
pub use features::{EmbeddingTable, PosEmbeddingTable, PosTag};
pub use math::{Mode, Tensor};
pub use model::{Hyper, ParseResult, ScoreFn, TaggerModel, TrainLog};
