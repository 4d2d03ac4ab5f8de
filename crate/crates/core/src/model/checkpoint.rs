//! Tagger checkpoints: `INGTAG01` container with a JSON header describing
//! hyperparameters, vocabulary, label aliases and the shape of every tensor,
//! followed by the raw little-endian values in header order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdditiveParams, Hyper, LayerParams, LayerSlot, TaggerModel};
use crate::container;
use crate::corpus::{Label, LabelAliases, Vocab, NUM_LABELS};
use crate::error::{Error, Result};
use crate::features::{EmbeddingTable, PosEmbeddingTable, PosTag};
use crate::math::Tensor;

pub const TAGGER_MAGIC: &[u8; 8] = b"INGTAG01";

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Role {
    Layer { index: usize, slot: String },
    Output,
    Pretrained { token: String },
    Oov { token: String },
    Tag { tag: PosTag },
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    #[serde(flatten)]
    role: Role,
    shape: Vec<usize>,
    trainable: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    hyper: Hyper,
    labels: Vec<Label>,
    aliases: LabelAliases,
    vocab: Vocab,
    embedding_seed: u64,
    tensors: Vec<Entry>,
}

fn slot_by_name(name: &str) -> Result<LayerSlot> {
    LayerSlot::ALL
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::Checkpoint(format!("unknown layer tensor {name:?}")))
}

impl TaggerModel {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut entries = Vec::new();
        let mut values = Vec::new();
        let mut push = |role: Role, t: &Tensor| {
            entries.push(Entry {
                role,
                shape: t.shape().to_vec(),
                trainable: t.requires_grad,
            });
            values.extend_from_slice(t.values());
        };
        for (index, layer) in self.layers.iter().enumerate() {
            for slot in LayerSlot::ALL {
                if let Some(t) = layer.get(slot) {
                    push(
                        Role::Layer {
                            index,
                            slot: slot.name().to_string(),
                        },
                        t,
                    );
                }
            }
        }
        push(Role::Output, &self.output);
        for (token, t) in self.words.pretrained_rows() {
            push(Role::Pretrained { token: token.to_string() }, t);
        }
        for (token, t) in self.words.oov_rows() {
            push(Role::Oov { token: token.to_string() }, t);
        }
        for (tag, t) in self.tags.rows() {
            push(Role::Tag { tag: tag.clone() }, t);
        }
        let header = Header {
            hyper: self.hyper.clone(),
            labels: Label::ALL.to_vec(),
            aliases: self.aliases.clone(),
            vocab: self.vocab.clone(),
            embedding_seed: self.words.seed(),
            tensors: entries,
        };
        container::encode(TAGGER_MAGIC, &header, &values)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, values): (Header, Vec<f64>) = container::decode(TAGGER_MAGIC, bytes)?;
        if header.labels != Label::ALL {
            return Err(Error::Checkpoint(format!(
                "label set {:?} does not match this build",
                header.labels
            )));
        }
        let hyper = header.hyper;
        hyper
            .validate()
            .map_err(|e| Error::Checkpoint(format!("invalid hyperparameters: {e}")))?;
        let d = hyper.dim;
        let expected: usize = header.tensors.iter().map(|e| e.shape.iter().product::<usize>()).sum();
        if expected != values.len() {
            return Err(Error::Checkpoint(format!(
                "header describes {expected} values, file holds {}",
                values.len()
            )));
        }

        let mut layers: Vec<Vec<(LayerSlot, Tensor)>> = (0..hyper.n_layers).map(|_| Vec::new()).collect();
        let mut output = None;
        let mut words = EmbeddingTable::new(d, header.embedding_seed);
        let mut tags = PosEmbeddingTable::new(d);
        let mut offset = 0;
        for entry in header.tensors {
            let n: usize = entry.shape.iter().product();
            let mut t = Tensor::new(entry.shape, values[offset..offset + n].to_vec())?;
            t.requires_grad = entry.trainable;
            offset += n;
            match entry.role {
                Role::Layer { index, slot } => {
                    let layer = layers
                        .get_mut(index)
                        .ok_or_else(|| Error::Checkpoint(format!("layer {index} out of range")))?;
                    layer.push((slot_by_name(&slot)?, t));
                }
                Role::Output => output = Some(t),
                Role::Pretrained { token } => {
                    words.insert_pretrained(&token, t.into_values())?;
                    words.row_mut(&token).unwrap().requires_grad = entry.trainable;
                }
                Role::Oov { token } => {
                    words.insert_oov(&token, t.into_values())?;
                    words.row_mut(&token).unwrap().requires_grad = entry.trainable;
                }
                Role::Tag { tag } => {
                    tags.insert(tag.clone(), t.into_values())?;
                    tags.row_mut(&tag).unwrap().requires_grad = entry.trainable;
                }
            }
        }

        let layers = layers
            .into_iter()
            .enumerate()
            .map(|(i, parts)| assemble_layer(i, parts, d))
            .collect::<Result<Vec<_>>>()?;
        let output = output.ok_or_else(|| Error::Checkpoint("missing output projection".into()))?;
        if output.shape() != [d, NUM_LABELS] {
            return Err(Error::Checkpoint(format!(
                "output projection has shape {:?}",
                output.shape()
            )));
        }
        Ok(TaggerModel {
            hyper,
            layers,
            output,
            words,
            tags,
            vocab: header.vocab,
            aliases: header.aliases,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        container::write_file(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&container::read_file(path.as_ref())?)
    }
}

fn assemble_layer(index: usize, parts: Vec<(LayerSlot, Tensor)>, d: usize) -> Result<LayerParams> {
    let mut slots: Vec<Option<Tensor>> = vec![None; LayerSlot::ALL.len()];
    for (slot, t) in parts {
        slots[slot as usize] = Some(t);
    }
    let mut take = |slot: LayerSlot, shape: [usize; 2]| -> Result<Option<Tensor>> {
        match slots[slot as usize].take() {
            Some(t) if t.shape() == shape => Ok(Some(t)),
            Some(t) => Err(Error::Checkpoint(format!(
                "layer {index} {} has shape {:?}, expected {shape:?}",
                slot.name(),
                t.shape()
            ))),
            None => Ok(None),
        }
    };
    let required = |t: Option<Tensor>, slot: LayerSlot| {
        t.ok_or_else(|| Error::Checkpoint(format!("layer {index} is missing {}", slot.name())))
    };
    let query = take(LayerSlot::Query, [d, d])?;
    let key = take(LayerSlot::Key, [d, d])?;
    let value = take(LayerSlot::Value, [d, d])?;
    let additive = match (
        take(LayerSlot::AdditiveQuery, [d, d])?,
        take(LayerSlot::AdditiveKey, [d, d])?,
        take(LayerSlot::AdditiveScore, [1, d])?,
    ) {
        (Some(query), Some(key), Some(score)) => Some(AdditiveParams { query, key, score }),
        (None, None, None) => None,
        _ => return Err(Error::Checkpoint(format!("layer {index} has partial additive parameters"))),
    };
    Ok(LayerParams {
        query,
        key,
        value,
        additive,
        ffn_weight: required(take(LayerSlot::FfnWeight, [d, d])?, LayerSlot::FfnWeight)?,
        ffn_bias: required(take(LayerSlot::FfnBias, [1, d])?, LayerSlot::FfnBias)?,
        norm_gain: required(take(LayerSlot::NormGain, [1, d])?, LayerSlot::NormGain)?,
        norm_bias: required(take(LayerSlot::NormBias, [1, d])?, LayerSlot::NormBias)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScoreFn;

    fn bits(m: &TaggerModel) -> Vec<(crate::model::ParamKey, Vec<u64>)> {
        m.trainable_keys()
            .into_iter()
            .map(|k| {
                let b = m.param(&k).unwrap().values().iter().map(|v| v.to_bits()).collect();
                (k, b)
            })
            .collect()
    }

    #[test]
    fn fresh_model_round_trips_bitwise() {
        for score_fn in [ScoreFn::ScaledDot, ScoreFn::Additive] {
            let hyper = Hyper { dim: 6, n_layers: 2, score_fn, tune_embeddings: true, ..Hyper::default() };
            let mut pre = EmbeddingTable::new(6, 0);
            pre.insert_pretrained("salt", vec![0.1, -0.2, 0.3, 1e-300, -0.0, 7.0]).unwrap();
            let mut aliases = LabelAliases::default();
            aliases.insert("BRAND", Label::Name);
            let m = TaggerModel::init(hyper, &crate::synth::toy_corpus(), Some(&pre))
                .unwrap()
                .with_aliases(aliases);
            let back = TaggerModel::from_bytes(&m.to_bytes().unwrap()).unwrap();
            assert_eq!(back, m);
            assert_eq!(bits(&back), bits(&m));
            assert_eq!(back.to_bytes().unwrap(), m.to_bytes().unwrap());
        }
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let hyper = Hyper { dim: 4, n_layers: 1, ..Hyper::default() };
        let m = TaggerModel::init(hyper, &crate::synth::toy_corpus(), None).unwrap();
        let mut bytes = m.to_bytes().unwrap();
        bytes[3] ^= 0xff;
        let err = TaggerModel::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
        let bytes = m.to_bytes().unwrap();
        assert!(TaggerModel::from_bytes(&bytes[..bytes.len() - 4]).is_err());
    }
}
