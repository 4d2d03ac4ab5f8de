use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Hyper, ParamKey, TaggerModel};
use crate::corpus::{require_labels, Phrase};
use crate::error::{Error, Result};
use crate::eval::evaluate_tagger;
use crate::math::{Adam, AdamConfig, Graph, Mode};

/// Summary of one training epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: u64,
    /// Sum over phrases of the summed per-token cross-entropy.
    pub loss: f64,
    pub mean_phrase_loss: f64,
    pub dev_micro_f1: Option<f64>,
    pub improved: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_dev_micro_f1: Option<f64>,
    pub stopped_early: bool,
}

/// Optimizer state and the random stream used for shuffling and dropout.
pub struct Trainer {
    adam: Adam<ParamKey>,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(hyper: &Hyper) -> Self {
        Trainer {
            adam: Adam::new(AdamConfig {
                lr: hyper.learning_rate,
                ..AdamConfig::default()
            }),
            rng: ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(1)),
        }
    }

    pub fn steps(&self) -> u64 {
        self.adam.steps()
    }

    /// One optimizer step on a batch; the loss is the sum over phrases and
    /// tokens of the cross-entropy, measured in train mode. Returns that loss.
    pub fn step(&mut self, model: &mut TaggerModel, batch: &[&Phrase]) -> Result<f64> {
        let mut total = 0.0;
        let mut touched = BTreeSet::new();
        for phrase in batch {
            let gold: Vec<usize> = phrase
                .gold
                .as_ref()
                .ok_or(Error::Unlabeled { index: 0 })?
                .iter()
                .map(|l| l.index())
                .collect();
            if gold.is_empty() {
                continue;
            }
            for token in &phrase.tokens {
                if !model.words.is_pretrained(&token.lower) {
                    model.words.embed_token(&token.lower);
                }
                model.tags.ensure(&token.pos);
            }
            let (loss, grads) = model.gradients_with(phrase, &gold, Mode::Train, &mut self.rng)?;
            total += loss;
            for (key, grad) in grads {
                let tensor = model
                    .param_mut(&key)
                    .ok_or_else(|| Error::Shape(format!("no parameter {key:?}")))?;
                tensor.accumulate_grad(&grad)?;
                touched.insert(key);
            }
        }
        self.adam.tick();
        for key in &touched {
            if let Some(t) = model.param_mut(key) {
                self.adam.update(key, t)?;
            }
        }
        Ok(total)
    }

    /// Run the epoch loop with early stopping on dev micro-F1. `model` is
    /// replaced by the best-dev snapshot (or the last epoch when `dev` is
    /// empty). `on_epoch` sees every record as it is produced.
    pub fn fit<F>(
        &mut self,
        model: &mut TaggerModel,
        train: &[Phrase],
        dev: &[Phrase],
        mut on_epoch: F,
    ) -> Result<TrainLog>
    where
        F: FnMut(&EpochRecord),
    {
        require_labels(train)?;
        require_labels(dev)?;
        let hyper = model.hyper.clone();
        let mut log = TrainLog::default();
        let mut best: Option<(f64, TaggerModel)> = None;
        let mut stale = 0;
        let mut order: Vec<usize> = (0..train.len()).collect();
        for epoch in 1..=hyper.max_epochs {
            order.shuffle(&mut self.rng);
            let mut loss = 0.0;
            for chunk in order.chunks(hyper.batch_size) {
                let batch: Vec<&Phrase> = chunk.iter().map(|&i| &train[i]).collect();
                loss += self.step(model, &batch)?;
            }
            let dev_f1 = if dev.is_empty() {
                None
            } else {
                Some(evaluate_tagger(&*model, dev)?.micro.f1)
            };
            let improved = match (dev_f1, &best) {
                (Some(f), Some((b, _))) => f > *b,
                (Some(_), None) => true,
                (None, _) => false,
            };
            if improved {
                best = Some((dev_f1.unwrap(), model.clone()));
                log.best_epoch = Some(epoch);
                log.best_dev_micro_f1 = dev_f1;
                stale = 0;
            } else {
                stale += 1;
            }
            let record = EpochRecord {
                epoch,
                steps: self.adam.steps(),
                loss,
                mean_phrase_loss: if train.is_empty() { 0.0 } else { loss / train.len() as f64 },
                dev_micro_f1: dev_f1,
                improved,
            };
            on_epoch(&record);
            log.epochs.push(record);
            if dev_f1.is_some() && stale >= hyper.patience {
                log.stopped_early = epoch < hyper.max_epochs;
                break;
            }
        }
        if let Some((_, snapshot)) = best {
            *model = snapshot;
        } else if !log.epochs.is_empty() {
            log.best_epoch = Some(log.epochs.len());
        }
        Ok(log)
    }
}

/// Per-tensor gradients, one entry per parameter the phrase reaches.
pub type Gradients = Vec<(ParamKey, Vec<f64>)>;

impl TaggerModel {
    /// Summed cross-entropy of a labelled phrase and its gradient with
    /// respect to every trainable tensor the phrase reaches. In train mode
    /// the dropout masks come from `seed`, so repeated calls agree.
    pub fn gradients(&self, phrase: &Phrase, mode: Mode, seed: u64) -> Result<(f64, Gradients)> {
        let gold: Vec<usize> = phrase
            .gold
            .as_ref()
            .ok_or(Error::Unlabeled { index: 0 })?
            .iter()
            .map(|l| l.index())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.gradients_with(phrase, &gold, mode, &mut rng)
    }

    fn gradients_with<R: rand::Rng + ?Sized>(
        &self,
        phrase: &Phrase,
        gold: &[usize],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(f64, Gradients)> {
        let mut g = Graph::new();
        let fw = self.forward_graph(&mut g, phrase, mode, rng)?;
        let loss = g.cross_entropy_sum(fw.logits, gold)?;
        let value = g.value(loss)[0];
        let grads = g.backward(loss)?;
        let mut out: Vec<(ParamKey, Vec<f64>)> = Vec::with_capacity(fw.bindings.len());
        for (key, var) in fw.bindings {
            let Some(gr) = grads.get(var) else { continue };
            // A tensor read twice (a repeated word) gets one summed entry.
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some((_, acc)) => acc.iter_mut().zip(gr).for_each(|(a, b)| *a += b),
                None => out.push((key, gr.to_vec())),
            }
        }
        Ok((value, out))
    }

    /// Initialize from `train` and fit with the hyperparameters' schedule.
    pub fn train(
        hyper: Hyper,
        train: &[Phrase],
        dev: &[Phrase],
        pretrained: Option<&crate::features::EmbeddingTable>,
    ) -> Result<(TaggerModel, TrainLog)> {
        require_labels(train)?;
        let mut model = TaggerModel::init(hyper, train, pretrained)?;
        let mut trainer = Trainer::new(&model.hyper);
        let log = trainer.fit(&mut model, train, dev, |_| {})?;
        Ok((model, log))
    }
}
