use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LayerParams, LayerSlot, ParamKey, ScoreFn, TaggerModel};
use crate::corpus::{Label, Phrase, NUM_LABELS};
use crate::error::{Error, Result};
use crate::math::{Graph, Mode, Tensor, Var, LAYER_NORM_EPS};

/// Graph handles produced by one forward pass.
pub(crate) struct Forward {
    pub logits: Var,
    /// Every trainable tensor read by the pass and the leaf that holds it.
    pub bindings: Vec<(ParamKey, Var)>,
}

/// Fixed sinusoidal position vectors, `s x d`.
pub fn sinusoidal_positions(s: usize, d: usize) -> Tensor {
    let mut values = Vec::with_capacity(s * d);
    for pos in 0..s {
        for i in 0..d {
            let rate = 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
            let angle = pos as f64 / rate;
            values.push(if i % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    Tensor::matrix(s, d, values).expect("position shape")
}

impl TaggerModel {
    fn bind<'a>(
        g: &mut Graph<'a>,
        bindings: &mut Vec<(ParamKey, Var)>,
        key: ParamKey,
        t: &'a Tensor,
    ) -> Var {
        let v = g.tensor(t);
        if t.requires_grad {
            bindings.push((key, v));
        }
        v
    }

    /// Encoder output for a phrase: word vector plus POS vector per token,
    /// as differentiable leaves where the rows are trainable.
    fn encode<'a>(
        &'a self,
        g: &mut Graph<'a>,
        phrase: &Phrase,
        bindings: &mut Vec<(ParamKey, Var)>,
    ) -> Result<Var> {
        let d = self.hyper.dim;
        let mut word_rows = Vec::with_capacity(phrase.len());
        let mut tag_rows = Vec::with_capacity(phrase.len());
        for token in &phrase.tokens {
            let w = match self.words.row(&token.lower) {
                Some(t) => Self::bind(g, bindings, ParamKey::Word(token.lower.clone()), t),
                None => g.leaf(Cow::Owned(self.words.lookup(&token.lower).into_owned()), 1, d, false)?,
            };
            let p = match self.tags.row(&token.pos) {
                Some(t) => Self::bind(g, bindings, ParamKey::Tag(token.pos.clone()), t),
                None => g.leaf(Cow::Owned(vec![0.0; d]), 1, d, false)?,
            };
            word_rows.push(w);
            tag_rows.push(p);
        }
        let words = g.stack_rows(&word_rows)?;
        let tags = g.stack_rows(&tag_rows)?;
        g.add(words, tags)
    }

    fn layer<'a, R: Rng + ?Sized>(
        &'a self,
        g: &mut Graph<'a>,
        index: usize,
        layer: &'a LayerParams,
        x: Var,
        mode: Mode,
        rng: &mut R,
        bindings: &mut Vec<(ParamKey, Var)>,
    ) -> Result<Var> {
        let h = &self.hyper;
        let mut param = |g: &mut Graph<'a>, slot: LayerSlot| -> Option<Var> {
            layer
                .get(slot)
                .map(|t| Self::bind(g, bindings, ParamKey::Layer(index, slot), t))
        };
        let (q, k, v) = match (param(g, LayerSlot::Query), param(g, LayerSlot::Key), param(g, LayerSlot::Value)) {
            (Some(wq), Some(wk), Some(wv)) => (g.matmul(x, wq)?, g.matmul(x, wk)?, g.matmul(x, wv)?),
            _ => (x, x, x),
        };
        let scores = match h.score_fn {
            ScoreFn::ScaledDot => {
                let raw = g.matmul_nt(q, k)?;
                g.scale(raw, 1.0 / (h.dim as f64).sqrt())
            }
            ScoreFn::Additive => {
                let (Some(wa), Some(ua), Some(va)) = (
                    param(g, LayerSlot::AdditiveQuery),
                    param(g, LayerSlot::AdditiveKey),
                    param(g, LayerSlot::AdditiveScore),
                ) else {
                    return Err(Error::Shape(format!("layer {index} has no additive score parameters")));
                };
                let qa = g.matmul(q, wa)?;
                let ka = g.matmul(k, ua)?;
                g.additive_scores(qa, ka, va)?
            }
        };
        let weights = g.softmax_rows(scores);
        let mut attended = g.matmul(weights, v)?;
        if h.residual {
            attended = g.add(attended, x)?;
        }

        let wf = param(g, LayerSlot::FfnWeight).expect("ffn weight");
        let bf = param(g, LayerSlot::FfnBias).expect("ffn bias");
        let gain = param(g, LayerSlot::NormGain).expect("norm gain");
        let beta = param(g, LayerSlot::NormBias).expect("norm bias");
        let lin = g.matmul(attended, wf)?;
        let mut ffn = g.add_row(lin, bf)?;
        if h.ffn_relu {
            ffn = g.relu(ffn);
        }
        let mut ffn = g.dropout(ffn, h.dropout_rate, mode, rng)?;
        if h.residual {
            ffn = g.add(ffn, attended)?;
        }
        g.layer_norm_rows(ffn, gain, beta, LAYER_NORM_EPS)
    }

    /// Layers and output projection on an already encoded `s x d` input.
    fn stack<'a, R: Rng + ?Sized>(
        &'a self,
        g: &mut Graph<'a>,
        mut x: Var,
        mode: Mode,
        rng: &mut R,
        bindings: &mut Vec<(ParamKey, Var)>,
    ) -> Result<Var> {
        let (s, d) = g.shape(x);
        if s == 0 {
            return Err(Error::InvalidArgument("forward pass over an empty phrase".into()));
        }
        if d != self.hyper.dim {
            return Err(Error::Shape(format!("input width {d}, model dimension {}", self.hyper.dim)));
        }
        if self.hyper.positional {
            let pos = g.constant(sinusoidal_positions(s, d));
            x = g.add(x, pos)?;
        }
        for (i, layer) in self.layers.iter().enumerate() {
            x = self.layer(g, i, layer, x, mode, rng, bindings)?;
        }
        let w = Self::bind(g, bindings, ParamKey::Output, &self.output);
        g.matmul(x, w)
    }

    pub(crate) fn forward_graph<'a, R: Rng + ?Sized>(
        &'a self,
        g: &mut Graph<'a>,
        phrase: &Phrase,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Forward> {
        let mut bindings = Vec::new();
        let x = self.encode(g, phrase, &mut bindings)?;
        let logits = self.stack(g, x, mode, rng, &mut bindings)?;
        Ok(Forward { logits, bindings })
    }

    /// Per-token logits (`s x 8`) for an encoded `s x d` matrix.
    pub fn forward<R: Rng + ?Sized>(&self, encoded: &Tensor, mode: Mode, rng: &mut R) -> Result<Tensor> {
        let mut g = Graph::new();
        let x = g.tensor(encoded);
        let mut bindings = Vec::new();
        let logits = self.stack(&mut g, x, mode, rng, &mut bindings)?;
        let (s, o) = g.shape(logits);
        Tensor::matrix(s, o, g.value(logits).to_vec())
    }

    /// Eval-mode logits for a phrase.
    pub fn logits(&self, phrase: &Phrase) -> Result<Tensor> {
        if phrase.is_empty() {
            return Tensor::matrix(0, NUM_LABELS, Vec::new());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g = Graph::new();
        let fw = self.forward_graph(&mut g, phrase, Mode::Eval, &mut rng)?;
        let (s, o) = g.shape(fw.logits);
        Tensor::matrix(s, o, g.value(fw.logits).to_vec())
    }

    /// Eval-mode summed cross-entropy of a labelled phrase.
    pub fn loss(&self, phrase: &Phrase) -> Result<f64> {
        let gold = phrase.gold.as_ref().ok_or(Error::Unlabeled { index: 0 })?;
        let logits = self.logits(phrase)?;
        let mut total = 0.0;
        for (i, label) in gold.iter().enumerate() {
            total += crate::math::cross_entropy(logits.row(i), label.index())?;
        }
        Ok(total)
    }

    /// Most probable label per token and its probability.
    pub fn classify_tokens(&self, phrase: &Phrase) -> Result<Vec<(Label, f64)>> {
        let logits = self.logits(phrase)?;
        Ok((0..phrase.len()).map(|i| classify_row(logits.row(i))).collect())
    }
}

/// Argmax of the softmax of one logit row (lowest index wins ties) and the
/// winning probability.
pub fn classify_row(logits: &[f64]) -> (Label, f64) {
    let probs = crate::math::softmax(logits).expect("non-empty logits");
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    (Label::from_index(best).expect("eight logits"), probs[best])
}

impl crate::eval::Tagger for TaggerModel {
    fn tag(&self, phrase: &Phrase) -> Result<Vec<Label>> {
        Ok(self.classify_tokens(phrase)?.into_iter().map(|(l, _)| l).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Hyper;

    fn model(hyper: Hyper) -> TaggerModel {
        TaggerModel::init(hyper, &crate::synth::toy_corpus(), None).unwrap()
    }

    #[test]
    fn classify_row_ties_and_saturation() {
        let (l, p) = classify_row(&[0.3; 8]);
        assert_eq!(l, Label::Name);
        assert!((p - 0.125).abs() < 1e-15);
        let mut row = [0.0; 8];
        row[Label::Quantity.index()] = 10.0;
        let (l, p) = classify_row(&row);
        assert_eq!(l, Label::Quantity);
        // e^10 / (e^10 + 7)
        assert!((p - 0.999_682_301_456_103_7).abs() < 1e-15);
    }

    #[test]
    fn single_token_attends_to_itself() {
        let m = model(Hyper { dim: 8, n_layers: 1, ..Hyper::default() });
        let p = Phrase::from_raw("salt");
        let logits = m.logits(&p).unwrap();
        assert_eq!(logits.shape(), &[1, 8]);
    }

    #[test]
    fn eval_is_deterministic() {
        let m = model(Hyper { dim: 8, n_layers: 2, ..Hyper::default() });
        let p = Phrase::from_raw("2 cups warm water");
        assert_eq!(m.logits(&p).unwrap(), m.logits(&p).unwrap());
    }

    #[test]
    fn variants_run() {
        for hyper in [
            Hyper { dim: 8, n_layers: 2, score_fn: ScoreFn::Additive, ..Hyper::default() },
            Hyper { dim: 8, n_layers: 2, residual: true, positional: true, ffn_relu: true, ..Hyper::default() },
            Hyper { dim: 8, n_layers: 1, qkv: false, ..Hyper::default() },
        ] {
            let m = model(hyper);
            let logits = m.logits(&Phrase::from_raw("1 (8 ounce) package cream cheese, softened")).unwrap();
            assert_eq!(logits.shape(), &[10, 8]);
            assert!(logits.all_finite());
        }
    }

    #[test]
    fn empty_phrase() {
        let m = model(Hyper { dim: 8, n_layers: 1, ..Hyper::default() });
        assert!(m.classify_tokens(&Phrase::from_raw("")).unwrap().is_empty());
    }

    #[test]
    fn positions_shape() {
        let p = sinusoidal_positions(3, 4);
        assert_eq!(p.row(0), &[0.0, 1.0, 0.0, 1.0]);
        assert!((p.row(1)[0] - 1f64.sin()).abs() < 1e-15);
    }

    fn set(t: &mut Tensor, values: &[f64]) {
        t.values_mut().copy_from_slice(values);
    }

    /// N=1, d=2, two tokens, hand-set weights. Expected logits come from an
    /// independent 40-digit trace of attention, linear map and layer norm.
    #[test]
    fn hand_trace() {
        let mut m = TaggerModel::init(Hyper { dim: 2, n_layers: 1, ..Hyper::default() }, &[], None).unwrap();
        let layer = &mut m.layers[0];
        set(layer.value.as_mut().unwrap(), &[1.0, 2.0, 0.0, 1.0]);
        set(&mut layer.ffn_weight, &[2.0, 0.0, 0.0, 0.5]);
        set(&mut layer.ffn_bias, &[0.1, -0.2]);
        set(&mut layer.norm_gain, &[1.5, 0.5]);
        set(&mut layer.norm_bias, &[0.1, 0.2]);
        set(
            &mut m.output,
            &[1.0, -1.0, 0.5, 0.0, 2.0, -0.5, 0.25, 0.0, 0.0, 1.0, -1.0, 0.5, 0.0, 1.0, -0.25, 0.75],
        );
        let x = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.5, 2.0]).unwrap();
        let logits = m.forward(&x, Mode::Eval, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let want = [
            [
                1.5999353571774640767,
                -1.8999138095699521023,
                1.099946130981220064,
                -0.14998922619624401279,
                3.1998707143549281535,
                -1.099946130981220064,
                0.47497845239248802558,
                -0.22498383929436601919,
            ],
            [
                -1.3970774900645667684,
                2.0961033200860890246,
                -1.3975645750538056404,
                0.34951291501076112807,
                -2.7941549801291335369,
                1.3975645750538056404,
                -0.52402583002152225614,
                0.52426937251614169211,
            ],
        ];
        for (r, row) in want.iter().enumerate() {
            for (c, w) in row.iter().enumerate() {
                assert!((logits.row(r)[c] - w).abs() < 1e-12, "row {r} col {c}");
            }
        }
        assert_eq!(classify_row(logits.row(0)).0, Label::Size);
        assert_eq!(classify_row(logits.row(1)).0, Label::State);
    }

    #[test]
    fn permuting_tokens_permutes_logits() {
        let m = model(Hyper { dim: 8, n_layers: 2, ..Hyper::default() });
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let values: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = Tensor::matrix(5, 8, values.clone()).unwrap();
            let perm = [3, 0, 4, 1, 2];
            let permuted: Vec<f64> = perm.iter().flat_map(|&i| values[i * 8..(i + 1) * 8].to_vec()).collect();
            let xp = Tensor::matrix(5, 8, permuted).unwrap();
            let a = m.forward(&x, Mode::Eval, &mut rng).unwrap();
            let b = m.forward(&xp, Mode::Eval, &mut rng).unwrap();
            for (r, &i) in perm.iter().enumerate() {
                for c in 0..8 {
                    assert!((b.row(r)[c] - a.row(i)[c]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn confidence_is_at_least_one_eighth() {
        let m = model(Hyper { dim: 8, n_layers: 1, ..Hyper::default() });
        for p in crate::synth::toy_corpus() {
            for (_, c) in m.classify_tokens(&p).unwrap() {
                assert!((0.125..=1.0).contains(&c));
            }
        }
    }

    #[test]
    fn wrong_input_width_is_an_error() {
        let m = model(Hyper { dim: 8, n_layers: 1, ..Hyper::default() });
        let x = Tensor::matrix(2, 3, vec![0.0; 6]).unwrap();
        assert!(m.forward(&x, Mode::Eval, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
