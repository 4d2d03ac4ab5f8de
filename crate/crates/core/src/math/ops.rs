//! Plain-slice numeric kernels shared by the autodiff graph and the
//! standalone reference functions.

use rand::Rng;

use super::Tensor;
use crate::error::{Error, Result};

/// Whether stochastic layers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Numerically stable softmax, in place. `v` must be non-empty.
pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("softmax of an empty vector".into()));
    }
    let mut out = v.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x . y / sqrt(d)`.
pub fn scaled_dot(x: &[f64], y: &[f64]) -> f64 {
    dot(x, y) / (x.len() as f64).sqrt()
}

/// Result of a single attention read.
#[derive(Debug, Clone, PartialEq)]
pub struct Attended {
    pub weights: Vec<f64>,
    pub output: Vec<f64>,
}

/// Attend from `query` over `contexts`: weights are the softmax of
/// `score(query, y_j)` and the output is the weighted sum of the contexts.
pub fn attention<F>(query: &[f64], contexts: &[&[f64]], score: F) -> Result<Attended>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    if contexts.is_empty() {
        return Err(Error::InvalidArgument("attention over zero contexts".into()));
    }
    let d = query.len();
    if let Some(bad) = contexts.iter().find(|c| c.len() != d) {
        return Err(Error::Shape(format!(
            "context of dimension {} for query of dimension {d}",
            bad.len()
        )));
    }
    let mut weights: Vec<f64> = contexts.iter().map(|y| score(query, y)).collect();
    softmax_in_place(&mut weights);
    let mut output = vec![0.0; d];
    for (a, y) in weights.iter().zip(contexts) {
        for (o, v) in output.iter_mut().zip(y.iter()) {
            *o += a * v;
        }
    }
    Ok(Attended { weights, output })
}

/// Standardize `v` and apply `gain` and `bias`.
pub fn layer_norm(v: &[f64], gain: &[f64], bias: &[f64], eps: f64) -> Result<Vec<f64>> {
    if v.is_empty() || gain.len() != v.len() || bias.len() != v.len() {
        return Err(Error::Shape(format!(
            "layer norm over {} values with gain {} and bias {}",
            v.len(),
            gain.len(),
            bias.len()
        )));
    }
    let (xhat, _) = standardize(v, eps);
    Ok(xhat
        .iter()
        .zip(gain)
        .zip(bias)
        .map(|((x, g), b)| g * x + b)
        .collect())
}

/// `(x - mean) / sqrt(var + eps)` with the population variance; also returns
/// the inverse standard deviation.
pub(crate) fn standardize(v: &[f64], eps: f64) -> (Vec<f64>, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let inv_std = 1.0 / (var + eps).sqrt();
    (v.iter().map(|x| (x - mean) * inv_std).collect(), inv_std)
}

/// Inverted-dropout mask: entries are `0` with probability `rate`, otherwise
/// `1 / (1 - rate)`.
pub(crate) fn dropout_mask<R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

pub(crate) fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    Ok(())
}

/// Inverted dropout. Identity in eval mode or at rate zero.
pub fn dropout<R: Rng + ?Sized>(v: &Tensor, rate: f64, mode: Mode, rng: &mut R) -> Result<Tensor> {
    check_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(v.clone());
    }
    let mask = dropout_mask(v.len(), rate, rng);
    let values = v.values().iter().zip(&mask).map(|(x, m)| x * m).collect();
    Tensor::new(v.shape().to_vec(), values)
}

/// `-ln softmax(logits)[gold]`.
pub fn cross_entropy(logits: &[f64], gold: usize) -> Result<f64> {
    if gold >= logits.len() {
        return Err(Error::InvalidArgument(format!(
            "gold index {gold} out of range for {} classes",
            logits.len()
        )));
    }
    Ok(log_sum_exp(logits) - logits[gold])
}

/// `out += a (m x k) * b (k x n)`.
pub(crate) fn matmul_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for (p, &aip) in a[i * k..(i + 1) * k].iter().enumerate() {
            if aip == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, bv) in out_row.iter_mut().zip(b_row) {
                *o += aip * bv;
            }
        }
    }
}

/// `out += a^T * b` for `a: k x m`, `b: k x n`.
pub(crate) fn matmul_tn_acc(a: &[f64], b: &[f64], out: &mut [f64], k: usize, m: usize, n: usize) {
    for p in 0..k {
        let b_row = &b[p * n..(p + 1) * n];
        for (i, &api) in a[p * m..(p + 1) * m].iter().enumerate() {
            if api == 0.0 {
                continue;
            }
            for (o, bv) in out[i * n..(i + 1) * n].iter_mut().zip(b_row) {
                *o += api * bv;
            }
        }
    }
}

/// `out += a * b^T` for `a: m x k`, `b: n x k`.
pub(crate) fn matmul_nt_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        for j in 0..n {
            out[i * n + j] += dot(a_row, &b[j * k..(j + 1) * k]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_uniform_and_shift() {
        assert_eq!(softmax(&[0.0; 4]).unwrap(), vec![0.25; 4]);
        for c in [-700.0, -3.0, 0.0, 12.5, 900.0] {
            let p = softmax(&[c, c + 3f64.ln()]).unwrap();
            assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.75).abs() < 1e-12, "{c}: {p:?}");
        }
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn softmax_high_precision_reference() {
        // 50-digit reference values of softmax([1, 2, 3]).
        let expected = [
            0.090_030_573_170_380_457_998_022_101_484_491_797_867_930_864_911_47,
            0.244_728_471_054_797_652_472_959_618_340_762_797_199_300_074_837_97,
            0.665_240_955_774_821_889_529_018_280_174_745_404_932_769_060_250_56,
        ];
        let p = softmax(&[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_examples() {
        let y = [0.3, -1.2, 4.0];
        let out = attention(&[1.0, 2.0, 3.0], &[&y], scaled_dot).unwrap();
        assert_eq!(out.output, y.to_vec());
        assert_eq!(out.weights, vec![1.0]);

        let out = attention(&[5.0, 1.0, 0.0], &[&y, &y, &y, &y], scaled_dot).unwrap();
        for w in &out.weights {
            assert!((w - 0.25).abs() < 1e-15);
        }
        for (o, v) in out.output.iter().zip(y) {
            assert!((o - v).abs() < 1e-12);
        }

        let (a, b) = ([1.0, 0.0], [0.0, 1.0]);
        let out = attention(&[1.0, 0.0], &[&a, &b], scaled_dot).unwrap();
        // softmax([1/sqrt 2, 0]) evaluated independently in high precision.
        let w0 = 0.669_761_549_326_656_925_616_794_945_834;
        assert!((out.weights[0] - w0).abs() < 1e-12);
        assert!((out.output[0] - w0).abs() < 1e-12);
        assert!((out.output[1] - (1.0 - w0)).abs() < 1e-12);

        assert!(attention(&[1.0], &[], scaled_dot).is_err());
        assert!(attention(&[1.0], &[&[1.0, 2.0][..]], scaled_dot).is_err());
    }

    #[test]
    fn layer_norm_examples() {
        assert_eq!(layer_norm(&[2.0; 5], &[1.0; 5], &[0.0; 5], 1e-5).unwrap(), vec![0.0; 5]);
        let b = [0.5, -1.0, 2.0];
        assert_eq!(layer_norm(&[3.0, -7.0, 1.0], &[0.0; 3], &b, 1e-5).unwrap(), b.to_vec());
        let out = layer_norm(&[1.0, 2.0, 3.0], &[1.0; 3], &[0.0; 3], 1e-5).unwrap();
        // (x - 2) / sqrt(2/3 + 1e-5)
        let z = 1.224_735_685_908_390_168_998_286_214_638;
        for (o, e) in out.iter().zip([-z, 0.0, z]) {
            assert!((o - e).abs() < 1e-12, "{out:?}");
        }
    }

    #[test]
    fn dropout_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = Tensor::vector(vec![1.0, -2.0, 3.0]);
        assert_eq!(dropout(&t, 0.7, Mode::Eval, &mut rng).unwrap(), t);
        assert_eq!(dropout(&t, 0.0, Mode::Train, &mut rng).unwrap(), t);
        assert!(dropout(&t, 1.0, Mode::Train, &mut rng).is_err());
        let big = Tensor::vector(vec![1.0; 100_000]);
        let out = dropout(&big, 0.5, Mode::Train, &mut rng).unwrap();
        let mean = out.values().iter().sum::<f64>() / 100_000.0;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
        assert!(out.values().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn cross_entropy_examples() {
        assert!((cross_entropy(&[0.0; 8], 3).unwrap() - 8f64.ln()).abs() < 1e-12);
        let mut logits = [0.0; 8];
        logits[2] = 50.0;
        assert!(cross_entropy(&logits, 2).unwrap() < 1e-20);
        let logits: Vec<f64> = (1..=8).map(f64::from).collect();
        // ln(sum_{k=1..8} e^k) - 8 in 50-digit arithmetic.
        let expected = 0.458_339_626_479_005_070_847_705_619_614;
        assert!((cross_entropy(&logits, 7).unwrap() - expected).abs() < 1e-12);
        assert!(cross_entropy(&logits, 8).is_err());
    }

    #[test]
    fn matmul_kernels_agree() {
        let a: Vec<f64> = (0..6).map(|i| i as f64 - 2.0).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|i| (i as f64) * 0.5).collect(); // 3x4
        let mut c = vec![0.0; 8];
        matmul_acc(&a, &b, &mut c, 2, 3, 4);
        let naive = |i: usize, j: usize| (0..3).map(|p| a[i * 3 + p] * b[p * 4 + j]).sum::<f64>();
        for i in 0..2 {
            for j in 0..4 {
                assert_eq!(c[i * 4 + j], naive(i, j));
            }
        }
        // a^T: treat a as 3x2 transposed input
        let at: Vec<f64> = vec![a[0], a[3], a[1], a[4], a[2], a[5]]; // 3x2
        let mut c2 = vec![0.0; 8];
        matmul_tn_acc(&at, &b, &mut c2, 3, 2, 4);
        assert_eq!(c, c2);
        let bt: Vec<f64> = (0..4).flat_map(|j| (0..3).map(move |p| (p, j))).map(|(p, j)| b[p * 4 + j]).collect();
        let mut c3 = vec![0.0; 8];
        matmul_nt_acc(&a, &bt, &mut c3, 2, 3, 4);
        assert_eq!(c, c3);
    }
}
