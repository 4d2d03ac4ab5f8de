use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 5e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Bias-corrected adaptive-moment optimizer with per-parameter state keyed
/// by `K`.
///
/// Parameters are updated only when they carry a gradient, so rows that a
/// step never touched keep their values exactly.
#[derive(Debug, Clone)]
pub struct Adam<K> {
    pub config: AdamConfig,
    step: u64,
    state: HashMap<K, Moments>,
}

impl<K: Hash + Eq + Clone> Adam<K> {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            state: HashMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Advance the step counter; call once per optimizer step, before
    /// [`Adam::update`].
    pub fn tick(&mut self) {
        self.step += 1;
    }

    /// Apply the current step to one parameter and clear its gradient.
    pub fn update(&mut self, key: &K, param: &mut Tensor) -> Result<()> {
        let Some(grad) = param.grad.take() else {
            return Ok(());
        };
        if !param.requires_grad {
            return Ok(());
        }
        if grad.len() != param.len() {
            return Err(Error::Shape(format!(
                "gradient of length {} for parameter of length {}",
                grad.len(),
                param.len()
            )));
        }
        if self.step == 0 {
            return Err(Error::InvalidArgument("Adam::update before tick".into()));
        }
        let n = param.len();
        let moments = self.state.entry(key.clone()).or_insert_with(|| Moments {
            m: vec![0.0; n],
            v: vec![0.0; n],
        });
        if moments.m.len() != n {
            return Err(Error::Shape(format!(
                "optimizer state of length {} for parameter of length {n}",
                moments.m.len()
            )));
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in param
            .values_mut()
            .iter_mut()
            .zip(&grad)
            .zip(moments.m.iter_mut())
            .zip(moments.v.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            let delta = lr * m_hat / (v_hat.sqrt() + eps);
            if delta != 0.0 {
                *p -= delta;
            }
        }
        Ok(())
    }

    /// One full step over `params`.
    pub fn step<'p, I>(&mut self, params: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, &'p mut Tensor)>,
    {
        self.tick();
        for (key, p) in params {
            self.update(&key, p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_values() {
        let mut adam = Adam::new(AdamConfig::default());
        let mut p = Tensor::vector(vec![1.0, -2.0]).trainable();
        p.grad = Some(vec![0.0, 0.0]);
        adam.step([("p", &mut p)]).unwrap();
        assert_eq!(p.values(), &[1.0, -2.0]);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient() {
        let lr = 1e-3;
        let mut adam = Adam::new(AdamConfig { lr, ..AdamConfig::default() });
        let mut p = Tensor::vector(vec![0.0, 0.0, 0.0]).trainable();
        p.grad = Some(vec![3.0, -0.2, 1e-3]);
        adam.step([("p", &mut p)]).unwrap();
        for (x, g) in p.values().iter().zip([3.0f64, -0.2, 1e-3]) {
            assert_eq!(x.signum(), -g.signum());
            assert!(x.abs() <= lr * (1.0 + 1e-6));
            assert!(x.abs() >= lr * (1.0 - 1e-4));
        }
    }

    #[test]
    fn frozen_and_gradless_untouched() {
        let mut adam = Adam::new(AdamConfig { lr: 1.0, ..AdamConfig::default() });
        let mut frozen = Tensor::vector(vec![1.0]);
        frozen.grad = Some(vec![5.0]);
        let mut idle = Tensor::vector(vec![2.0]).trainable();
        adam.step([("f", &mut frozen), ("i", &mut idle)]).unwrap();
        assert_eq!(frozen.values(), &[1.0]);
        assert_eq!(idle.values(), &[2.0]);
    }

    #[test]
    fn shape_mismatch_errors() {
        let mut adam = Adam::new(AdamConfig::default());
        let mut p = Tensor::vector(vec![1.0, 2.0]).trainable();
        p.grad = Some(vec![1.0, 1.0]);
        adam.step([("p", &mut p)]).unwrap();
        let mut q = Tensor::vector(vec![1.0, 2.0, 3.0]).trainable();
        q.grad = Some(vec![1.0; 3]);
        assert!(adam.step([("p", &mut q)]).is_err());
    }

    #[test]
    fn minimizes_quadratic() {
        // Reference: the same recurrence run independently reaches
        // |x - 3| < 0.05 after 100 steps.
        let mut adam = Adam::new(AdamConfig { lr: 0.1, ..AdamConfig::default() });
        let mut x = Tensor::vector(vec![0.0]).trainable();
        for _ in 0..100 {
            let g = 2.0 * (x.values()[0] - 3.0);
            x.grad = Some(vec![g]);
            adam.step([((), &mut x)]).unwrap();
        }
        assert!((x.values()[0] - 3.0).abs() < 0.05, "{}", x.values()[0]);
    }
}
