//! Adam and the step-decay learning-rate schedule.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::math::{pow, sqrt};

/// `lr(i) = initial * factor^floor(i / every)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDecay {
    pub initial: f64,
    pub factor: f64,
    pub every: usize,
}

impl Default for StepDecay {
    fn default() -> Self {
        Self { initial: 5e-4, factor: 0.9, every: 100 }
    }
}

impl StepDecay {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial > 0.0 && self.initial.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(self.factor > 0.0 && self.factor <= 1.0) {
            return Err(Error::InvalidArgument("lr decay factor must be in (0, 1]".into()));
        }
        if self.every == 0 {
            return Err(Error::InvalidArgument("lr decay interval must be at least 1".into()));
        }
        Ok(())
    }

    pub fn lr(&self, iteration: usize) -> f64 {
        self.initial * pow(self.factor, (iteration / self.every) as f64)
    }
}

/// Adam over a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One descent step on `params` along the gradient of the minimized loss.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        check_len("parameters", self.m.len(), params.len())?;
        check_len("gradient", self.m.len(), grad.len())?;
        self.t += 1;
        let bc1 = 1.0 - pow(self.beta1, self.t as f64);
        let bc2 = 1.0 - pow(self.beta2, self.t as f64);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (sqrt(v_hat) + self.eps);
        }
        Ok(())
    }
}
