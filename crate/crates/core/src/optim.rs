//! First-order optimizers over flat parameter vectors, and the stepped
//! learning-rate schedule.
//!
//! Update rules, written out so alternate implementations can match them
//! bit for bit:
//!
//! SGD with Nesterov momentum (momentum `μ`, velocity `v` starting at 0):
//! ```text
//! v ← μ·v + g
//! p ← p − lr·(g + μ·v)
//! ```
//! `μ = 0` reduces to plain SGD.
//!
//! Adam (decay rates `β1`, `β2`, slots `m`, `v` starting at 0, step
//! counter `t` starting at 1):
//! ```text
//! m ← β1·m + (1−β1)·g        m̂ = m / (1 − β1^t)
//! v ← β2·v + (1−β2)·g²       v̂ = v / (1 − β2^t)
//! p ← p − lr·m̂ / (sqrt(v̂) + ε)
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;

#[derive(Debug, Clone)]
enum OptimizerKind {
    SgdNesterov {
        momentum: f64,
        velocity: Vec<f64>,
    },
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        step: u32,
        mean: Vec<f64>,
        variance: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
}

impl Optimizer {
    pub fn sgd_nesterov(param_count: usize, momentum: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(CoreError::Parameter(format!(
                "momentum must lie in [0, 1), got {momentum}"
            )));
        }
        Ok(Optimizer {
            kind: OptimizerKind::SgdNesterov {
                momentum,
                velocity: vec![0.0; param_count],
            },
        })
    }

    pub fn adam(param_count: usize, beta1: f64, beta2: f64, epsilon: f64) -> Result<Self> {
        for (name, value) in [("beta1", beta1), ("beta2", beta2)] {
            if !(0.0..1.0).contains(&value) {
                return Err(CoreError::Parameter(format!(
                    "{name} must lie in [0, 1), got {value}"
                )));
            }
        }
        if !(epsilon > 0.0) {
            return Err(CoreError::Parameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Optimizer {
            kind: OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
                step: 0,
                mean: vec![0.0; param_count],
                variance: vec![0.0; param_count],
            },
        })
    }

    /// Adam with the customary defaults β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn adam_default(param_count: usize) -> Self {
        Self::adam(param_count, 0.9, 0.999, 1e-8).expect("default hyperparameters are valid")
    }

    pub fn param_count(&self) -> usize {
        match &self.kind {
            OptimizerKind::SgdNesterov { velocity, .. } => velocity.len(),
            OptimizerKind::Adam { mean, .. } => mean.len(),
        }
    }

    /// One in-place update of `params` from `grads` at learning rate `lr`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        self.step_segmented(params, grads, params.len(), lr, lr)
    }

    /// Like [`Optimizer::step`], but coordinates at or beyond `boundary`
    /// use `lr_tail` instead of `lr_head`. One moment/velocity slot set and
    /// one Adam step counter still cover the whole vector.
    pub fn step_segmented(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        boundary: usize,
        lr_head: f64,
        lr_tail: f64,
    ) -> Result<()> {
        if params.len() != self.param_count() || grads.len() != self.param_count() {
            return Err(CoreError::Dimension(format!(
                "optimizer holds {} slots but got {} params and {} grads",
                self.param_count(),
                params.len(),
                grads.len()
            )));
        }
        if boundary > params.len() {
            return Err(CoreError::Dimension(format!(
                "segment boundary {boundary} exceeds parameter count {}",
                params.len()
            )));
        }
        for lr in [lr_head, lr_tail] {
            if !(lr > 0.0) || !lr.is_finite() {
                return Err(CoreError::Parameter(format!(
                    "learning rate must be positive and finite, got {lr}"
                )));
            }
        }
        match &mut self.kind {
            OptimizerKind::SgdNesterov { momentum, velocity } => {
                let mu = *momentum;
                for (i, ((p, g), v)) in params.iter_mut().zip(grads).zip(velocity).enumerate() {
                    let lr = if i < boundary { lr_head } else { lr_tail };
                    *v = mu * *v + g;
                    *p -= lr * (g + mu * *v);
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
                step,
                mean,
                variance,
            } => {
                *step += 1;
                let t = *step as i32;
                let bias1 = 1.0 - crate::math::pow_int(*beta1, t);
                let bias2 = 1.0 - crate::math::pow_int(*beta2, t);
                for (i, (((p, g), m), v)) in
                    params.iter_mut().zip(grads).zip(mean).zip(variance).enumerate()
                {
                    let lr = if i < boundary { lr_head } else { lr_tail };
                    *m = *beta1 * *m + (1.0 - *beta1) * g;
                    *v = *beta2 * *v + (1.0 - *beta2) * g * g;
                    let m_hat = *m / bias1;
                    let v_hat = *v / bias2;
                    *p -= lr * m_hat / (math::sqrt(v_hat) + *epsilon);
                }
            }
        }
        Ok(())
    }
}

/// Stepped learning-rate schedule: the rate starts at `initial` and is
/// multiplied by `factor` once for every drop epoch ≤ the current epoch.
/// Epochs are 1-based, so a drop listed at epoch `e` already applies
/// during epoch `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule {
    initial: f64,
    factor: f64,
    drop_epochs: Vec<usize>,
}

impl LrSchedule {
    pub fn new(initial: f64, factor: f64, drop_epochs: Vec<usize>) -> Result<Self> {
        if !(initial > 0.0) || !initial.is_finite() {
            return Err(CoreError::Parameter(format!(
                "initial learning rate must be positive and finite, got {initial}"
            )));
        }
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(CoreError::Parameter(format!(
                "drop factor must be positive and finite, got {factor}"
            )));
        }
        Ok(LrSchedule {
            initial,
            factor,
            drop_epochs,
        })
    }

    /// Constant learning rate.
    pub fn constant(rate: f64) -> Result<Self> {
        Self::new(rate, 1.0, Vec::new())
    }

    pub fn rate(&self, epoch: usize) -> f64 {
        self.scaled_rate(self.initial, epoch)
    }

    /// The schedule's drop pattern applied to a different base rate —
    /// lets a second parameter group follow the same drops from its own
    /// starting rate.
    pub fn scaled_rate(&self, base: f64, epoch: usize) -> f64 {
        let drops = self.drop_epochs.iter().filter(|&&d| d <= epoch).count();
        base * crate::math::pow_int(self.factor, drops as i32)
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }
}
