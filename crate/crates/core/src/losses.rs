//! Loss terms and their analytic gradients.
//!
//! Everything here is a pure function. The classifier-facing losses return
//! gradients with respect to the logits `z`; the update loss returns the
//! gradient with respect to one row of the residual correlation matrix.
//! [`total_loss`] combines them with strict gradient routing:
//!
//! * the residual loss never sends gradient to the matrix (its residual
//!   label enters as a detached constant), and never to the ground-truth
//!   logit;
//! * the update loss never sends gradient to the classifier (its
//!   probabilities enter detached).
//!
//! Both stop-gradients hold bit-exactly: the excluded contributions are
//! never computed, rather than computed and zeroed.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::labels::{erase, one_hot, smooth, unerase, ClassIndex};
use crate::numeric::{log_softmax, softmax};
use crate::residual::ResidualCorrelationMatrix;

/// Loss normalization convention.
///
/// Cross-entropy sums can be left bare or divided by the number of summed
/// terms. [`Prefactor::Unit`] is the default: losses are plain sums and the
/// gradients take their textbook `p − q` form. [`Prefactor::Normalized`]
/// divides full-vector losses by `K` and residual-space losses by `K−1`,
/// scaling each gradient by the same factor so analytic and numeric
/// derivatives stay consistent under either convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prefactor {
    #[default]
    Unit,
    Normalized,
}

impl Prefactor {
    /// Factor for losses over all `K` classes.
    pub fn full(self, num_classes: usize) -> f64 {
        match self {
            Prefactor::Unit => 1.0,
            Prefactor::Normalized => 1.0 / num_classes as f64,
        }
    }

    /// Factor for losses over the `K−1` residual classes.
    pub fn residual(self, num_classes: usize) -> f64 {
        match self {
            Prefactor::Unit => 1.0,
            Prefactor::Normalized => 1.0 / (num_classes - 1) as f64,
        }
    }
}

/// Knowledge-distillation hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdConfig {
    /// Trade-off between the hard and soft terms, in `[0, 1]`.
    pub alpha: f64,
    /// Softening temperature, `> 0`.
    pub temperature: f64,
}

impl KdConfig {
    pub fn new(alpha: f64, temperature: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(CoreError::Parameter(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(CoreError::Parameter(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        Ok(KdConfig { alpha, temperature })
    }
}

/// All loss terms for one sample, with routed gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBundle {
    pub hard: f64,
    pub res: f64,
    pub upd: f64,
    /// `hard + res_weight·res + upd`.
    pub total: f64,
    /// Gradient of `total` w.r.t. the logits. Receives contributions from
    /// the hard and residual terms only.
    pub grad_z: Vec<f64>,
    /// Gradient of `total` w.r.t. row `k` of the residual matrix. Receives
    /// a contribution from the update term only.
    pub grad_s_row: Vec<f64>,
    /// The residual term's weight, `1 − acc_train`.
    pub res_weight: f64,
}

fn check_target(target: &[f64], len: usize, what: &str) -> Result<()> {
    if target.len() != len {
        return Err(CoreError::Dimension(format!(
            "{what} has length {} but the logits have length {len}",
            target.len()
        )));
    }
    Ok(())
}

/// Cross-entropy of softmax(z) against an arbitrary probability target
/// (one-hot, smoothed, or anything else on the simplex).
///
/// Returns `(loss, grad_z)` with `loss = −c·Σ q_i ln p_i` and
/// `grad_z = c·(p − q)`.
pub fn cross_entropy(z: &[f64], target: &[f64], prefactor: Prefactor) -> Result<(f64, Vec<f64>)> {
    check_target(target, z.len(), "target distribution")?;
    let c = prefactor.full(z.len());
    let log_p = log_softmax(z)?;
    let p = softmax(z)?;
    let loss = -c * target.iter().zip(&log_p).map(|(q, lp)| q * lp).sum::<f64>();
    let grad = p.iter().zip(target).map(|(pi, qi)| c * (pi - qi)).collect();
    Ok((loss, grad))
}

/// Hard-label cross-entropy: [`cross_entropy`] against `one_hot(k)`.
pub fn hard_ce(z: &[f64], class: ClassIndex, prefactor: Prefactor) -> Result<(f64, Vec<f64>)> {
    if z.len() != class.num_classes() {
        return Err(CoreError::Dimension(format!(
            "logits have length {} but the class index expects {}",
            z.len(),
            class.num_classes()
        )));
    }
    cross_entropy(z, &one_hot(class), prefactor)
}

/// Cross-entropy against a smoothed label with mass `epsilon`.
pub fn smoothed_ce(
    z: &[f64],
    class: ClassIndex,
    epsilon: f64,
    prefactor: Prefactor,
) -> Result<(f64, Vec<f64>)> {
    if z.len() != class.num_classes() {
        return Err(CoreError::Dimension(format!(
            "logits have length {} but the class index expects {}",
            z.len(),
            class.num_classes()
        )));
    }
    cross_entropy(z, &smooth(class, epsilon)?, prefactor)
}

/// Distillation soft loss at temperature `T`: cross-entropy of the tempered
/// student distribution `softmax(z/T)` against the teacher `q_soft`.
///
/// Returns `(loss, grad_z)` with `grad_z = (c/T)·(softmax(z/T) − q_soft)`.
/// At `T = 1` this reduces to plain cross-entropy against `q_soft`.
pub fn kd_soft_loss(
    z: &[f64],
    q_soft: &[f64],
    temperature: f64,
    prefactor: Prefactor,
) -> Result<(f64, Vec<f64>)> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(CoreError::Parameter(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    check_target(q_soft, z.len(), "teacher distribution")?;
    let c = prefactor.full(z.len());
    let tempered: Vec<f64> = z.iter().map(|zi| zi / temperature).collect();
    let log_p = log_softmax(&tempered)?;
    let p = softmax(&tempered)?;
    let loss = -c * q_soft.iter().zip(&log_p).map(|(q, lp)| q * lp).sum::<f64>();
    let grad = p
        .iter()
        .zip(q_soft)
        .map(|(pi, qi)| c / temperature * (pi - qi))
        .collect();
    Ok((loss, grad))
}

/// Blended distillation loss `(1−α)·L_hard + α·T²·L_soft`, with the
/// matching gradient combination.
pub fn kd_blended_loss(
    z: &[f64],
    class: ClassIndex,
    q_soft: &[f64],
    cfg: KdConfig,
    prefactor: Prefactor,
) -> Result<(f64, Vec<f64>)> {
    let (hard, g_hard) = hard_ce(z, class, prefactor)?;
    let (soft, g_soft) = kd_soft_loss(z, q_soft, cfg.temperature, prefactor)?;
    let t2 = cfg.temperature * cfg.temperature;
    let loss = (1.0 - cfg.alpha) * hard + cfg.alpha * t2 * soft;
    let grad = g_hard
        .iter()
        .zip(&g_soft)
        .map(|(h, s)| (1.0 - cfg.alpha) * h + cfg.alpha * t2 * s)
        .collect();
    Ok((loss, grad))
}

/// The stationary target of the blended distillation gradient at `T = 1`:
/// `((1−α)·one_hot(k) + α·T·q_soft) / (1 − α + α·T)`.
///
/// Gradient descent on [`kd_blended_loss`] with `T = 1` drives `softmax(z)`
/// to exactly this distribution.
pub fn kd_target(class: ClassIndex, q_soft: &[f64], cfg: KdConfig) -> Result<Vec<f64>> {
    check_target(q_soft, class.num_classes(), "teacher distribution")?;
    let q_hard = one_hot(class);
    let denom = 1.0 - cfg.alpha + cfg.alpha * cfg.temperature;
    Ok(q_hard
        .iter()
        .zip(q_soft)
        .map(|(h, s)| ((1.0 - cfg.alpha) * h + cfg.alpha * cfg.temperature * s) / denom)
        .collect())
}

/// Residual loss: cross-entropy of the classifier's renormalized non-truth
/// probabilities against a detached residual label.
///
/// `p_res = softmax(erase(z, k))` — identically the full softmax restricted
/// to classes ≠ k and renormalized. Returns `(loss, grad_z)` where
/// `loss = −c·Σ q_res_i ln p_res_i` and the gradient is
/// `c·(p_res − q_res)` scattered back through the index mapping, so
/// `grad_z[k] == 0` exactly.
///
/// `q_res_detached` must be treated as a constant by the caller; this loss
/// never contributes gradient to the residual matrix.
pub fn residual_loss(
    z: &[f64],
    class: ClassIndex,
    q_res_detached: &[f64],
    prefactor: Prefactor,
) -> Result<(f64, Vec<f64>)> {
    if z.len() != class.num_classes() {
        return Err(CoreError::Dimension(format!(
            "logits have length {} but the class index expects {}",
            z.len(),
            class.num_classes()
        )));
    }
    check_target(q_res_detached, z.len() - 1, "residual label")?;
    let c = prefactor.residual(z.len());
    let z_res = erase(z, class)?;
    let log_p = log_softmax(&z_res)?;
    let p = softmax(&z_res)?;
    let loss = -c
        * q_res_detached
            .iter()
            .zip(&log_p)
            .map(|(q, lp)| q * lp)
            .sum::<f64>();
    let grad_res: Vec<f64> = p
        .iter()
        .zip(q_res_detached)
        .map(|(pi, qi)| c * (pi - qi))
        .collect();
    let grad_z = unerase(&grad_res, class, 0.0)?;
    Ok((loss, grad_z))
}

/// Update loss: reverse cross-entropy that teaches the residual matrix the
/// classifier's current error distribution.
///
/// `z_detached` must carry no gradient linkage to the classifier; its
/// renormalized non-truth probabilities `p̂_res` act as a constant target.
/// Returns `(loss, grad_s_row)` with `loss = −c·Σ p̂_res_i ln q_res_i` and
/// `grad_s_row = c·(q_res − p̂_res)` over row `k` of the matrix. Rows ≠ k
/// and the classifier receive exactly zero gradient.
pub fn update_loss(
    z_detached: &[f64],
    class: ClassIndex,
    s: &ResidualCorrelationMatrix,
    prefactor: Prefactor,
) -> Result<(f64, Vec<f64>)> {
    if z_detached.len() != class.num_classes() {
        return Err(CoreError::Dimension(format!(
            "logits have length {} but the class index expects {}",
            z_detached.len(),
            class.num_classes()
        )));
    }
    let c = prefactor.residual(z_detached.len());
    let p_res = softmax(&erase(z_detached, class)?)?;
    let q_res = s.residual_label(class)?;
    let mut loss = 0.0;
    for (p, q) in p_res.iter().zip(&q_res) {
        loss -= p * crate::math::ln(*q);
    }
    let grad_s_row = s.update_gradient(&p_res, class, c)?;
    Ok((c * loss, grad_s_row))
}

/// Full per-sample objective: `hard + (1 − acc_train)·res + upd`, with
/// smoothing optionally applied to the hard term's target.
///
/// Gradient routing is strict: `grad_z` sums the hard gradient and the
/// weighted residual gradient (the update term contributes nothing);
/// `grad_s_row` is the update gradient alone (the other terms contribute
/// nothing). The residual label and the classifier probabilities cross
/// between terms only as detached constants.
pub fn total_loss(
    z: &[f64],
    class: ClassIndex,
    s: &ResidualCorrelationMatrix,
    acc_train: f64,
    smoothing: Option<f64>,
    prefactor: Prefactor,
) -> Result<LossBundle> {
    if !(0.0..=1.0).contains(&acc_train) {
        return Err(CoreError::Parameter(format!(
            "acc_train must lie in [0, 1], got {acc_train}"
        )));
    }
    let (hard, g_hard) = match smoothing {
        Some(eps) => smoothed_ce(z, class, eps, prefactor)?,
        None => hard_ce(z, class, prefactor)?,
    };
    let q_res = s.residual_label(class)?; // detached from here on
    let (res, g_res) = residual_loss(z, class, &q_res, prefactor)?;
    let (upd, grad_s_row) = update_loss(z, class, s, prefactor)?;
    let res_weight = 1.0 - acc_train;
    let grad_z = g_hard
        .iter()
        .zip(&g_res)
        .map(|(h, r)| h + res_weight * r)
        .collect();
    Ok(LossBundle {
        hard,
        res,
        upd,
        total: hard + res_weight * res + upd,
        grad_z,
        grad_s_row,
        res_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::entropy;
    use alloc::vec::Vec;

    fn cls(k: usize, num_classes: usize) -> ClassIndex {
        ClassIndex::new(k, num_classes).unwrap()
    }

    fn logits_for(p: &[f64]) -> Vec<f64> {
        p.iter().map(|v| v.ln()).collect()
    }

    #[test]
    fn hard_ce_at_uniform_logits() {
        let (loss, grad) = hard_ce(&[0.0, 0.0, 0.0], cls(0, 3), Prefactor::Unit).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-15);
        assert!((grad[0] - (1.0 / 3.0 - 1.0)).abs() < 1e-15);
        assert!((grad[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((grad[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hard_ce_vanishes_when_confident_and_right() {
        let (loss, _) = hard_ce(&[30.0, 0.0, 0.0], cls(0, 3), Prefactor::Unit).unwrap();
        assert!(loss < 1e-12);
    }

    #[test]
    fn gradients_sum_to_zero() {
        let z = [0.4, -1.2, 2.2, 0.0, -0.7];
        let (_, g) = hard_ce(&z, cls(2, 5), Prefactor::Unit).unwrap();
        assert!(g.iter().sum::<f64>().abs() < 1e-12);
        let (_, g) = smoothed_ce(&z, cls(2, 5), 0.1, Prefactor::Unit).unwrap();
        assert!(g.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn normalized_prefactor_scales_loss_and_gradient_together() {
        let z = [0.4, -1.2, 2.2];
        let (l1, g1) = hard_ce(&z, cls(1, 3), Prefactor::Unit).unwrap();
        let (l3, g3) = hard_ce(&z, cls(1, 3), Prefactor::Normalized).unwrap();
        assert!((l1 / 3.0 - l3).abs() < 1e-15);
        for (a, b) in g1.iter().zip(&g3) {
            assert!((a / 3.0 - b).abs() < 1e-15);
        }
    }

    #[test]
    fn soft_and_hard_terms_can_disagree_in_sign() {
        // Confident-but-wrong teacher entry: the soft term pushes the top
        // logit down (+ gradient) while the hard term pushes it up.
        let z = logits_for(&[0.7, 0.2, 0.1]);
        let (_, g_soft) = kd_soft_loss(&z, &[0.6, 0.3, 0.1], 1.0, Prefactor::Unit).unwrap();
        let (_, g_hard) = hard_ce(&z, cls(0, 3), Prefactor::Unit).unwrap();
        assert!((g_soft[0] - 0.1).abs() < 1e-12);
        assert!((g_hard[0] - -0.3).abs() < 1e-12);
        assert!(g_soft[0] > 0.0 && g_hard[0] < 0.0);
    }

    #[test]
    fn kd_soft_loss_fixed_point_has_zero_gradient() {
        let q_soft = [0.6f64, 0.3, 0.1];
        let z: Vec<f64> = q_soft.iter().map(|q| q.ln() + 4.0).collect();
        let (_, g) = kd_soft_loss(&z, &q_soft, 1.0, Prefactor::Unit).unwrap();
        for v in g {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn kd_soft_loss_validates_temperature() {
        assert!(kd_soft_loss(&[0.0, 0.0], &[0.5, 0.5], 0.0, Prefactor::Unit).is_err());
        assert!(kd_soft_loss(&[0.0, 0.0], &[0.5, 0.5], -2.0, Prefactor::Unit).is_err());
    }

    #[test]
    fn blended_loss_interpolates_the_gradients() {
        let z = logits_for(&[0.7, 0.2, 0.1]);
        let q_soft = [0.6, 0.3, 0.1];
        let cfg = KdConfig::new(0.5, 1.0).unwrap();
        let (_, g) = kd_blended_loss(&z, cls(0, 3), &q_soft, cfg, Prefactor::Unit).unwrap();
        // 0.5·(−0.3) + 0.5·(+0.1) = −0.10: the blend still raises the top
        // logit, just more gently than the hard loss alone.
        assert!((g[0] - -0.10).abs() < 1e-12);

        let cfg = KdConfig::new(0.0, 3.0).unwrap();
        let (l, g) = kd_blended_loss(&z, cls(0, 3), &q_soft, cfg, Prefactor::Unit).unwrap();
        let (l_hard, g_hard) = hard_ce(&z, cls(0, 3), Prefactor::Unit).unwrap();
        assert_eq!(l, l_hard);
        assert_eq!(g, g_hard);
    }

    #[test]
    fn kd_target_limits_and_reference_value() {
        let q_soft = [0.6, 0.3, 0.1];
        let t0 = kd_target(cls(0, 3), &q_soft, KdConfig::new(0.0, 2.0).unwrap()).unwrap();
        assert_eq!(t0, one_hot(cls(0, 3)));
        let t1 = kd_target(cls(0, 3), &q_soft, KdConfig::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(t1, q_soft);
        let t = kd_target(cls(0, 3), &q_soft, KdConfig::new(0.5, 1.0).unwrap()).unwrap();
        assert_eq!(t, [0.8, 0.15, 0.05]);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_loss_gradient_skips_the_truth_logit() {
        let z = [0.3, -0.5, 1.7, 0.2];
        let q_res = [0.5, 0.2, 0.3];
        let (_, g) = residual_loss(&z, cls(2, 4), &q_res, Prefactor::Unit).unwrap();
        assert_eq!(g[2], 0.0);
        assert!((g[0] + g[1] + g[3]).abs() < 1e-12);
    }

    #[test]
    fn residual_loss_is_stationary_at_symmetric_logits() {
        // Non-truth logits equal and the residual label uniform: the
        // renormalized prediction already matches the target.
        let (_, g) = residual_loss(&[5.0, 1.0, 1.0], cls(0, 3), &[0.5, 0.5], Prefactor::Unit)
            .unwrap();
        assert_eq!(g, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn residual_probabilities_are_renormalized_full_probabilities() {
        let z = [0.9, -0.4, 0.1, 2.0];
        let class = cls(1, 4);
        let p = softmax(&z).unwrap();
        let p_res = softmax(&erase(&z, class).unwrap()).unwrap();
        let denom = 1.0 - p[1];
        assert!((p_res[0] - p[0] / denom).abs() < 1e-15);
        assert!((p_res[1] - p[2] / denom).abs() < 1e-15);
        assert!((p_res[2] - p[3] / denom).abs() < 1e-15);
    }

    #[test]
    fn update_loss_reference_gradient() {
        let s = ResidualCorrelationMatrix::new(3).unwrap();
        // Non-truth probabilities renormalize to [0.9, 0.1].
        let z = [7.0, 0.9f64.ln(), 0.1f64.ln()];
        let (loss, g) = update_loss(&z, cls(0, 3), &s, Prefactor::Unit).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-12);
        assert!((g[0] - -0.4).abs() < 1e-12);
        assert!((g[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn update_loss_obeys_gibbs_inequality() {
        let mut s = ResidualCorrelationMatrix::new(4).unwrap();
        s.logits_mut()
            .row_mut(1)
            .copy_from_slice(&[0.4, -0.2, 0.9]);
        let z = [0.1, -3.0, 0.7, 0.2];
        let class = cls(1, 4);
        let (loss, _) = update_loss(&z, class, &s, Prefactor::Unit).unwrap();
        let p_res = softmax(&erase(&z, class).unwrap()).unwrap();
        assert!(loss >= entropy(&p_res) - 1e-12);

        // Equality exactly at the fixed point q_res = p̂_res.
        let q_res = s.residual_label(class).unwrap();
        let z_match = [q_res[0].ln(), -50.0, q_res[1].ln(), q_res[2].ln()];
        let (loss, g) = update_loss(&z_match, class, &s, Prefactor::Unit).unwrap();
        let p_res = softmax(&erase(&z_match, class).unwrap()).unwrap();
        assert!((loss - entropy(&p_res)).abs() < 1e-9);
        for v in g {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn total_loss_combines_terms_exactly() {
        let mut s = ResidualCorrelationMatrix::new(5).unwrap();
        for k in 0..5 {
            for (j, v) in s.logits_mut().row_mut(k).iter_mut().enumerate() {
                *v = ((k + 2 * j) as f64).sin();
            }
        }
        let z = [0.3, -1.0, 0.8, 0.05, -0.4];
        let class = cls(3, 5);
        let b = total_loss(&z, class, &s, 0.25, None, Prefactor::Unit).unwrap();
        assert!((b.total - (b.hard + b.res_weight * b.res + b.upd)).abs() < 1e-12);
        assert!((b.res_weight - 0.75).abs() < 1e-15);

        let (_, g_hard) = hard_ce(&z, class, Prefactor::Unit).unwrap();
        let q_res = s.residual_label(class).unwrap();
        let (_, g_res) = residual_loss(&z, class, &q_res, Prefactor::Unit).unwrap();
        for i in 0..5 {
            assert!((b.grad_z[i] - (g_hard[i] + 0.75 * g_res[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn perfect_accuracy_reduces_to_the_hard_gradient() {
        let mut s = ResidualCorrelationMatrix::new(4).unwrap();
        s.logits_mut().row_mut(2).copy_from_slice(&[1.0, -1.0, 0.5]);
        let z = [0.2, 0.9, -0.3, 1.1];
        let class = cls(2, 4);
        let b = total_loss(&z, class, &s, 1.0, None, Prefactor::Unit).unwrap();
        let (_, g_hard) = hard_ce(&z, class, Prefactor::Unit).unwrap();
        for (a, h) in b.grad_z.iter().zip(&g_hard) {
            assert!((a - h).abs() < 1e-15);
        }
        // The matrix still learns at full accuracy; only the residual
        // term's pull on the logits is gone.
        assert!(b.grad_s_row.iter().any(|v| v.abs() > 1e-6));
    }

    #[test]
    fn smoothing_changes_only_the_hard_term() {
        let s = ResidualCorrelationMatrix::new(3).unwrap();
        let z = [0.4, 0.1, -0.2];
        let class = cls(0, 3);
        let plain = total_loss(&z, class, &s, 0.5, None, Prefactor::Unit).unwrap();
        let smoothed = total_loss(&z, class, &s, 0.5, Some(0.1), Prefactor::Unit).unwrap();
        assert_ne!(plain.hard, smoothed.hard);
        assert_eq!(plain.res, smoothed.res);
        assert_eq!(plain.upd, smoothed.upd);
        assert_eq!(plain.grad_s_row, smoothed.grad_s_row);
    }

    #[test]
    fn acc_train_outside_unit_interval_is_rejected() {
        let s = ResidualCorrelationMatrix::new(3).unwrap();
        let z = [0.0, 0.0, 0.0];
        assert!(total_loss(&z, cls(0, 3), &s, -0.1, None, Prefactor::Unit).is_err());
        assert!(total_loss(&z, cls(0, 3), &s, 1.5, None, Prefactor::Unit).is_err());
    }
}
