//! Class indices, one-hot and smoothed label encodings, and the erase /
//! unerase index mapping that converts between full K-class vectors and
//! their (K−1)-entry residual views.
//!
//! Classes are zero-based everywhere inside this workspace; any one-based
//! labels in external data are converted at the I/O boundary.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

/// A class `k` within a label space of `num_classes` classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassIndex {
    k: usize,
    num_classes: usize,
}

impl ClassIndex {
    pub fn new(k: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(CoreError::Dimension(format!(
                "label space needs at least 2 classes, got {num_classes}"
            )));
        }
        if k >= num_classes {
            return Err(CoreError::Index {
                index: k,
                bound: num_classes,
            });
        }
        Ok(ClassIndex { k, num_classes })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// One-hot vector: 1 at the ground-truth class, 0 elsewhere.
pub fn one_hot(class: ClassIndex) -> Vec<f64> {
    let mut q = vec![0.0; class.num_classes()];
    q[class.k()] = 1.0;
    q
}

/// Smoothed label: `1 − ε` at the ground-truth class, `ε/(K−1)` on each of
/// the others. `ε = 0` reduces to one-hot.
pub fn smooth(class: ClassIndex, epsilon: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(CoreError::Parameter(format!(
            "smoothing mass must lie in [0, 1), got {epsilon}"
        )));
    }
    let k_total = class.num_classes();
    let off = epsilon / (k_total - 1) as f64;
    let mut q = vec![off; k_total];
    q[class.k()] = 1.0 - epsilon;
    Ok(q)
}

/// Removes position `k` from a length-K vector, preserving the order of the
/// remaining entries: `out[j] = v[j]` for `j < k`, `v[j+1]` for `j ≥ k`.
pub fn erase(v: &[f64], class: ClassIndex) -> Result<Vec<f64>> {
    if v.len() != class.num_classes() {
        return Err(CoreError::Dimension(format!(
            "vector has length {} but the class index expects {}",
            v.len(),
            class.num_classes()
        )));
    }
    let mut out = Vec::with_capacity(v.len() - 1);
    out.extend_from_slice(&v[..class.k()]);
    out.extend_from_slice(&v[class.k() + 1..]);
    Ok(out)
}

/// Inverse of [`erase`]: scatters a length-(K−1) vector back to length K,
/// writing `fill` at position `k`. `erase(unerase(v, k, c), k) == v` exactly.
pub fn unerase(v_res: &[f64], class: ClassIndex, fill: f64) -> Result<Vec<f64>> {
    if v_res.len() + 1 != class.num_classes() {
        return Err(CoreError::Dimension(format!(
            "residual vector has length {} but the class index expects {}",
            v_res.len(),
            class.num_classes() - 1
        )));
    }
    let mut out = Vec::with_capacity(class.num_classes());
    out.extend_from_slice(&v_res[..class.k()]);
    out.push(fill);
    out.extend_from_slice(&v_res[class.k()..]);
    Ok(out)
}

/// Residual position of full-vector class `j ≠ k`: `j` if `j < k`, else `j−1`.
pub fn residual_position(class: ClassIndex, j: usize) -> Option<usize> {
    if j == class.k() || j >= class.num_classes() {
        None
    } else if j < class.k() {
        Some(j)
    } else {
        Some(j - 1)
    }
}
