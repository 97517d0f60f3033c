//! Dense row-major matrices, softmax machinery, and the finite-difference
//! gradient-check oracle used to verify every analytic gradient in this
//! crate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;

/// Dense row-major matrix of 64-bit floats.
///
/// Storage is always `rows * cols` contiguous values; constructors reject
/// non-finite entries so downstream arithmetic never has to re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CoreError::Dimension(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("matrix entries must be finite".into()));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(height * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(CoreError::Dimension(format!(
                    "row {i} has length {} but row 0 has length {width}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(height, width, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "matrix index out of range");
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.rows && col < self.cols, "matrix index out of range");
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        assert!(row < self.rows, "row index out of range");
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        assert!(row < self.rows, "row index out of range");
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `out = self * x` for a length-`cols` vector.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec input length");
        assert_eq!(out.len(), self.rows, "matvec output length");
        for (r, slot) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            *slot = acc;
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        Err(CoreError::NonFinite(format!("{what} must be finite")))
    } else {
        Ok(())
    }
}

/// Numerically stable softmax: subtracts the maximum before exponentiating,
/// so inputs of any magnitude map to a positive distribution summing to 1.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(CoreError::Dimension("softmax input is empty".into()));
    }
    check_finite(logits, "softmax input")?;
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| math::exp(z - max)).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

/// Log of the softmax, computed as `z - max - ln(sum(exp(z - max)))` to keep
/// cross-entropy terms accurate when probabilities underflow.
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(CoreError::Dimension("log_softmax input is empty".into()));
    }
    check_finite(logits, "log_softmax input")?;
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = math::ln(logits.iter().map(|z| math::exp(z - max)).sum::<f64>());
    Ok(logits.iter().map(|z| z - max - log_sum).collect())
}

/// Shannon entropy in nats. Zero entries contribute zero.
pub fn entropy(probabilities: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &p in probabilities {
        if p > 0.0 {
            acc -= p * math::ln(p);
        }
    }
    acc
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Compares an analytic gradient against central finite differences of `f`
/// at `point` and returns the worst relative error,
/// `max_i |g_i - fd_i| / max(1, |g_i|, |fd_i|)`
/// with `fd_i = (f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn grad_check<F>(mut f: F, point: &[f64], analytic: &[f64], step: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(CoreError::Parameter(format!(
            "finite-difference step must be positive and finite, got {step}"
        )));
    }
    if point.len() != analytic.len() {
        return Err(CoreError::Dimension(format!(
            "point has {} coordinates but analytic gradient has {}",
            point.len(),
            analytic.len()
        )));
    }
    let mut probe = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..point.len() {
        probe[i] = point[i] + step;
        let hi = f(&probe);
        probe[i] = point[i] - step;
        let lo = f(&probe);
        probe[i] = point[i];
        if !hi.is_finite() || !lo.is_finite() {
            return Err(CoreError::NonFinite(format!(
                "objective returned a non-finite value near coordinate {i}"
            )));
        }
        let fd = (hi - lo) / (2.0 * step);
        let denom = 1.0f64.max(math::abs(analytic[i])).max(math::abs(fd));
        worst = worst.max(math::abs(analytic[i] - fd) / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() <= tol, "{a} vs {e} (tol {tol})");
        }
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        assert_close(&p, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1e-15);
    }

    #[test]
    fn softmax_survives_large_logits() {
        let p = softmax(&[1000.0, 1000.0]).unwrap();
        assert_close(&p, &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn softmax_matches_high_precision_reference() {
        // exp(1..3)/sum evaluated at 30 decimal digits.
        let p = softmax(&[1.0, 2.0, 3.0]).unwrap();
        let expected = [
            0.090030573170380458,
            0.244728471054797652,
            0.665240955774821890,
        ];
        assert_close(&p, &expected, 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_rejects_bad_input() {
        assert!(matches!(softmax(&[]), Err(CoreError::Dimension(_))));
        assert!(matches!(
            softmax(&[1.0, f64::NAN]),
            Err(CoreError::NonFinite(_))
        ));
        assert!(matches!(
            softmax(&[f64::INFINITY, 0.0]),
            Err(CoreError::NonFinite(_))
        ));
    }

    #[test]
    fn log_softmax_agrees_with_softmax() {
        let z = [0.3, -2.0, 5.0, 1.1];
        let p = softmax(&z).unwrap();
        let lp = log_softmax(&z).unwrap();
        for (pi, lpi) in p.iter().zip(&lp) {
            assert!((pi.ln() - lpi).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_of_uniform_is_log_k() {
        let p = [0.25; 4];
        assert!((entropy(&p) - 4.0f64.ln().abs()).abs() < 1e-12);
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
    }

    #[test]
    fn argmax_breaks_ties_toward_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[5.0]), 0);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }

    #[test]
    fn grad_check_on_quadratic_is_nearly_exact() {
        // f(x) = x^2 at x = 3: central differences are exact up to rounding.
        let err = grad_check(|x| x[0] * x[0], &[3.0], &[6.0], 1e-5).unwrap();
        assert!(err < 1e-9, "relative error {err}");
    }

    #[test]
    fn grad_check_flags_non_finite_objectives() {
        let err = grad_check(|x| (-x[0]).sqrt(), &[0.0], &[0.0], 1e-5);
        assert!(matches!(err, Err(CoreError::NonFinite(_))));
        let err = grad_check(|x| x[0], &[0.0], &[1.0], 0.0);
        assert!(matches!(err, Err(CoreError::Parameter(_))));
    }

    #[test]
    fn matrix_shape_is_validated() {
        assert!(DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn matvec_matches_manual_product() {
        let m = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut out = [0.0; 2];
        m.matvec(&[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [-2.0, -2.0]);
    }
}
