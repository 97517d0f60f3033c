//! The learnable residual correlation matrix `S` and its derived views.
//!
//! `S` has one row per class and `K−1` real-valued logits per row; the
//! softmax of row `k` is the residual label for class `k`, a distribution
//! over the other classes. Column `j` of row `k` always refers to class
//! `j` if `j < k` and class `j+1` otherwise — the same index mapping as
//! [`crate::labels::erase`] — and every export uses that convention.
//!
//! Rendering here produces in-memory CSV text and PGM bytes; the companion
//! `alr-lab` crate owns actual file I/O.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::fmtnum::format_sig;
use crate::labels::{unerase, ClassIndex};
use crate::numeric::{entropy, softmax, DenseMatrix};

/// How a matrix export lays out each row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportMapping {
    /// `K−1` residual probabilities per row, in residual column order.
    Residual,
    /// `K` values per row with an exact 0 at the ground-truth position, so
    /// the matrix renders square with an empty diagonal.
    FullK,
}

/// Learnable row logits whose per-row softmax gives each class's residual
/// label. Zero-initialized, every residual label is uniform over the `K−1`
/// other classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCorrelationMatrix {
    num_classes: usize,
    logits: DenseMatrix,
}

impl ResidualCorrelationMatrix {
    /// Zero-initialized matrix: every residual label starts uniform.
    pub fn new(num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(CoreError::Dimension(format!(
                "residual matrix needs at least 2 classes, got {num_classes}"
            )));
        }
        Ok(ResidualCorrelationMatrix {
            num_classes,
            logits: DenseMatrix::zeros(num_classes, num_classes - 1),
        })
    }

    pub fn from_logits(logits: DenseMatrix) -> Result<Self> {
        let num_classes = logits.rows();
        if num_classes < 2 || logits.cols() != num_classes - 1 {
            return Err(CoreError::Dimension(format!(
                "residual matrix must be K x (K-1), got {}x{}",
                logits.rows(),
                logits.cols()
            )));
        }
        Ok(ResidualCorrelationMatrix {
            num_classes,
            logits,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of learnable entries: `K(K−1)`.
    pub fn param_count(&self) -> usize {
        self.num_classes * (self.num_classes - 1)
    }

    pub fn logits(&self) -> &DenseMatrix {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut DenseMatrix {
        &mut self.logits
    }

    fn check_class(&self, class: ClassIndex) -> Result<()> {
        if class.num_classes() != self.num_classes {
            return Err(CoreError::Dimension(format!(
                "class index over {} classes used with a {}-class matrix",
                class.num_classes(),
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Residual label for class `k`: softmax of row `k`, a positive
    /// distribution over the other `K−1` classes.
    pub fn residual_label(&self, class: ClassIndex) -> Result<Vec<f64>> {
        self.check_class(class)?;
        softmax(self.logits.row(class.k()))
    }

    /// Shannon entropy (nats) of each row's residual label. Each value lies
    /// in `[0, ln(K−1)]`, and zero-initialized rows sit exactly at the top.
    pub fn row_entropies(&self) -> Vec<f64> {
        (0..self.num_classes)
            .map(|k| entropy(&softmax(self.logits.row(k)).expect("stored logits are finite")))
            .collect()
    }

    /// Gradient of the update loss over row `k`:
    /// `prefactor · (residual_label(S, k) − p_res_detached)`.
    /// All other rows receive no gradient. The caller must pass detached
    /// (constant) probabilities; this quantity never backpropagates into
    /// the classifier.
    pub fn update_gradient(
        &self,
        p_res_detached: &[f64],
        class: ClassIndex,
        prefactor: f64,
    ) -> Result<Vec<f64>> {
        self.check_class(class)?;
        if p_res_detached.len() != self.num_classes - 1 {
            return Err(CoreError::Dimension(format!(
                "detached probabilities have length {}, expected {}",
                p_res_detached.len(),
                self.num_classes - 1
            )));
        }
        let q_res = self.residual_label(class)?;
        Ok(q_res
            .iter()
            .zip(p_res_detached)
            .map(|(q, p)| prefactor * (q - p))
            .collect())
    }

    /// Per-row probabilities under the chosen layout. `FullK` rows carry an
    /// exact 0 at the diagonal position.
    pub fn probability_rows(&self, mapping: ExportMapping) -> Vec<Vec<f64>> {
        (0..self.num_classes)
            .map(|k| {
                let class = ClassIndex::new(k, self.num_classes).expect("k is in range");
                let q = self.residual_label(class).expect("stored logits are finite");
                match mapping {
                    ExportMapping::Residual => q,
                    ExportMapping::FullK => {
                        unerase(&q, class, 0.0).expect("lengths agree by construction")
                    }
                }
            })
            .collect()
    }

    /// CSV rendering: one comma-separated row per class, 9 significant
    /// digits, every row newline-terminated.
    pub fn render_csv(&self, mapping: ExportMapping) -> String {
        let mut out = String::new();
        for row in self.probability_rows(mapping) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                out.push_str(&format_sig(v, 9));
                first = false;
            }
            out.push('\n');
        }
        out
    }

    /// Binary PGM (P5, maxval 255) rendering; each probability becomes the
    /// byte `round(255·p)`, row-major.
    pub fn render_pgm(&self, mapping: ExportMapping) -> Vec<u8> {
        let rows = self.probability_rows(mapping);
        let height = rows.len();
        let width = rows[0].len();
        let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
        for row in &rows {
            for &p in row {
                out.push(crate::math::round(255.0 * p) as u8);
            }
        }
        out
    }
}
