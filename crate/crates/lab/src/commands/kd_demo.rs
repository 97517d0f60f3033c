use alr_core::fmtnum::format_sig;
use alr_core::labels::{one_hot, ClassIndex};
use alr_core::losses::{hard_ce, kd_soft_loss, kd_target, KdConfig, Prefactor};

use crate::error::Result;

fn render_vec(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|&x| format_sig(x, 9)).collect();
    format!("[{}]", cells.join(", "))
}

/// Prints the worked three-class example where the hard label and the
/// teacher's soft label pull the true-class logit in opposite directions,
/// then the blended target that reconciles them.
pub fn cmd_kd_demo() -> Result<()> {
    let k = 3;
    let class = ClassIndex::new(0, k)?;
    let p = [0.7f64, 0.2, 0.1];
    let q_soft = vec![0.6f64, 0.3, 0.1];
    // Logits whose softmax reproduces p.
    let z: Vec<f64> = p.iter().map(|v| v.ln()).collect();

    let (_, grad_hard) = hard_ce(&z, class, Prefactor::Unit)?;
    let (_, grad_soft) = kd_soft_loss(&z, &q_soft, 1.0, Prefactor::Unit)?;

    println!("model probabilities  p      = {}", render_vec(&p));
    println!("one-hot ground truth q      = {}", render_vec(&one_hot(class)));
    println!("teacher soft label   q_soft = {}", render_vec(&q_soft));
    println!();
    println!("gradients on the true-class logit (T = 1, unit prefactor):");
    println!(
        "  hard loss: {:>4}   (sign {})",
        format_sig(grad_hard[0], 9),
        if grad_hard[0] < 0.0 { "-" } else { "+" }
    );
    println!(
        "  soft loss: {:>4}   (sign {})",
        format_sig(grad_soft[0], 9),
        if grad_soft[0] < 0.0 { "-" } else { "+" }
    );
    assert!(
        grad_hard[0] < 0.0 && grad_soft[0] > 0.0,
        "the two losses must disagree on the true-class logit here"
    );
    println!("  -> the hard loss pushes the logit up, the soft loss pushes it down:");
    println!("     a fixed blend cannot satisfy both, so the blended optimum sits between them.");
    println!();
    println!("blended fixed points (the distribution a KD student converges to):");
    for (alpha, t) in [(0.0, 1.0), (0.5, 1.0), (1.0, 1.0), (0.5, 2.0), (0.25, 4.0)] {
        let target = kd_target(class, &q_soft, KdConfig::new(alpha, t)?)?;
        println!(
            "  kd_target(alpha={alpha}, T={t}) = {}",
            render_vec(&target)
        );
    }
    Ok(())
}
