use alr_core::labels::{erase, ClassIndex};
use alr_core::losses::{
    hard_ce, kd_blended_loss, kd_soft_loss, residual_loss, smoothed_ce, total_loss, update_loss,
    KdConfig, Prefactor,
};
use alr_core::model::MlpModel;
use alr_core::numeric::{grad_check, softmax};
use alr_core::residual::ResidualCorrelationMatrix;
use alr_core::rng::RngStream;

use crate::error::{LabError, Result};

const STEP: f64 = 1e-5;
const LOSS_LIMIT: f64 = 1e-6;
const END_TO_END_LIMIT: f64 = 1e-5;
const CLASS_COUNTS: [usize; 3] = [3, 6, 10];
const POINTS_PER_CASE: usize = 100;

struct Row {
    name: &'static str,
    points: usize,
    max_err: f64,
    limit: f64,
}

/// Verifies every analytic gradient against central finite differences and
/// prints one table row per loss. With `corrupt` set, one gradient is
/// perturbed on purpose so the command demonstrably fails (exit 1).
pub fn cmd_gradcheck(corrupt: bool) -> Result<()> {
    let rows = run_checks(corrupt)?;

    println!("{:<12} {:>8} {:>14} {:>8} {:>8}", "loss", "points", "max_rel_err", "limit", "status");
    let mut failures = Vec::new();
    for row in &rows {
        let ok = row.max_err <= row.limit;
        println!(
            "{:<12} {:>8} {:>14.3e} {:>8.0e} {:>8}",
            row.name,
            row.points,
            row.max_err,
            row.limit,
            if ok { "ok" } else { "FAIL" }
        );
        if !ok {
            failures.push(row.name);
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(LabError::Check(format!(
            "gradient mismatch beyond tolerance for: {}",
            failures.join(", ")
        )))
    }
}

fn random_logits(rng: &mut RngStream, len: usize) -> Vec<f64> {
    (0..len).map(|_| 2.0 * rng.next_gaussian()).collect()
}

fn random_simplex(rng: &mut RngStream, len: usize) -> Vec<f64> {
    softmax(&random_logits(rng, len)).expect("finite logits")
}

fn random_matrix(rng: &mut RngStream, k: usize) -> ResidualCorrelationMatrix {
    let mut s = ResidualCorrelationMatrix::new(k).expect("k >= 2");
    for v in s.logits_mut().as_mut_slice() {
        *v = rng.next_gaussian();
    }
    s
}

/// Runs one finite-difference case and folds it into (points, max error).
fn fold(
    acc: &mut (usize, f64),
    f: impl FnMut(&[f64]) -> f64,
    point: &[f64],
    analytic: &[f64],
) -> Result<()> {
    let err = grad_check(f, point, analytic, STEP)?;
    acc.0 += 1;
    acc.1 = acc.1.max(err);
    Ok(())
}

fn run_checks(corrupt: bool) -> Result<Vec<Row>> {
    let mut rng = RngStream::new(0xC0FFEE);
    let prefactors = [Prefactor::Unit, Prefactor::Normalized];

    let mut hard = (0usize, 0.0f64);
    let mut smoothed = (0usize, 0.0f64);
    let mut soft = (0usize, 0.0f64);
    let mut kd_total = (0usize, 0.0f64);
    let mut res = (0usize, 0.0f64);
    let mut upd = (0usize, 0.0f64);
    let mut total = (0usize, 0.0f64);

    for k in CLASS_COUNTS {
        for pref in prefactors {
            for point in 0..POINTS_PER_CASE {
                let z = random_logits(&mut rng, k);
                let class = ClassIndex::new(rng.next_below(k as u64) as usize, k)?;

                let (_, mut grad) = hard_ce(&z, class, pref)?;
                if corrupt && point == 0 {
                    // Negative-control hook: shift one coordinate so the
                    // checker has something real to catch.
                    grad[0] += 1e-3;
                }
                fold(&mut hard, |p| hard_ce(p, class, pref).unwrap().0, &z, &grad)?;

                let eps = 0.3 * rng.next_f64();
                let (_, grad) = smoothed_ce(&z, class, eps, pref)?;
                fold(
                    &mut smoothed,
                    |p| smoothed_ce(p, class, eps, pref).unwrap().0,
                    &z,
                    &grad,
                )?;

                let q_soft = random_simplex(&mut rng, k);
                let t = 0.5 + 4.0 * rng.next_f64();
                let (_, grad) = kd_soft_loss(&z, &q_soft, t, pref)?;
                fold(
                    &mut soft,
                    |p| kd_soft_loss(p, &q_soft, t, pref).unwrap().0,
                    &z,
                    &grad,
                )?;

                let cfg = KdConfig::new(rng.next_f64(), t)?;
                let (_, grad) = kd_blended_loss(&z, class, &q_soft, cfg, pref)?;
                fold(
                    &mut kd_total,
                    |p| kd_blended_loss(p, class, &q_soft, cfg, pref).unwrap().0,
                    &z,
                    &grad,
                )?;

                let q_res = random_simplex(&mut rng, k - 1);
                let (_, grad) = residual_loss(&z, class, &q_res, pref)?;
                fold(
                    &mut res,
                    |p| residual_loss(p, class, &q_res, pref).unwrap().0,
                    &z,
                    &grad,
                )?;

                let s = random_matrix(&mut rng, k);
                let (_, grad_row) = update_loss(&z, class, &s, pref)?;
                let row: Vec<f64> = s.logits().row(class.k()).to_vec();
                fold(
                    &mut upd,
                    |probe| {
                        let mut s_probe = s.clone();
                        s_probe.logits_mut().row_mut(class.k()).copy_from_slice(probe);
                        update_loss(&z, class, &s_probe, pref).unwrap().0
                    },
                    &row,
                    &grad_row,
                )?;

                // Joint (logits, matrix row) check of the combined objective
                // with its stop-gradient constants frozen at the base point.
                let acc_train = rng.next_f64();
                let bundle = total_loss(&z, class, &s, acc_train, None, pref)?;
                let base_q_res = s.residual_label(class)?;
                let base_p_res = softmax(&erase(&z, class)?)?;
                let weight = bundle.res_weight;
                let mut joint = z.clone();
                joint.extend_from_slice(s.logits().row(class.k()));
                let mut analytic = bundle.grad_z.clone();
                analytic.extend_from_slice(&bundle.grad_s_row);
                fold(
                    &mut total,
                    |probe| {
                        frozen_total(
                            &probe[..k],
                            &probe[k..],
                            class,
                            &base_q_res,
                            &base_p_res,
                            weight,
                            pref,
                        )
                    },
                    &joint,
                    &analytic,
                )?;
            }
        }
    }

    let mut end_to_end = (0usize, 0.0f64);
    let k = 4usize;
    let dims = [3usize, 8, k];
    for _ in 0..50 {
        let model = MlpModel::he_init(&dims, &mut rng)?;
        let s = random_matrix(&mut rng, k);
        let x: Vec<f64> = (0..3).map(|_| rng.next_gaussian()).collect();
        let class = ClassIndex::new(rng.next_below(k as u64) as usize, k)?;
        let acc_train = rng.next_f64();

        let cache = model.forward(&x)?;
        let bundle = total_loss(cache.logits(), class, &s, acc_train, None, Prefactor::Unit)?;
        let model_grads = model.backward(&cache, &bundle.grad_z)?;

        let base_q_res = s.residual_label(class)?;
        let base_p_res = softmax(&erase(cache.logits(), class)?)?;
        let weight = bundle.res_weight;

        let mut flat = Vec::new();
        model.read_params_into(&mut flat);
        let param_len = flat.len();
        flat.extend_from_slice(s.logits().row(class.k()));

        let mut analytic = Vec::new();
        model_grads.flatten_into(&mut analytic);
        analytic.extend_from_slice(&bundle.grad_s_row);

        fold(
            &mut end_to_end,
            |probe| {
                let mut m = model.clone();
                m.write_params(&probe[..param_len]).unwrap();
                let z = m.forward(&x).unwrap().logits().to_vec();
                frozen_total(
                    &z,
                    &probe[param_len..],
                    class,
                    &base_q_res,
                    &base_p_res,
                    weight,
                    Prefactor::Unit,
                )
            },
            &flat,
            &analytic,
        )?;
    }

    Ok(vec![
        Row { name: "hard", points: hard.0, max_err: hard.1, limit: LOSS_LIMIT },
        Row { name: "smoothed", points: smoothed.0, max_err: smoothed.1, limit: LOSS_LIMIT },
        Row { name: "soft", points: soft.0, max_err: soft.1, limit: LOSS_LIMIT },
        Row { name: "kd_total", points: kd_total.0, max_err: kd_total.1, limit: LOSS_LIMIT },
        Row { name: "res", points: res.0, max_err: res.1, limit: LOSS_LIMIT },
        Row { name: "upd", points: upd.0, max_err: upd.1, limit: LOSS_LIMIT },
        Row { name: "total", points: total.0, max_err: total.1, limit: LOSS_LIMIT },
        Row { name: "end_to_end", points: end_to_end.0, max_err: end_to_end.1, limit: END_TO_END_LIMIT },
    ])
}

/// The combined objective with the two detached quantities (residual label,
/// erased classifier probabilities) frozen as constants, which is exactly
/// the function the analytic bundle differentiates.
fn frozen_total(
    z: &[f64],
    s_row: &[f64],
    class: ClassIndex,
    base_q_res: &[f64],
    base_p_res: &[f64],
    res_weight: f64,
    pref: Prefactor,
) -> f64 {
    let (hard, _) = hard_ce(z, class, pref).unwrap();
    let (res, _) = residual_loss(z, class, base_q_res, pref).unwrap();
    let q_row = softmax(s_row).unwrap();
    let c = pref.residual(class.num_classes());
    let upd = -c
        * base_p_res
            .iter()
            .zip(&q_row)
            .map(|(p, q)| p * q.ln())
            .sum::<f64>();
    hard + res_weight * res + upd
}
