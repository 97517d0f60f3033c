//! The end-to-end training loop: mini-batch gradient descent over the
//! classifier (and, for the residual methods, the residual correlation
//! matrix), per-epoch metrics, and matrix snapshots.
//!
//! A run is a pure function of (settings, datasets): single-threaded, all
//! randomness from the run seed. Independent runs can execute in parallel
//! since they share nothing mutable.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{CoreError, Result};
use crate::fmtnum::format_sig;
use crate::labels::ClassIndex;
use crate::losses::{hard_ce, kd_blended_loss, smoothed_ce, total_loss, KdConfig, Prefactor};
use crate::model::{Gradients, MlpModel};
use crate::numeric::{argmax, DenseMatrix};
use crate::optim::{LrSchedule, Optimizer};
use crate::residual::ResidualCorrelationMatrix;
use crate::rng::RngStream;

/// Exact column header of the metrics CSV.
pub const METRICS_HEADER: &str =
    "epoch,train_acc,test_acc,loss_hard,loss_res,loss_upd,loss_total,res_weight,mean_row_entropy";

/// Training objective. `Alr` and `AlrSmoothed` carry the residual matrix
/// machinery; the others are baselines.
#[derive(Debug, Clone)]
pub enum Method {
    /// Plain cross-entropy against one-hot labels.
    Baseline,
    /// Cross-entropy against smoothed labels.
    LabelSmoothing { epsilon: f64 },
    /// Hard cross-entropy plus the weighted residual and update terms.
    Alr,
    /// Like `Alr`, with the hard term smoothed.
    AlrSmoothed { epsilon: f64 },
    /// Blended hard/soft distillation against fixed per-class teacher
    /// distributions (`soft_targets` row `k` is the teacher for class `k`).
    Kd {
        config: KdConfig,
        soft_targets: DenseMatrix,
    },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::LabelSmoothing { .. } => "lsr",
            Method::Alr => "alr",
            Method::AlrSmoothed { .. } => "alr-s",
            Method::Kd { .. } => "kd",
        }
    }

    /// Whether this method trains a residual correlation matrix.
    pub fn uses_residual(&self) -> bool {
        matches!(self, Method::Alr | Method::AlrSmoothed { .. })
    }
}

/// Optimizer family and hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerChoice {
    SgdNesterov { momentum: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerChoice {
    fn build(self, param_count: usize) -> Result<Optimizer> {
        match self {
            OptimizerChoice::SgdNesterov { momentum } => {
                Optimizer::sgd_nesterov(param_count, momentum)
            }
            OptimizerChoice::Adam {
                beta1,
                beta2,
                epsilon,
            } => Optimizer::adam(param_count, beta1, beta2, epsilon),
        }
    }
}

/// Everything a run needs besides the data.
#[derive(Debug, Clone)]
pub struct TrainSettings {
    pub method: Method,
    /// Hidden layer widths; empty means a linear classifier.
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerChoice,
    pub schedule: LrSchedule,
    /// Base learning rate for the residual matrix. `None` shares the
    /// backbone rate; `Some(r)` follows the same drop schedule from `r`.
    pub s_learning_rate: Option<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs (1-based) at which to snapshot the residual matrix.
    pub snapshot_epochs: Vec<usize>,
    pub prefactor: Prefactor,
}

impl TrainSettings {
    pub fn validate(&self, train: &Dataset, test: &Dataset) -> Result<()> {
        if self.epochs == 0 {
            return Err(CoreError::Parameter("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(CoreError::Parameter("batch size must be at least 1".into()));
        }
        if let Some(rate) = self.s_learning_rate {
            if !(rate > 0.0) || !rate.is_finite() {
                return Err(CoreError::Parameter(format!(
                    "residual learning rate must be positive and finite, got {rate}"
                )));
            }
        }
        if train.dim() != test.dim() {
            return Err(CoreError::Dimension(format!(
                "train features have dim {} but test features have dim {}",
                train.dim(),
                test.dim()
            )));
        }
        if train.num_classes() != test.num_classes() {
            return Err(CoreError::Dimension(format!(
                "train split has {} classes but test split has {}",
                train.num_classes(),
                test.num_classes()
            )));
        }
        match &self.method {
            Method::LabelSmoothing { epsilon } | Method::AlrSmoothed { epsilon } => {
                if !(0.0..1.0).contains(epsilon) {
                    return Err(CoreError::Parameter(format!(
                        "smoothing mass must lie in [0, 1), got {epsilon}"
                    )));
                }
            }
            Method::Kd { soft_targets, .. } => {
                let k = train.num_classes();
                if soft_targets.rows() != k || soft_targets.cols() != k {
                    return Err(CoreError::Dimension(format!(
                        "soft targets must be {k}x{k}, got {}x{}",
                        soft_targets.rows(),
                        soft_targets.cols()
                    )));
                }
                for row in 0..k {
                    let sum: f64 = soft_targets.row(row).iter().sum();
                    if soft_targets.row(row).iter().any(|&v| v < 0.0)
                        || crate::math::abs(sum - 1.0) > 1e-9
                    {
                        return Err(CoreError::Parameter(format!(
                            "soft target row {row} is not a probability distribution"
                        )));
                    }
                }
            }
            Method::Baseline | Method::Alr => {}
        }
        Ok(())
    }
}

/// One row of the metrics history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Running accuracy over this epoch's training batches.
    pub train_acc: f64,
    /// Test accuracy of the model at the end of the epoch.
    pub test_acc: f64,
    /// Mean per-sample hard-term loss. For the distillation method this is
    /// the unweighted hard component; `loss_total` is the objective.
    pub loss_hard: f64,
    pub loss_res: f64,
    pub loss_upd: f64,
    pub loss_total: f64,
    /// Residual weight `1 − acc_train` in effect during the epoch's final
    /// batch; 0 for methods without the residual terms.
    pub res_weight: f64,
    /// Mean row entropy of the residual matrix as used by the epoch's
    /// final batch; 0 for methods without a matrix.
    pub mean_row_entropy: f64,
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub records: Vec<EpochRecord>,
    /// `(epoch, matrix)` pairs for each requested snapshot epoch, in
    /// ascending epoch order; empty for non-residual methods.
    pub snapshots: Vec<(usize, ResidualCorrelationMatrix)>,
    pub model: MlpModel,
    pub residual: Option<ResidualCorrelationMatrix>,
}

impl TrainOutcome {
    pub fn final_record(&self) -> &EpochRecord {
        self.records.last().expect("training runs at least one epoch")
    }
}

/// Running train accuracy: counts within the current epoch, and between
/// epochs hands the finished epoch's accuracy to the next one as its
/// starting value. Before any batch of the first epoch the accuracy is 0.
#[derive(Debug, Clone)]
pub struct AccTracker {
    correct: usize,
    seen: usize,
    previous_epoch: f64,
}

impl Default for AccTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl AccTracker {
    pub fn new() -> Self {
        AccTracker {
            correct: 0,
            seen: 0,
            previous_epoch: 0.0,
        }
    }

    /// Accuracy over this epoch's batches so far, or the previous epoch's
    /// final accuracy when the epoch has not yet seen a batch.
    pub fn current(&self) -> f64 {
        if self.seen == 0 {
            self.previous_epoch
        } else {
            self.correct as f64 / self.seen as f64
        }
    }

    pub fn observe_batch(&mut self, correct: usize, size: usize) {
        self.correct += correct;
        self.seen += size;
    }

    pub fn finish_epoch(&mut self) {
        self.previous_epoch = self.current();
        self.correct = 0;
        self.seen = 0;
    }
}

/// Per-batch view handed to a [`TrainObserver`] immediately before the
/// optimizer step, while the parameters still hold the values the batch
/// was computed with.
pub struct StepInfo<'a> {
    /// 1-based epoch.
    pub epoch: usize,
    /// 0-based batch index within the epoch.
    pub batch: usize,
    /// Whether this is the epoch's final batch.
    pub final_batch: bool,
    /// The accuracy estimate used for this batch's residual weight.
    pub acc_train: f64,
    /// `1 − acc_train` for residual methods, 0 otherwise.
    pub res_weight: f64,
    pub model: &'a MlpModel,
    pub residual: Option<&'a ResidualCorrelationMatrix>,
    /// Dataset row indices making up this batch.
    pub batch_rows: &'a [usize],
    /// Mean batch gradient in flat order: model parameters, then matrix
    /// rows for residual methods.
    pub flat_grads: &'a [f64],
}

/// Hook into the training loop. Implementations must be cheap; the loop
/// calls [`TrainObserver::before_step`] once per batch.
pub trait TrainObserver {
    fn before_step(&mut self, info: &StepInfo<'_>);
}

/// Observer that does nothing.
pub struct NullObserver;

impl TrainObserver for NullObserver {
    fn before_step(&mut self, _info: &StepInfo<'_>) {}
}

/// Accuracy and mean hard cross-entropy of a model over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub mean_loss: f64,
}

pub fn evaluate(model: &MlpModel, data: &Dataset) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(CoreError::Dimension("cannot evaluate on an empty dataset".into()));
    }
    let k = data.num_classes();
    let mut correct = 0usize;
    let mut loss_sum = 0.0;
    for row in 0..data.len() {
        let cache = model.forward(data.features(row))?;
        let logits = cache.logits();
        if argmax(logits) == data.label(row) {
            correct += 1;
        }
        let class = ClassIndex::new(data.label(row), k)?;
        let (loss, _) = hard_ce(logits, class, Prefactor::Unit)?;
        loss_sum += loss;
    }
    Ok(EvalReport {
        accuracy: correct as f64 / data.len() as f64,
        mean_loss: loss_sum / data.len() as f64,
    })
}

/// Fraction of samples whose label is among the `m` largest logits
/// (ties resolved toward lower class indices).
pub fn top_m_accuracy(model: &MlpModel, data: &Dataset, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(CoreError::Parameter("top-m needs m >= 1".into()));
    }
    if data.is_empty() {
        return Err(CoreError::Dimension("cannot evaluate on an empty dataset".into()));
    }
    let mut hits = 0usize;
    for row in 0..data.len() {
        let cache = model.forward(data.features(row))?;
        let logits = cache.logits();
        let mut order: Vec<usize> = (0..logits.len()).collect();
        order.sort_by(|&a, &b| {
            logits[b]
                .partial_cmp(&logits[a])
                .expect("logits are finite")
                .then(a.cmp(&b))
        });
        if order[..m.min(order.len())].contains(&data.label(row)) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

struct BatchTotals {
    hard: f64,
    res: f64,
    upd: f64,
    total: f64,
    correct: usize,
}

/// Trains with the default (no-op) observer.
pub fn train(settings: &TrainSettings, train: &Dataset, test: &Dataset) -> Result<TrainOutcome> {
    train_observed(settings, train, test, &mut NullObserver)
}

/// Runs the full training loop, invoking `observer` before every optimizer
/// step.
pub fn train_observed(
    settings: &TrainSettings,
    train_data: &Dataset,
    test_data: &Dataset,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome> {
    settings.validate(train_data, test_data)?;
    let k = train_data.num_classes();
    let mut dims = vec![train_data.dim()];
    dims.extend_from_slice(&settings.hidden);
    dims.push(k);

    // Substreams: 2 initializes the model, 3 orders the batches. (0 and 1
    // are reserved for dataset generation under the same seed.)
    let root = RngStream::new(settings.seed);
    let mut init_rng = root.substream(2);
    let mut shuffle_rng = root.substream(3);

    let mut model = MlpModel::he_init(&dims, &mut init_rng)?;
    let mut residual = if settings.method.uses_residual() {
        Some(ResidualCorrelationMatrix::new(k)?)
    } else {
        None
    };
    let model_params = model.param_count();
    let total_params = model_params + residual.as_ref().map_or(0, |s| s.param_count());
    let mut optimizer = settings.optimizer.build(total_params)?;

    let mut tracker = AccTracker::new();
    let mut records = Vec::with_capacity(settings.epochs);
    let mut snapshots = Vec::new();
    let mut flat_params = Vec::with_capacity(total_params);
    let mut flat_grads = Vec::with_capacity(total_params);
    let mut order: Vec<usize> = (0..train_data.len()).collect();

    for epoch in 1..=settings.epochs {
        let lr = settings.schedule.rate(epoch);
        let s_lr = settings
            .s_learning_rate
            .map_or(lr, |base| settings.schedule.scaled_rate(base, epoch));
        shuffle_rng.shuffle(&mut order);

        let mut epoch_hard = 0.0;
        let mut epoch_res = 0.0;
        let mut epoch_upd = 0.0;
        let mut epoch_total = 0.0;
        let mut final_res_weight = 0.0;
        let mut final_entropy = 0.0;
        let batch_count = order.len().div_ceil(settings.batch_size);

        for (batch_idx, batch_rows) in order.chunks(settings.batch_size).enumerate() {
            let acc_train = tracker.current();
            let res_weight = if settings.method.uses_residual() {
                1.0 - acc_train
            } else {
                0.0
            };
            let (totals, model_grads, s_grads) = run_batch(
                settings,
                &model,
                residual.as_ref(),
                train_data,
                batch_rows,
                acc_train,
            )?;

            flat_grads.clear();
            model_grads.flatten_into(&mut flat_grads);
            if let Some(sg) = &s_grads {
                flat_grads.extend_from_slice(sg.as_slice());
            }

            let final_batch = batch_idx + 1 == batch_count;
            observer.before_step(&StepInfo {
                epoch,
                batch: batch_idx,
                final_batch,
                acc_train,
                res_weight,
                model: &model,
                residual: residual.as_ref(),
                batch_rows,
                flat_grads: &flat_grads,
            });

            if final_batch {
                // Observation point for this epoch's matrix-derived
                // metrics and snapshot: the state the final batch was
                // computed with, before its update is applied.
                final_res_weight = res_weight;
                if let Some(s) = &residual {
                    let entropies = s.row_entropies();
                    final_entropy = entropies.iter().sum::<f64>() / entropies.len() as f64;
                    if settings.snapshot_epochs.contains(&epoch) {
                        snapshots.push((epoch, s.clone()));
                    }
                }
            }

            flat_params.clear();
            model.read_params_into(&mut flat_params);
            if let Some(s) = &residual {
                flat_params.extend_from_slice(s.logits().as_slice());
            }
            optimizer.step_segmented(&mut flat_params, &flat_grads, model_params, lr, s_lr)?;
            model.write_params(&flat_params[..model_params])?;
            if let Some(s) = &mut residual {
                s.logits_mut()
                    .as_mut_slice()
                    .copy_from_slice(&flat_params[model_params..]);
            }

            tracker.observe_batch(totals.correct, batch_rows.len());
            epoch_hard += totals.hard;
            epoch_res += totals.res;
            epoch_upd += totals.upd;
            epoch_total += totals.total;
        }

        let n = train_data.len() as f64;
        let test_report = evaluate(&model, test_data)?;
        records.push(EpochRecord {
            epoch,
            train_acc: tracker.current(),
            test_acc: test_report.accuracy,
            loss_hard: epoch_hard / n,
            loss_res: epoch_res / n,
            loss_upd: epoch_upd / n,
            loss_total: epoch_total / n,
            res_weight: final_res_weight,
            mean_row_entropy: final_entropy,
        });
        tracker.finish_epoch();
    }

    Ok(TrainOutcome {
        records,
        snapshots,
        model,
        residual,
    })
}

/// Forward/backward over one batch. Returns summed (not yet averaged)
/// per-sample losses, plus mean gradients.
fn run_batch(
    settings: &TrainSettings,
    model: &MlpModel,
    residual: Option<&ResidualCorrelationMatrix>,
    data: &Dataset,
    batch_rows: &[usize],
    acc_train: f64,
) -> Result<(BatchTotals, Gradients, Option<DenseMatrix>)> {
    let k = data.num_classes();
    let mut totals = BatchTotals {
        hard: 0.0,
        res: 0.0,
        upd: 0.0,
        total: 0.0,
        correct: 0,
    };
    let mut model_grads = Gradients::zeros_like(model);
    let mut s_grads = residual.map(|_| DenseMatrix::zeros(k, k - 1));
    for &row in batch_rows {
        let cache = model.forward(data.features(row))?;
        let logits = cache.logits();
        if argmax(logits) == data.label(row) {
            totals.correct += 1;
        }
        let class = ClassIndex::new(data.label(row), k)?;
        let grad_z: Vec<f64> = match &settings.method {
            Method::Baseline => {
                let (loss, g) = hard_ce(logits, class, settings.prefactor)?;
                totals.hard += loss;
                totals.total += loss;
                g
            }
            Method::LabelSmoothing { epsilon } => {
                let (loss, g) = smoothed_ce(logits, class, *epsilon, settings.prefactor)?;
                totals.hard += loss;
                totals.total += loss;
                g
            }
            Method::Kd {
                config,
                soft_targets,
            } => {
                let q_soft = soft_targets.row(class.k());
                let (blended, g) =
                    kd_blended_loss(logits, class, q_soft, *config, settings.prefactor)?;
                // The hard column stays the plain unweighted diagnostic;
                // total is the blended objective actually descended.
                let (hard, _) = hard_ce(logits, class, settings.prefactor)?;
                totals.hard += hard;
                totals.total += blended;
                g
            }
            Method::Alr | Method::AlrSmoothed { .. } => {
                let smoothing = match &settings.method {
                    Method::AlrSmoothed { epsilon } => Some(*epsilon),
                    _ => None,
                };
                let s = residual.expect("residual methods carry a matrix");
                let bundle = total_loss(
                    logits,
                    class,
                    s,
                    acc_train,
                    smoothing,
                    settings.prefactor,
                )?;
                totals.hard += bundle.hard;
                totals.res += bundle.res;
                totals.upd += bundle.upd;
                totals.total += bundle.total;
                let sg = s_grads.as_mut().expect("allocated with the matrix");
                for (slot, g) in sg.row_mut(class.k()).iter_mut().zip(&bundle.grad_s_row) {
                    *slot += g;
                }
                bundle.grad_z
            }
        };
        let sample_grads = model.backward(&cache, &grad_z)?;
        model_grads.accumulate(&sample_grads);
    }
    let scale = 1.0 / batch_rows.len() as f64;
    model_grads.scale(scale);
    if let Some(sg) = &mut s_grads {
        for v in sg.as_mut_slice() {
            *v *= scale;
        }
    }
    Ok((totals, model_grads, s_grads))
}

/// Renders the metrics history as CSV with [`METRICS_HEADER`] and 9
/// significant digits per value.
pub fn render_metrics_csv(records: &[EpochRecord]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.epoch,
            format_sig(r.train_acc, 9),
            format_sig(r.test_acc, 9),
            format_sig(r.loss_hard, 9),
            format_sig(r.loss_res, 9),
            format_sig(r.loss_upd, 9),
            format_sig(r.loss_total, 9),
            format_sig(r.res_weight, 9),
            format_sig(r.mean_row_entropy, 9),
        ));
    }
    out
}
