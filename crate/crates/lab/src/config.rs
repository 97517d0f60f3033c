//! Experiment configuration: JSON schema, defaults, validation, and the
//! resolution step that turns a config file into a ready-to-run
//! `TrainSettings` plus loaded datasets.
//!
//! Unknown keys anywhere in the file are hard errors so that typos in method
//! or field names cannot silently fall back to defaults.

use std::fs;
use std::path::{Path, PathBuf};

use alr_core::data::{confusable_preset, generate, separable_preset, Dataset, SplitTag, SynthSpec};
use alr_core::losses::{KdConfig, Prefactor};
use alr_core::numeric::DenseMatrix;
use alr_core::optim::LrSchedule;
use alr_core::train::{Method, OptimizerChoice, TrainSettings};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Method selector as written in config files and `--methods` lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodName {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "lsr")]
    Lsr,
    #[serde(rename = "alr")]
    Alr,
    #[serde(rename = "alr-s")]
    AlrS,
    #[serde(rename = "kd")]
    Kd,
}

impl MethodName {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "baseline" => Ok(MethodName::Baseline),
            "lsr" => Ok(MethodName::Lsr),
            "alr" => Ok(MethodName::Alr),
            "alr-s" => Ok(MethodName::AlrS),
            "kd" => Ok(MethodName::Kd),
            other => Err(LabError::config(format!(
                "unknown method {other:?}; expected one of baseline, lsr, alr, alr-s, kd"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Baseline => "baseline",
            MethodName::Lsr => "lsr",
            MethodName::Alr => "alr",
            MethodName::AlrS => "alr-s",
            MethodName::Kd => "kd",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        OptimizerSection {
            kind: "sgd-nesterov".into(),
            momentum: None,
            beta1: None,
            beta2: None,
            epsilon: None,
        }
    }
}

impl OptimizerSection {
    fn resolve(&self) -> Result<OptimizerChoice> {
        match self.kind.as_str() {
            "sgd-nesterov" => {
                if self.beta1.is_some() || self.beta2.is_some() || self.epsilon.is_some() {
                    return Err(LabError::config(
                        "optimizer: beta1/beta2/epsilon apply only to kind \"adam\"",
                    ));
                }
                Ok(OptimizerChoice::SgdNesterov {
                    momentum: self.momentum.unwrap_or(0.9),
                })
            }
            "adam" => {
                if self.momentum.is_some() {
                    return Err(LabError::config(
                        "optimizer: momentum applies only to kind \"sgd-nesterov\"",
                    ));
                }
                Ok(OptimizerChoice::Adam {
                    beta1: self.beta1.unwrap_or(0.9),
                    beta2: self.beta2.unwrap_or(0.999),
                    epsilon: self.epsilon.unwrap_or(1e-8),
                })
            }
            other => Err(LabError::config(format!(
                "optimizer.kind: unknown kind {other:?}; expected \"sgd-nesterov\" or \"adam\""
            ))),
        }
    }
}

/// Where KD soft targets come from: written inline as K rows of K
/// probabilities, or loaded from a headerless CSV with the same shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SoftTargetSource {
    Inline(Vec<Vec<f64>>),
    Csv(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KdSection {
    pub alpha: f64,
    pub temperature: f64,
    pub soft_targets: SoftTargetSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvDatasetSection {
    pub train: PathBuf,
    pub test: PathBuf,
    #[serde(default)]
    pub has_header: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub dim: usize,
    pub means: Vec<Vec<f64>>,
    pub stds: Vec<f64>,
    pub train_per_class: usize,
    pub test_per_class: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSection {
    /// `{"preset": "separable"}` or `{"preset": "confusable"}`.
    Preset(String),
    Csv(CsvDatasetSection),
    Synth(SynthSection),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulePreset {
    /// 100 epochs, learning rate dropped by the factor at 30/60/80.
    Desk,
    /// 300 epochs with drops at 60/120/160.
    Long,
}

fn default_hidden() -> Vec<usize> {
    vec![32]
}

fn default_lr() -> f64 {
    0.1
}

fn default_drop_factor() -> f64 {
    0.1
}

fn default_batch() -> usize {
    128
}

fn default_seed() -> u64 {
    1
}

/// A full experiment description as read from a JSON config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: MethodName,
    pub dataset: DatasetSection,
    pub output_dir: PathBuf,

    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_drop_factor")]
    pub lr_drop_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr_drop_epochs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_preset: Option<SchedulePreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_epochs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kd: Option<KdSection>,
    #[serde(default)]
    pub normalize_prefactor: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_m: Option<usize>,
}

/// Everything a single training run needs, derived from a config file plus
/// optional method/seed overrides (used by `compare` cells).
pub struct ResolvedRun {
    pub settings: TrainSettings,
    pub train: Dataset,
    pub test: Dataset,
    pub output_dir: PathBuf,
    pub method: MethodName,
    pub top_m: Option<usize>,
    /// The effective config, echoed into summary.json.
    pub echo: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            LabError::config(format!("{} (at {field})", e.inner()))
        })?;
        Ok(config)
    }

    /// Effective (epochs, drop epochs) after applying the schedule preset and
    /// explicit overrides.
    fn schedule_numbers(&self) -> (usize, Vec<usize>) {
        let (preset_epochs, preset_drops): (usize, Vec<usize>) = match self.schedule_preset {
            None | Some(SchedulePreset::Desk) => (100, vec![30, 60, 80]),
            Some(SchedulePreset::Long) => (300, vec![60, 120, 160]),
        };
        (
            self.epochs.unwrap_or(preset_epochs),
            self.lr_drop_epochs.clone().unwrap_or(preset_drops),
        )
    }

    fn snapshot_epochs(&self, epochs: usize) -> Result<Vec<usize>> {
        match &self.snapshot_epochs {
            Some(list) => {
                for &e in list {
                    if e == 0 || e > epochs {
                        return Err(LabError::config(format!(
                            "snapshot_epochs: epoch {e} is outside 1..={epochs}"
                        )));
                    }
                }
                Ok(list.clone())
            }
            // Default grid in the spirit of "epoch 1, 5, 10, ...", capped to
            // the run length.
            None => Ok([1usize, 5, 10, 25, 50, 100, 300]
                .iter()
                .copied()
                .filter(|&e| e <= epochs)
                .collect()),
        }
    }

    fn load_datasets(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        match &self.dataset {
            DatasetSection::Preset(name) => match name.as_str() {
                "separable" => Ok(separable_preset(seed)),
                "confusable" => Ok(confusable_preset(seed)),
                other => Err(LabError::config(format!(
                    "dataset.preset: unknown preset {other:?}; expected \"separable\" or \"confusable\""
                ))),
            },
            DatasetSection::Csv(section) => {
                let train = load_dataset_csv(
                    &section.train,
                    section.has_header,
                    section.num_classes,
                    SplitTag::Train,
                )?;
                let test = load_dataset_csv(
                    &section.test,
                    section.has_header,
                    section.num_classes.or(Some(train.num_classes())),
                    SplitTag::Test,
                )?;
                Ok((train, test))
            }
            DatasetSection::Synth(section) => {
                let spec = SynthSpec {
                    dim: section.dim,
                    means: section.means.clone(),
                    stds: section.stds.clone(),
                    train_per_class: section.train_per_class,
                    test_per_class: section.test_per_class,
                    seed,
                };
                Ok(generate(&spec)?)
            }
        }
    }

    fn build_method(&self, num_classes: usize) -> Result<Method> {
        let require_smoothing = |name: &str| {
            self.smoothing.ok_or_else(|| {
                LabError::config(format!("smoothing: required for method \"{name}\""))
            })
        };
        if self.kd.is_some() && self.method != MethodName::Kd {
            return Err(LabError::config(
                "kd: section is only valid for method \"kd\"",
            ));
        }
        if self.smoothing.is_some()
            && !matches!(self.method, MethodName::Lsr | MethodName::AlrS)
        {
            return Err(LabError::config(
                "smoothing: only valid for methods \"lsr\" and \"alr-s\"",
            ));
        }
        match self.method {
            MethodName::Baseline => Ok(Method::Baseline),
            MethodName::Lsr => Ok(Method::LabelSmoothing {
                epsilon: require_smoothing("lsr")?,
            }),
            MethodName::Alr => Ok(Method::Alr),
            MethodName::AlrS => Ok(Method::AlrSmoothed {
                epsilon: require_smoothing("alr-s")?,
            }),
            MethodName::Kd => {
                let section = self
                    .kd
                    .as_ref()
                    .ok_or_else(|| LabError::config("kd: required for method \"kd\""))?;
                let config = KdConfig::new(section.alpha, section.temperature)?;
                let soft_targets = match &section.soft_targets {
                    SoftTargetSource::Inline(rows) => matrix_from_rows(rows)?,
                    SoftTargetSource::Csv(path) => load_float_matrix(path)?,
                };
                if soft_targets.rows() != num_classes {
                    return Err(LabError::config(format!(
                        "kd.soft_targets: {} rows for a {num_classes}-class dataset",
                        soft_targets.rows()
                    )));
                }
                Ok(Method::Kd {
                    config,
                    soft_targets,
                })
            }
        }
    }

    /// Turn the config into a runnable experiment. `method` and `seed`
    /// overrides substitute before any validation, so a `compare` cell
    /// behaves exactly like a config file with those fields edited.
    pub fn resolve(
        &self,
        method: Option<MethodName>,
        seed: Option<u64>,
        output_dir: Option<PathBuf>,
    ) -> Result<ResolvedRun> {
        let mut effective = self.clone();
        if let Some(m) = method {
            effective.method = m;
            // Smoothing and KD sections travel with the methods that use
            // them; overriding to a method that ignores them drops them.
            if !matches!(m, MethodName::Lsr | MethodName::AlrS) {
                effective.smoothing = None;
            }
            if m != MethodName::Kd {
                effective.kd = None;
            }
        }
        if let Some(s) = seed {
            effective.seed = s;
        }
        if let Some(dir) = output_dir {
            effective.output_dir = dir;
        }

        let (epochs, drop_epochs) = effective.schedule_numbers();
        let snapshot_epochs = effective.snapshot_epochs(epochs)?;
        let (train, test) = effective.load_datasets(effective.seed)?;
        let method = effective.build_method(train.num_classes())?;
        let schedule = LrSchedule::new(
            effective.learning_rate,
            effective.lr_drop_factor,
            drop_epochs,
        )?;
        let prefactor = if effective.normalize_prefactor {
            Prefactor::Normalized
        } else {
            Prefactor::Unit
        };

        let settings = TrainSettings {
            method,
            hidden: effective.hidden.clone(),
            optimizer: effective.optimizer.resolve()?,
            schedule,
            s_learning_rate: effective.s_learning_rate,
            epochs,
            batch_size: effective.batch_size,
            seed: effective.seed,
            snapshot_epochs,
            prefactor,
        };
        settings.validate(&train, &test)?;

        Ok(ResolvedRun {
            output_dir: effective.output_dir.clone(),
            method: effective.method,
            top_m: effective.top_m,
            settings,
            train,
            test,
            echo: effective,
        })
    }
}

fn load_dataset_csv(
    path: &Path,
    has_header: bool,
    num_classes: Option<usize>,
    tag: SplitTag,
) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    Dataset::parse_csv(&text, has_header, num_classes, tag)
        .map_err(|e| LabError::config(format!("{}: {e}", path.display())))
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DenseMatrix> {
    DenseMatrix::from_rows(rows).map_err(|e| LabError::config(format!("kd.soft_targets: {e}")))
}

/// Parse a headerless CSV of floats into a matrix (used for KD soft targets,
/// which have no label column).
fn load_float_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|cell| cell.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| {
            LabError::config(format!("{} line {}: {e}", path.display(), i + 1))
        })?);
    }
    if rows.is_empty() {
        return Err(LabError::config(format!(
            "{}: empty soft-target file",
            path.display()
        )));
    }
    matrix_from_rows(&rows)
}
