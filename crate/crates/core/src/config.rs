//! Experiment configuration: the JSON schema, validation with key paths,
//! and expansion of sweep axes into individual runs.
//!
//! All durations are in seconds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::CellConfig;
use crate::error::{Error, Result};
use crate::learning::{Aggregation, PartitionMode, SurrogateCurve, TrainerKind, TrainerSpec};
use crate::protocol::{Mode, ProtocolConfig};
use crate::resources::{FluctuationConfig, ResourceRanges};
use crate::units::Seconds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub kind: TrainerKind,
    pub batch: usize,
    pub lr0: f64,
    pub lr_decay: f64,
    /// Hidden layer widths of the native model; empty for a linear softmax.
    pub hidden: Vec<usize>,
    pub aggregation: Aggregation,
    pub surrogate: SurrogateCurve,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        let spec = TrainerSpec::default();
        Self {
            kind: spec.kind,
            batch: spec.batch,
            lr0: spec.lr0,
            lr_decay: spec.lr_decay,
            hidden: Vec::new(),
            aggregation: Aggregation::default(),
            surrogate: SurrogateCurve::default(),
        }
    }
}

impl TrainerConfig {
    /// Local-update settings; the epoch count comes from the time budget so
    /// the update-time model and the training loop agree.
    pub fn spec(&self, epochs: u32) -> TrainerSpec {
        TrainerSpec {
            kind: self.kind,
            batch: self.batch,
            epochs,
            lr0: self.lr0,
            lr_decay: self.lr_decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticData {
    pub n_train: usize,
    pub n_test: usize,
    pub n_features: usize,
    pub n_classes: usize,
    /// Standard deviation of the class centres relative to the unit noise.
    pub separation: f64,
}

impl Default for SyntheticData {
    fn default() -> Self {
        Self {
            n_train: 10_000,
            n_test: 2_000,
            n_features: 32,
            n_classes: 10,
            separation: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub partition: PartitionMode,
    pub classes_per_client: usize,
    pub synthetic: SyntheticData,
    /// External training set (CSV or binary with a JSON sidecar). Replaces
    /// the synthetic data when set; `test_path` is then required.
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            partition: PartitionMode::Iid,
            classes_per_client: 2,
            synthetic: SyntheticData::default(),
            train_path: None,
            test_path: None,
        }
    }
}

/// Values swept over; an empty axis keeps the base configuration's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub modes: Vec<Mode>,
    pub t_round: Vec<f64>,
    pub r: Vec<f64>,
    pub partition: Vec<PartitionMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cell: CellConfig,
    pub ranges: ResourceRanges,
    pub protocol: ProtocolConfig,
    pub trainer: TrainerConfig,
    pub data: DataConfig,
    pub seeds: Vec<u64>,
    pub sweep: SweepConfig,
    /// Accuracy levels at which time of arrival is reported.
    pub thresholds: Vec<f64>,
    /// Stop a run early once this accuracy is reached.
    pub target_accuracy: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            cell: CellConfig::default(),
            ranges: ResourceRanges::default(),
            protocol: ProtocolConfig::default(),
            trainer: TrainerConfig::default(),
            data: DataConfig::default(),
            seeds: (0..10).collect(),
            sweep: SweepConfig::default(),
            thresholds: vec![0.5, 0.75],
            target_accuracy: None,
            output_dir: None,
        }
    }
}

/// One point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunDescriptor {
    pub mode: Mode,
    pub t_round: f64,
    pub r: f64,
    pub partition: PartitionMode,
    pub seed: u64,
}

impl RunDescriptor {
    /// File-name friendly identifier, unique within a sweep.
    pub fn name(&self) -> String {
        format!("{}-{}", self.group(), self.seed)
    }

    /// Identifier shared by all seeds of the same setting.
    pub fn group(&self) -> String {
        format!(
            "{}_t{}_r{}_{}",
            self.mode.as_str(),
            self.t_round,
            self.r,
            self.partition.as_str()
        )
    }
}

impl ExperimentConfig {
    /// Parses JSON, reporting the key path of any type error or unknown
    /// key, then validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let scoped = |scope: &str, r: Result<()>| r.map_err(|e| e.scoped(scope).into_config());
        scoped("cell", self.cell.validate())?;
        scoped("ranges", self.ranges.validate())?;
        scoped("protocol", self.protocol.validate())?;
        scoped(
            "trainer",
            self.trainer
                .spec(self.protocol.budget.epochs_per_round)
                .validate(),
        )?;
        scoped("trainer.surrogate", self.trainer.surrogate.validate())?;
        if self.trainer.hidden.contains(&0) {
            return Err(Error::config("trainer.hidden", "layer widths must be >= 1"));
        }
        self.validate_data()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if let Some(t) = self
            .thresholds
            .iter()
            .find(|t| !(t.is_finite() && **t >= 0.0 && **t <= 1.0))
        {
            return Err(Error::config(
                "thresholds",
                format!("{t} is not a fraction"),
            ));
        }
        if let Some(a) = self.target_accuracy {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::config(
                    "target_accuracy",
                    format!("must lie in (0, 1], got {a}"),
                ));
            }
        }
        for (i, &t) in self.sweep.t_round.iter().enumerate() {
            let mut budget = self.protocol.budget.clone();
            budget.t_round = Seconds::new(t)
                .map_err(|e| e.scoped(&format!("sweep.t_round[{i}]")).into_config())?;
            budget
                .validate()
                .map_err(|e| Error::config(format!("sweep.t_round[{i}]"), e.to_string()))?;
        }
        for (i, &r) in self.sweep.r.iter().enumerate() {
            FluctuationConfig::new(r)
                .map_err(|e| Error::config(format!("sweep.r[{i}]"), e.to_string()))?;
        }
        Ok(())
    }

    fn validate_data(&self) -> Result<()> {
        let data = &self.data;
        if data.train_path.is_some() != data.test_path.is_some() {
            return Err(Error::config(
                "data.test_path",
                "train_path and test_path must be given together",
            ));
        }
        if data.train_path.is_none() {
            let s = &data.synthetic;
            if s.n_train == 0 || s.n_test == 0 {
                return Err(Error::config(
                    "data.synthetic.n_train",
                    "train and test sets must be non-empty",
                ));
            }
            if s.n_features == 0 {
                return Err(Error::config("data.synthetic.n_features", "must be >= 1"));
            }
            if s.n_classes < 2 {
                return Err(Error::config("data.synthetic.n_classes", "must be >= 2"));
            }
            if !(s.separation.is_finite() && s.separation >= 0.0) {
                return Err(Error::config(
                    "data.synthetic.separation",
                    "must be finite and >= 0",
                ));
            }
            let partitions =
                std::iter::once(data.partition).chain(self.sweep.partition.iter().copied());
            if partitions.into_iter().any(|p| p == PartitionMode::NonIid)
                && data.classes_per_client > s.n_classes
            {
                return Err(Error::config(
                    "data.classes_per_client",
                    "exceeds the number of classes",
                ));
            }
        }
        if data.classes_per_client == 0 {
            return Err(Error::config("data.classes_per_client", "must be >= 1"));
        }
        Ok(())
    }

    /// Cartesian product of the sweep axes and the seed list, in the order
    /// mode, t_round, r, partition, seed.
    pub fn descriptors(&self) -> Vec<RunDescriptor> {
        fn axis<T: Copy>(values: &[T], base: T) -> Vec<T> {
            if values.is_empty() {
                vec![base]
            } else {
                values.to_vec()
            }
        }
        let modes = axis(&self.sweep.modes, self.protocol.mode);
        let t_rounds = axis(&self.sweep.t_round, self.protocol.budget.t_round.value());
        let rs = axis(&self.sweep.r, self.protocol.fluctuation.r);
        let partitions = axis(&self.sweep.partition, self.data.partition);
        let mut out = Vec::with_capacity(
            modes.len() * t_rounds.len() * rs.len() * partitions.len() * self.seeds.len(),
        );
        for &mode in &modes {
            for &t_round in &t_rounds {
                for &r in &rs {
                    for &partition in &partitions {
                        for &seed in &self.seeds {
                            out.push(RunDescriptor {
                                mode,
                                t_round,
                                r,
                                partition,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Protocol settings for one run.
    pub fn protocol_for(&self, run: &RunDescriptor) -> Result<ProtocolConfig> {
        let mut p = self.protocol.clone();
        p.mode = run.mode;
        p.budget.t_round = Seconds::new(run.t_round)?;
        p.fluctuation = FluctuationConfig::new(run.r)?;
        Ok(p)
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig {
            output_dir: None,
            ..self.clone()
        };
        let digest = Sha256::digest(serde_json::to_vec(&canonical).expect("configs serialize"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
