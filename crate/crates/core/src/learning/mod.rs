//! Data partitioning, local training and server-side aggregation.

mod dataset;
mod model;
mod partition;
mod surrogate;

pub use dataset::{sidecar_path, Dataset, DatasetMeta};
pub use model::{aggregate, local_update, Aggregation, GlobalModel, Mlp, TrainerKind, TrainerSpec};
pub use partition::{partition_dataset, Partition, PartitionMode};
pub use surrogate::{SurrogateCurve, SurrogateState};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::units::{ClientId, Samples};

/// A client's contribution to one aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Participant {
    pub id: ClientId,
    pub data_count: Samples,
}

/// Produces the next global model from the clients whose updates arrived.
///
/// `rng` is the round's training stream; implementations derive one
/// substream per client from it so results do not depend on scheduling.
pub trait Trainer: Send {
    fn initial_model(&self) -> GlobalModel;

    fn train_round(
        &mut self,
        model: &GlobalModel,
        participants: &[Participant],
        rng: &RngStream,
    ) -> Result<GlobalModel>;

    fn accuracy(&self, model: &GlobalModel) -> Result<f64>;
}

/// Real minibatch SGD on each client's shard followed by averaging.
pub struct NativeTrainer {
    arch: Mlp,
    train: Dataset,
    test: Dataset,
    partition: Partition,
    spec: TrainerSpec,
    aggregation: Aggregation,
    initial: GlobalModel,
}

impl NativeTrainer {
    pub fn new(
        arch: Mlp,
        train: Dataset,
        test: Dataset,
        partition: Partition,
        spec: TrainerSpec,
        aggregation: Aggregation,
        init_rng: &mut RngStream,
    ) -> Result<Self> {
        spec.validate()?;
        for data in [&train, &test] {
            if data.n_features() != arch.inputs() || data.n_classes() != arch.classes() {
                return Err(Error::Model(format!(
                    "architecture {}->{} does not fit data with {} features and {} classes",
                    arch.inputs(),
                    arch.classes(),
                    data.n_features(),
                    data.n_classes()
                )));
            }
        }
        let initial = arch.init(init_rng);
        Ok(Self {
            arch,
            train,
            test,
            partition,
            spec,
            aggregation,
            initial,
        })
    }
}

impl Trainer for NativeTrainer {
    fn initial_model(&self) -> GlobalModel {
        self.initial.clone()
    }

    fn train_round(
        &mut self,
        model: &GlobalModel,
        participants: &[Participant],
        rng: &RngStream,
    ) -> Result<GlobalModel> {
        let updates = participants
            .par_iter()
            .map(|p| {
                let mut client_rng = rng.substream(&format!("client-{}", p.id.get()));
                let shard = self.partition.shard(p.id.slot());
                local_update(
                    model,
                    &self.arch,
                    &self.train,
                    shard,
                    &self.spec,
                    &mut client_rng,
                )
                .map(|m| (m, p.data_count))
            })
            .collect::<Result<Vec<_>>>()?;
        aggregate(&updates, self.aggregation)
    }

    fn accuracy(&self, model: &GlobalModel) -> Result<f64> {
        self.arch.accuracy(&model.params, &self.test)
    }
}

/// Parameter-free trainer that tracks accuracy along a fixed curve.
pub struct SurrogateTrainer {
    curve: SurrogateCurve,
    state: SurrogateState,
}

impl SurrogateTrainer {
    pub fn new(curve: SurrogateCurve) -> Result<Self> {
        curve.validate()?;
        Ok(Self {
            curve,
            state: SurrogateState::default(),
        })
    }

    pub fn state(&self) -> &SurrogateState {
        &self.state
    }
}

impl Trainer for SurrogateTrainer {
    fn initial_model(&self) -> GlobalModel {
        GlobalModel {
            params: Vec::new(),
            round: 0,
        }
    }

    fn train_round(
        &mut self,
        model: &GlobalModel,
        participants: &[Participant],
        _rng: &RngStream,
    ) -> Result<GlobalModel> {
        if participants.is_empty() {
            return Err(Error::param("updates", "nothing to aggregate"));
        }
        let samples = participants.iter().map(|p| p.data_count.value()).sum();
        self.state.record_round(participants.len() as u64, samples);
        Ok(GlobalModel {
            params: model.params.clone(),
            round: model.round + 1,
        })
    }

    fn accuracy(&self, _model: &GlobalModel) -> Result<f64> {
        Ok(self.curve.accuracy(&self.state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn participant(id: u32, n: f64) -> Participant {
        Participant {
            id: ClientId::new(id).unwrap(),
            data_count: Samples::new(n).unwrap(),
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngStream::new(11, "grad");
        let data = Dataset::synthetic_blobs(8, 3, 5, 1.5, &mut rng).unwrap();
        let arch = Mlp::new(3, &[], 5).unwrap();
        assert_eq!(arch.param_count(), 20);
        let params: Vec<f64> = (0..20).map(|_| 0.5 * rng.standard_normal()).collect();
        let idx: Vec<usize> = (0..data.len()).collect();
        let (_, grad) = arch.loss_and_grad(&params, &data, &idx).unwrap();
        let h = 1e-5;
        for j in 0..params.len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (arch.loss(&plus, &data, &idx).unwrap()
                - arch.loss(&minus, &data, &idx).unwrap())
                / (2.0 * h);
            assert!(
                (fd - grad[j]).abs() < 1e-5,
                "param {j}: fd {fd} vs {}",
                grad[j]
            );
        }
    }

    #[test]
    fn hidden_layer_gradient_matches_finite_differences() {
        let mut rng = RngStream::new(12, "grad");
        let data = Dataset::synthetic_blobs(12, 4, 3, 1.5, &mut rng).unwrap();
        let arch = Mlp::new(4, &[5], 3).unwrap();
        let params = arch.init(&mut rng).params;
        let idx: Vec<usize> = (0..data.len()).collect();
        let (_, grad) = arch.loss_and_grad(&params, &data, &idx).unwrap();
        let h = 1e-6;
        for j in 0..params.len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (arch.loss(&plus, &data, &idx).unwrap()
                - arch.loss(&minus, &data, &idx).unwrap())
                / (2.0 * h);
            assert!(
                (fd - grad[j]).abs() < 1e-5,
                "param {j}: fd {fd} vs {}",
                grad[j]
            );
        }
    }

    #[test]
    fn surrogate_trainer_counts_updates() {
        let mut t = SurrogateTrainer::new(SurrogateCurve::new(0.9, 100.0).unwrap()).unwrap();
        let m = t.initial_model();
        let rng = RngStream::new(0, "training");
        let m = t
            .train_round(&m, &[participant(1, 100.0), participant(2, 200.0)], &rng)
            .unwrap();
        assert_eq!(m.round, 1);
        assert_eq!(t.state().updates, 2);
        assert_eq!(t.state().last_round_samples, 300.0);
        assert!(t.train_round(&m, &[], &rng).is_err());
        let a = t.accuracy(&m).unwrap();
        assert!((a - 0.9 * (1.0 - (-0.02f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn native_trainer_learns_and_is_deterministic() {
        let mut drng = RngStream::new(3, "dataset");
        let train = Dataset::synthetic_blobs(2000, 8, 10, 3.0, &mut drng).unwrap();
        let test =
            Dataset::synthetic_blobs(500, 8, 10, 3.0, &mut RngStream::new(3, "dataset")).unwrap();
        let cell = crate::channel::CellConfig::default();
        let profiles = crate::resources::generate_profiles(
            20,
            &cell,
            &crate::resources::ResourceRanges::default(),
            &mut RngStream::new(3, "placement"),
            &mut RngStream::new(3, "profiles"),
        )
        .unwrap();
        let partition = partition_dataset(
            &train,
            &profiles,
            PartitionMode::Iid,
            2,
            &mut RngStream::new(3, "partition"),
        )
        .unwrap();
        let spec = TrainerSpec {
            kind: TrainerKind::Native,
            ..TrainerSpec::default()
        };
        let build = || {
            NativeTrainer::new(
                Mlp::new(8, &[], 10).unwrap(),
                train.clone(),
                test.clone(),
                partition.clone(),
                spec.clone(),
                Aggregation::Unweighted,
                &mut RngStream::new(3, "init"),
            )
            .unwrap()
        };
        let run = || {
            let mut t = build();
            let mut m = t.initial_model();
            let before = t.accuracy(&m).unwrap();
            let ps: Vec<Participant> = profiles[..5]
                .iter()
                .map(|p| Participant {
                    id: p.id,
                    data_count: p.data_count,
                })
                .collect();
            for r in 0..3 {
                m = t
                    .train_round(
                        &m,
                        &ps,
                        &RngStream::new(3, "training").substream(&r.to_string()),
                    )
                    .unwrap();
            }
            (before, t.accuracy(&m).unwrap(), m)
        };
        let (before, after, m1) = run();
        let (_, _, m2) = run();
        assert!(after > before + 0.2, "accuracy {before} -> {after}");
        assert_eq!(m1, m2);
        assert_eq!(m1.round, 3);
    }
}
