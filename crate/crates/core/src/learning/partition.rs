//! Splitting a training set across clients.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::resources::ClientProfile;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    /// Each client samples from the whole training set.
    Iid,
    /// Each client samples only from a few randomly chosen classes.
    NonIid,
}

impl PartitionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PartitionMode::Iid => "iid",
            PartitionMode::NonIid => "non_iid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub mode: PartitionMode,
    pub classes_per_client: usize,
    /// Sample indices per client, indexed by client slot.
    pub assignment: Vec<Vec<usize>>,
    /// Classes each client drew from (every class under IID).
    pub client_classes: Vec<Vec<u32>>,
}

impl Partition {
    pub fn shard(&self, slot: usize) -> &[usize] {
        &self.assignment[slot]
    }
}

/// Assigns `data_count` sample indices to every client, with replacement.
///
/// Replacement is required because the per-client counts may sum to more
/// than the dataset holds.
pub fn partition_dataset(
    dataset: &Dataset,
    profiles: &[ClientProfile],
    mode: PartitionMode,
    classes_per_client: usize,
    rng: &mut RngStream,
) -> Result<Partition> {
    if dataset.is_empty() {
        return Err(Error::param("dataset", "cannot partition an empty dataset"));
    }
    let n_classes = dataset.n_classes();
    let by_class = dataset.indices_by_class();
    if mode == PartitionMode::NonIid {
        if classes_per_client == 0 || n_classes < classes_per_client {
            return Err(Error::param(
                "classes_per_client",
                format!("need 1..={n_classes} classes per client, got {classes_per_client}"),
            ));
        }
        if let Some(empty) = by_class.iter().position(Vec::is_empty) {
            return Err(Error::param(
                "dataset",
                format!("class {empty} has no samples"),
            ));
        }
    }

    let mut assignment = Vec::with_capacity(profiles.len());
    let mut client_classes = Vec::with_capacity(profiles.len());
    for p in profiles {
        let count = p.data_count.value() as usize;
        match mode {
            PartitionMode::Iid => {
                assignment.push(
                    (0..count)
                        .map(|_| rng.random_range(0..dataset.len()))
                        .collect(),
                );
                client_classes.push((0..n_classes as u32).collect());
            }
            PartitionMode::NonIid => {
                let mut classes: Vec<u32> = index::sample(rng, n_classes, classes_per_client)
                    .into_iter()
                    .map(|c| c as u32)
                    .collect();
                classes.sort_unstable();
                let pool: Vec<usize> = classes
                    .iter()
                    .flat_map(|&c| by_class[c as usize].iter().copied())
                    .collect();
                assignment.push(
                    (0..count)
                        .map(|_| pool[rng.random_range(0..pool.len())])
                        .collect(),
                );
                client_classes.push(classes);
            }
        }
    }
    Ok(Partition {
        mode,
        classes_per_client: if mode == PartitionMode::Iid {
            n_classes
        } else {
            classes_per_client
        },
        assignment,
        client_classes,
    })
}
