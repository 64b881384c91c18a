//! Dataset ingestion and client partitioning.

mod cifar;
mod idx;
mod partition;
mod synth;

pub use cifar::load_cifar_bin;
pub use idx::load_idx;
pub use partition::{
    partition_iid, partition_imbalanced, partition_shards, Partition, PartitionScheme, PartitionStats,
};
pub use synth::{synth_mixture, QuadraticEnsemble};
