//! Round orchestration, run persistence and configuration.

pub mod config;
pub mod exec;
pub mod experiment;
pub mod record;
pub mod rng;
pub mod world;

pub use config::{DataSource, ExperimentConfig, ModelKind, SamplingScheme, Schedule, ServerStep};
pub use exec::Executor;
pub use experiment::{load_run, read_rounds, run_experiment, simulate, RunArtifact};
pub use record::{rounds_to_target, CheckFlags, RoundRecord, RoundsToTarget};
pub use world::{draw_local_epochs, sample_clients, Diagnostics, World};
