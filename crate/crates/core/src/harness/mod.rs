//! Replica farms: planning, parallel execution into an append-only JSONL
//! store, resume after interruption, and order-independent aggregation.
//!
//! Each line of a store is one JSON object tagged by `"kind"`: either a
//! `"replica"` record holding every functional of one replica, or a
//! `"failure"` marker for a task that could not complete. A sidecar file
//! `<store>.config.json` holds the experiment configuration and its hash.

mod aggregate;
mod config;
mod record;
mod run;
mod store;

pub use aggregate::{aggregate, Metric, PartitionPart, Summary};
pub use config::{check_unique_seeds, plan, resolve_parallelism, ExperimentConfig, Task, PARALLELISM_ENV};
pub use record::{
    compute_entry, AdditiveEntry, FailureRecord, OverlapEntry, PartitionEntry, ReplicaRecord, StoreEntry,
    SCHEMA_VERSION,
};
pub use run::{error_exit_code, exit_code, run, RunSummary};
pub use store::{read_store, sidecar_path, Sidecar, Store};
