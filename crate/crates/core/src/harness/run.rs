use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use rayon::prelude::*;

use super::config::{plan, resolve_parallelism, ExperimentConfig};
use super::record::{compute_entry, StoreEntry};
use super::store::{read_store, Sidecar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunSummary {
    pub planned: usize,
    /// Tasks already present in the store before this run.
    pub skipped: usize,
    pub completed: usize,
    pub failed: usize,
}

impl RunSummary {
    pub fn has_failures(&self) -> bool {
        self.failed > 0
    }
}

/// Process exit status: 0 success, 1 configuration error, 2 I/O error,
/// 3 finished with failed replicas.
pub fn exit_code(outcome: &Result<RunSummary>) -> i32 {
    match outcome {
        Ok(s) if s.has_failures() => 3,
        Ok(_) => 0,
        Err(e) => error_exit_code(e),
    }
}

/// Exit status of an error: 2 for I/O and store problems, 1 otherwise.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Store(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

/// Executes every task of `config` not yet in its store.
///
/// Workers simulate in parallel and a single writer appends one line per
/// task. A store left by an interrupted run is resumed: its trailing partial
/// line is cut off and finished tasks are skipped. Failed tasks are recorded
/// and counted, never retried.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    let tasks = plan(config)?;
    let path = &config.output_path;
    let hash = config.hash();

    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    match Sidecar::read(path)? {
        Some(s) if s.config_hash != hash => {
            return Err(Error::Store(format!(
                "{} belongs to a different configuration (hash {}, expected {hash})",
                path.display(),
                s.config_hash
            )))
        }
        Some(_) => {}
        None => Sidecar::new(config).write(path)?,
    }

    let existing = read_store(path)?;
    if let Some(e) = existing.entries.iter().find(|e| e.config_hash() != hash) {
        return Err(Error::Store(format!(
            "{} holds a record with hash {} (expected {hash})",
            path.display(),
            e.config_hash()
        )));
    }
    let done: HashSet<(u64, usize)> = existing.entries.iter().map(StoreEntry::key).collect();
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    if existing.partial_tail {
        file.set_len(existing.valid_len)?;
    }

    let todo: Vec<_> = tasks.iter().filter(|t| !done.contains(&(t.t.to_bits(), t.replica_index))).copied().collect();
    let mut summary = RunSummary { planned: tasks.len(), skipped: tasks.len() - todo.len(), ..Default::default() };
    if todo.is_empty() {
        return Ok(summary);
    }

    let threads = resolve_parallelism(config.parallelism);
    let mut out = BufWriter::new(file);
    let mut write = |entry: &StoreEntry, s: &mut RunSummary| -> Result<()> {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
        out.flush()?;
        match entry {
            StoreEntry::Replica(_) => s.completed += 1,
            StoreEntry::Failure(_) => s.failed += 1,
        }
        Ok(())
    };

    if threads == 1 {
        for task in &todo {
            write(&compute_entry(config, &hash, task), &mut summary)?;
        }
        return Ok(summary);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {threads} workers: {e}")))?;
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<StoreEntry>();
    std::thread::scope(|scope| {
        scope.spawn(|| {
            pool.install(|| {
                todo.par_iter().for_each_with(tx, |tx, task| {
                    if abort.load(Ordering::Relaxed) {
                        return;
                    }
                    let _ = tx.send(compute_entry(config, &hash, task));
                })
            })
        });
        for entry in rx {
            if let Err(e) = write(&entry, &mut summary) {
                abort.store(true, Ordering::Relaxed);
                return Err(e);
            }
        }
        Ok(summary)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::store::sidecar_path;
    use crate::sim::SimConfig;

    fn cfg(dir: &std::path::Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(SimConfig::exact(1.0, 0), vec![1.0, 2.5], 4, dir.join("s.jsonl"));
        c.beta_grid = vec![0.0, 0.5];
        c.root_seed = 11;
        c.parallelism = Some(1);
        c
    }

    #[test]
    fn runs_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(dir.path());
        let s = run(&c).unwrap();
        assert_eq!((s.planned, s.completed, s.skipped, s.failed), (8, 8, 0, 0));
        assert!(sidecar_path(&c.output_path).exists());
        let before = fs::read(&c.output_path).unwrap();
        let again = run(&c).unwrap();
        assert_eq!((again.completed, again.skipped), (0, 8));
        assert_eq!(fs::read(&c.output_path).unwrap(), before);
        assert_eq!(exit_code(&Ok(again)), 0);
    }

    #[test]
    fn interrupted_store_is_completed() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(dir.path());
        run(&c).unwrap();
        let full = fs::read(&c.output_path).unwrap();
        // keep three whole lines and half of the fourth
        let cuts: Vec<usize> = full.iter().enumerate().filter(|(_, b)| **b == b'\n').map(|(i, _)| i).collect();
        let keep = cuts[2] + 1 + (cuts[3] - cuts[2]) / 2;
        fs::write(&c.output_path, &full[..keep]).unwrap();
        let s = run(&c).unwrap();
        assert_eq!((s.skipped, s.completed), (3, 5));
        assert_eq!(fs::read(&c.output_path).unwrap(), full);
    }

    #[test]
    fn other_configuration_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(dir.path());
        run(&c).unwrap();
        let mut d = c.clone();
        d.root_seed = 12;
        let e = run(&d);
        assert!(matches!(e, Err(Error::Store(_))));
        assert_eq!(exit_code(&e.map(|_| RunSummary::default())), 2);
    }

    #[test]
    fn parallel_record_set_matches_serial() {
        let dir = tempfile::tempdir().unwrap();
        let a = cfg(dir.path());
        let mut b = a.clone();
        b.output_path = dir.path().join("p.jsonl");
        b.parallelism = Some(3);
        run(&a).unwrap();
        run(&b).unwrap();
        let ra = read_store(&a.output_path).unwrap().sorted_replicas();
        let rb = read_store(&b.output_path).unwrap().sorted_replicas();
        assert_eq!(ra, rb);
    }

    #[test]
    fn failures_give_exit_three() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path());
        c.sim.particle_ceiling = 20;
        c.t_grid = vec![0.01, 6.0];
        let s = run(&c).unwrap();
        assert_eq!(s.completed + s.failed, 8);
        assert!(s.failed >= 3 && s.completed >= 3, "{s:?}");
        assert_eq!(exit_code(&Ok(s)), 3);
        assert_eq!(exit_code(&Err(Error::InvalidConfig("x".into()))), 1);
    }
}
