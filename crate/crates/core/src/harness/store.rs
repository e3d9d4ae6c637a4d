use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use crate::rl::{write_checkpoint, PolicyCheckpoint, ToyPolicy};

/// Versioned registry of immutable policy snapshots. Publishing is atomic;
/// readers get an `Arc` to a checkpoint that never changes afterwards.
#[derive(Debug)]
pub struct PolicyStore {
    history: Mutex<Vec<Arc<PolicyCheckpoint>>>,
    published: Condvar,
    dir: Option<PathBuf>,
}

impl PolicyStore {
    /// A store whose version 0 is `initial`.
    pub fn new(initial: ToyPolicy) -> PolicyStore {
        PolicyStore {
            history: Mutex::new(vec![Arc::new(PolicyCheckpoint { version: 0, policy: initial })]),
            published: Condvar::new(),
            dir: None,
        }
    }

    /// Also write every published checkpoint to `dir/policy_v{V}.qpol`.
    pub fn with_dir(initial: ToyPolicy, dir: impl Into<PathBuf>) -> std::io::Result<PolicyStore> {
        let mut store = PolicyStore::new(initial);
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        write_checkpoint(dir.join("policy_v0.qpol"), &store.latest())?;
        store.dir = Some(dir);
        Ok(store)
    }

    fn lock(&self) -> MutexGuard<'_, Vec<Arc<PolicyCheckpoint>>> {
        self.history.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn latest(&self) -> Arc<PolicyCheckpoint> {
        Arc::clone(self.lock().last().expect("store always holds version 0"))
    }

    pub fn latest_version(&self) -> u64 {
        self.latest().version
    }

    pub fn get(&self, version: u64) -> Option<Arc<PolicyCheckpoint>> {
        self.lock().get(version as usize).cloned()
    }

    /// Publishes `policy` as the next version and returns that version.
    pub fn publish(&self, policy: ToyPolicy) -> std::io::Result<u64> {
        let mut history = self.lock();
        let ckpt = PolicyCheckpoint { version: history.len() as u64, policy };
        if let Some(dir) = &self.dir {
            write_checkpoint(dir.join(format!("policy_v{}.qpol", ckpt.version)), &ckpt)?;
        }
        let version = ckpt.version;
        history.push(Arc::new(ckpt));
        drop(history);
        self.published.notify_all();
        Ok(version)
    }

    /// Blocks until `version` exists; false on timeout.
    pub fn wait_for(&self, version: u64, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut history = self.lock();
        while (history.len() as u64) <= version {
            let now = Instant::now();
            if now >= deadline {
                return false;
            }
            history = self.published.wait_timeout(history, deadline - now).unwrap_or_else(|e| e.into_inner()).0;
        }
        true
    }
}
