//! Stable seed derivation. Every stream is keyed by value (task id, sample
//! index) rather than by scheduling order, so results do not depend on task
//! file order or thread interleaving.

use std::hash::Hasher;

use fnv::FnvHasher;

/// 64-bit FNV-1a, stable across platforms and releases.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Seed for one question: `global ⊕ H(task id)`.
pub fn question_seed(global: u64, task_id: &str) -> u64 {
    global ^ stable_hash(task_id.as_bytes())
}

/// Seed for sample `index` of a run: `run ⊕ H(index)`.
pub fn sample_seed(run: u64, index: usize) -> u64 {
    run ^ stable_hash(&(index as u64).to_le_bytes())
}
