use serde::{Deserialize, Serialize};

/// Count of denoiser forward invocations, the unit of every reported step figure.
///
/// The only mutation is [`StepLedger::charge`], which adds exactly one step
/// to the current sample.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLedger {
    forwards: u64,
    per_sample: Vec<u64>,
}

impl StepLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Open a new per-sample counter. Charges before the first call land here too.
    pub fn begin_sample(&mut self) {
        self.per_sample.push(0);
    }

    pub fn charge(&mut self) {
        if self.per_sample.is_empty() {
            self.per_sample.push(0);
        }
        *self.per_sample.last_mut().expect("non-empty") += 1;
        self.forwards += 1;
    }

    pub fn forwards(&self) -> u64 {
        self.forwards
    }

    pub fn per_sample(&self) -> &[u64] {
        &self.per_sample
    }

    pub fn current_sample(&self) -> u64 {
        self.per_sample.last().copied().unwrap_or(0)
    }
}
