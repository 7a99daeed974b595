use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.3;
pub const DEFAULT_TEMPERATURE: f64 = 0.6;
pub const DEFAULT_MAX_SAMPLES: usize = 5;

/// Standard (generation length, block size) pairings.
pub const STANDARD_BLOCKING: [(usize, usize); 3] = [(128, 8), (256, 16), (512, 32)];

/// Decoding configuration shared by every method.
///
/// Consistency and stopping thresholds live in
/// [`ConsistencyParams`](crate::consistency::ConsistencyParams).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub gen_len: usize,
    pub block_size: usize,
    /// Entropy threshold in nats; `f64::INFINITY` commits every position.
    #[serde(with = "inf_f64")]
    pub alpha: f64,
    /// `0.0` means greedy argmax.
    pub temperature: f64,
    /// Optional nucleus filter applied after temperature.
    pub top_p: Option<f64>,
    pub max_samples: usize,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self::for_length(128)
    }
}

impl GenerationConfig {
    /// Defaults for a generation length, using the standard block pairing
    /// (or `L/16` rounded up for lengths outside it).
    pub fn for_length(gen_len: usize) -> Self {
        let block_size = STANDARD_BLOCKING
            .iter()
            .find(|(l, _)| *l == gen_len)
            .map(|(_, b)| *b)
            .unwrap_or_else(|| gen_len.div_ceil(16).max(1));
        Self {
            gen_len,
            block_size,
            alpha: DEFAULT_ALPHA,
            temperature: DEFAULT_TEMPERATURE,
            top_p: None,
            max_samples: DEFAULT_MAX_SAMPLES,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gen_len == 0 {
            return Err(Error::config("gen_len must be >= 1"));
        }
        if self.block_size == 0 {
            return Err(Error::config("block_size must be >= 1"));
        }
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return Err(Error::config(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::config(format!(
                "temperature must be finite and >= 0, got {}",
                self.temperature
            )));
        }
        if let Some(p) = self.top_p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::config(format!("top_p must be in (0, 1], got {p}")));
            }
        }
        if self.max_samples == 0 {
            return Err(Error::config("max_samples must be >= 1"));
        }
        Ok(())
    }
}

/// Parse a float that may be spelled `inf`/`∞`.
pub fn parse_f64_or_inf(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "infinity" | "Inf" | "∞" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|_| Error::config(format!("not a number: {other:?}"))),
    }
}

/// Parse a count that may be spelled `inf`/`none` (mapped to `usize::MAX`).
pub fn parse_usize_or_inf(s: &str) -> Result<usize> {
    match s.trim() {
        "inf" | "infinity" | "none" | "∞" => Ok(usize::MAX),
        other => other
            .parse::<usize>()
            .map_err(|_| Error::config(format!("not a count: {other:?}"))),
    }
}

/// JSON has no infinity literal; infinite values travel as the string `"inf"`.
pub(crate) mod inf_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => super::parse_f64_or_inf(&s).map_err(serde::de::Error::custom),
        }
    }
}
