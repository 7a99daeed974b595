//! HTTP client for an out-of-process denoiser.
//!
//! `POST {base}/v1/logits` with `{"tokens": [...], "masked": [...], "temperature": T}`.
//! `tokens` is prompt ++ generation with masked slots encoded as `mask_id`, and
//! `masked` lists the 0-based indices into `tokens` to score. The server replies
//! `{"logits": [[f64; V], ...]}` aligned with `masked`. Logits are raw; the
//! client applies softmax and then the temperature transform itself, so the
//! `temperature` field is informational for the server.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{apply_temperature, check_request, softmax, Denoiser, DistributionSet};
use crate::error::{Error, Result};
use crate::sequence::{MaskedSequence, TokenId, VocabSpec};

pub const LOGITS_PATH: &str = "/v1/logits";

/// Logit used on the wire for a token with zero probability (`exp` underflows to 0).
const ZERO_MASS_LOGIT: f64 = -1.0e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitsRequest {
    pub tokens: Vec<TokenId>,
    pub masked: Vec<usize>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitsResponse {
    pub logits: Vec<Vec<f64>>,
}

impl LogitsRequest {
    pub fn for_sequence(seq: &MaskedSequence, positions: &[usize], temperature: f64) -> Self {
        Self {
            tokens: seq.wire_tokens(),
            masked: positions.iter().map(|&p| seq.absolute(p)).collect(),
            temperature,
        }
    }

    /// Rebuild the sequence on the serving side. The prompt boundary is not on
    /// the wire, so every token is treated as a generation slot.
    pub fn to_sequence(&self, vocab: VocabSpec) -> Result<MaskedSequence> {
        let mask = vocab.mask_id();
        let slots = self
            .tokens
            .iter()
            .map(|&t| if t == mask { None } else { Some(t) })
            .collect();
        let seq = MaskedSequence::from_slots(vocab, vec![], slots)?;
        for &m in &self.masked {
            if m >= seq.gen_len() || !seq.is_masked(m) {
                return Err(Error::Protocol(format!(
                    "masked index {m} is not a mask slot"
                )));
            }
        }
        Ok(seq)
    }
}

impl LogitsResponse {
    /// Serve a request from a local denoiser: untempered log-probabilities.
    pub fn from_denoiser<D: Denoiser + ?Sized>(denoiser: &D, req: &LogitsRequest) -> Result<Self> {
        let seq = req.to_sequence(denoiser.vocab())?;
        let dists = denoiser.predict(&seq, &req.masked, 1.0)?;
        let logits = req
            .masked
            .iter()
            .map(|&m| {
                dists
                    .get(m)
                    .expect("denoiser covers requested positions")
                    .iter()
                    .map(|&p| {
                        if p > 0.0 {
                            p.ln().max(ZERO_MASS_LOGIT)
                        } else {
                            ZERO_MASS_LOGIT
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { logits })
    }

    /// Check arity and finiteness against a request.
    pub fn validate(&self, expected_rows: usize, vocab: Option<VocabSpec>) -> Result<usize> {
        if self.logits.len() != expected_rows {
            return Err(Error::Protocol(format!(
                "expected {expected_rows} logit rows, got {}",
                self.logits.len()
            )));
        }
        let width = match vocab {
            Some(v) => v.size(),
            None => self.logits.first().map(Vec::len).unwrap_or(0),
        };
        if width < 2 {
            return Err(Error::Protocol(format!("logit rows of width {width}")));
        }
        for (i, row) in self.logits.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Protocol(format!(
                    "row {i} has width {}, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Protocol(format!(
                    "row {i} contains non-finite logits"
                )));
            }
        }
        Ok(width)
    }
}

#[derive(Clone)]
pub struct RemoteDenoiser {
    endpoint: String,
    vocab: VocabSpec,
    agent: ureq::Agent,
}

impl RemoteDenoiser {
    pub fn new(url: &str, vocab: VocabSpec) -> Self {
        Self::with_timeout(url, vocab, Duration::from_secs(30))
    }

    pub fn with_timeout(url: &str, vocab: VocabSpec, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self {
            endpoint: endpoint(url),
            vocab,
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// One raw round trip, validated for arity only.
    pub fn post(
        &self,
        req: &LogitsRequest,
        vocab: Option<VocabSpec>,
    ) -> Result<(LogitsResponse, usize)> {
        let body = serde_json::to_string(req)?;
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| Error::Transport(format!("{}: {e}", self.endpoint)))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(format!("{}: reading body: {e}", self.endpoint)))?;
        if status != 200 {
            return Err(Error::Protocol(format!(
                "{} answered HTTP {status}",
                self.endpoint
            )));
        }
        let parsed: LogitsResponse = serde_json::from_str(&text)
            .map_err(|e| Error::Protocol(format!("malformed response body: {e}")))?;
        let width = parsed.validate(req.masked.len(), vocab)?;
        Ok((parsed, width))
    }
}

fn endpoint(url: &str) -> String {
    let base = url.trim_end_matches('/');
    if base.ends_with(LOGITS_PATH) {
        base.to_string()
    } else {
        format!("{base}{LOGITS_PATH}")
    }
}

impl Denoiser for RemoteDenoiser {
    fn vocab(&self) -> VocabSpec {
        self.vocab
    }

    fn predict(
        &self,
        seq: &MaskedSequence,
        positions: &[usize],
        temperature: f64,
    ) -> Result<DistributionSet> {
        check_request(seq, positions)?;
        let req = LogitsRequest::for_sequence(seq, positions, temperature);
        let (resp, _) = self.post(&req, Some(self.vocab))?;
        let mut out = DistributionSet::new();
        for (&p, row) in positions.iter().zip(&resp.logits) {
            out.insert(p, apply_temperature(&softmax(row), temperature));
        }
        Ok(out)
    }
}

/// Outcome of probing a server against the wire protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServeCheck {
    pub endpoint: String,
    pub vocab_size: usize,
    pub probes: usize,
}

/// Probe `url` with a few masked sequences and verify every response.
///
/// The mask id is `V`, so the vocabulary must be known up front.
pub fn serve_check(url: &str, vocab: VocabSpec) -> Result<ServeCheck> {
    let client = RemoteDenoiser::new(url, vocab);
    let mask = vocab.mask_id();
    let probes = [
        LogitsRequest {
            tokens: vec![mask; 4],
            masked: vec![0, 1, 2, 3],
            temperature: 1.0,
        },
        LogitsRequest {
            tokens: vec![0, mask, 1, mask],
            masked: vec![1, 3],
            temperature: 0.6,
        },
        LogitsRequest {
            tokens: vec![1, 0, mask],
            masked: vec![2],
            temperature: 0.0,
        },
    ];
    for req in &probes {
        client.post(req, Some(vocab))?;
    }
    Ok(ServeCheck {
        endpoint: client.endpoint,
        vocab_size: vocab.size(),
        probes: probes.len(),
    })
}
