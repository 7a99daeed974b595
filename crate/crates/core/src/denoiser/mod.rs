//! Denoisers: models of `p(x_0^i | x_t)` at masked positions.
//!
//! Every implementation returns one categorical distribution per requested
//! masked generation position, already passed through the temperature
//! transform. A single [`Denoiser::predict`] call is one forward pass and is
//! charged as one step by the decoder, however many positions it scores.

mod markov;
mod perturbed;
mod remote;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{MaskedSequence, TokenId, VocabSpec};

pub use markov::{exact_conditionals, MarkovOracle, MarkovSpec};
pub use perturbed::PerturbedDenoiser;
pub use remote::{serve_check, LogitsRequest, LogitsResponse, RemoteDenoiser, ServeCheck};

const NORM_TOL: f64 = 1e-9;

/// Per-position categorical distributions, keyed by generation index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionSet {
    entries: BTreeMap<usize, Vec<f64>>,
}

impl DistributionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, position: usize, dist: Vec<f64>) {
        self.entries.insert(position, dist);
    }

    pub fn get(&self, position: usize) -> Option<&[f64]> {
        self.entries.get(&position).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn map_values(self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        Self {
            entries: self.entries.into_iter().map(|(k, v)| (k, f(&v))).collect(),
        }
    }

    /// Check normalization, width and that the keys are exactly `positions`.
    pub fn validate(&self, vocab: VocabSpec, positions: &[usize]) -> Result<()> {
        if self.entries.len() != positions.len()
            || positions.iter().any(|p| !self.entries.contains_key(p))
        {
            return Err(Error::Protocol(format!(
                "distribution keys {:?} do not match requested positions {:?}",
                self.entries.keys().collect::<Vec<_>>(),
                positions
            )));
        }
        for (pos, d) in &self.entries {
            if d.len() != vocab.size() {
                return Err(Error::Protocol(format!(
                    "position {pos}: distribution width {} != vocabulary {}",
                    d.len(),
                    vocab.size()
                )));
            }
            if d.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Protocol(format!(
                    "position {pos}: negative or non-finite mass"
                )));
            }
            let total: f64 = d.iter().sum();
            if (total - 1.0).abs() > NORM_TOL {
                return Err(Error::Protocol(format!(
                    "position {pos}: mass sums to {total}"
                )));
            }
        }
        Ok(())
    }
}

pub trait Denoiser: Send + Sync {
    fn vocab(&self) -> VocabSpec;

    /// Score the masked generation positions `positions` of `seq`.
    fn predict(
        &self,
        seq: &MaskedSequence,
        positions: &[usize],
        temperature: f64,
    ) -> Result<DistributionSet>;
}

impl<D: Denoiser + ?Sized> Denoiser for &D {
    fn vocab(&self) -> VocabSpec {
        (**self).vocab()
    }

    fn predict(
        &self,
        seq: &MaskedSequence,
        positions: &[usize],
        temperature: f64,
    ) -> Result<DistributionSet> {
        (**self).predict(seq, positions, temperature)
    }
}

impl<D: Denoiser + ?Sized> Denoiser for Box<D> {
    fn vocab(&self) -> VocabSpec {
        (**self).vocab()
    }

    fn predict(
        &self,
        seq: &MaskedSequence,
        positions: &[usize],
        temperature: f64,
    ) -> Result<DistributionSet> {
        (**self).predict(seq, positions, temperature)
    }
}

impl<D: Denoiser + ?Sized> Denoiser for std::sync::Arc<D> {
    fn vocab(&self) -> VocabSpec {
        (**self).vocab()
    }

    fn predict(
        &self,
        seq: &MaskedSequence,
        positions: &[usize],
        temperature: f64,
    ) -> Result<DistributionSet> {
        (**self).predict(seq, positions, temperature)
    }
}

/// Baseline that knows nothing: every entry is `1/V`.
#[derive(Debug, Clone, Copy)]
pub struct UniformDenoiser {
    vocab: VocabSpec,
}

impl UniformDenoiser {
    pub fn new(vocab: VocabSpec) -> Self {
        Self { vocab }
    }
}

impl Denoiser for UniformDenoiser {
    fn vocab(&self) -> VocabSpec {
        self.vocab
    }

    fn predict(
        &self,
        seq: &MaskedSequence,
        positions: &[usize],
        _temperature: f64,
    ) -> Result<DistributionSet> {
        check_request(seq, positions)?;
        let v = self.vocab.size();
        let mut out = DistributionSet::new();
        for &p in positions {
            out.insert(p, vec![1.0 / v as f64; v]);
        }
        Ok(out)
    }
}

pub(crate) fn check_request(seq: &MaskedSequence, positions: &[usize]) -> Result<()> {
    if positions.is_empty() {
        return Err(Error::domain("predict called with no positions"));
    }
    for &p in positions {
        if p >= seq.gen_len() || !seq.is_masked(p) {
            return Err(Error::domain(format!(
                "position {p} is not a masked generation slot"
            )));
        }
    }
    Ok(())
}

/// Index of the largest entry; ties go to the lowest token id.
pub fn argmax(dist: &[f64]) -> TokenId {
    let mut best = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > dist[best] {
            best = i;
        }
    }
    best as TokenId
}

/// Renormalized `dist^(1/T)`; `T = 0` collapses to a one-hot on the argmax.
pub fn apply_temperature(dist: &[f64], temperature: f64) -> Vec<f64> {
    if temperature == 0.0 {
        let mut out = vec![0.0; dist.len()];
        out[argmax(dist) as usize] = 1.0;
        return out;
    }
    if temperature == 1.0 {
        return dist.to_vec();
    }
    // Log domain so very small T does not underflow every entry.
    let inv = 1.0 / temperature;
    let logs: Vec<f64> = dist
        .iter()
        .map(|&p| {
            if p > 0.0 {
                p.ln() * inv
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Softmax over natural-log-domain logits.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Keep the smallest high-probability set whose mass reaches `p`, renormalized.
pub fn top_p_filter(dist: &[f64], p: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    let mut keep = vec![false; dist.len()];
    let mut mass = 0.0;
    for i in order {
        keep[i] = true;
        mass += dist[i];
        if mass >= p {
            break;
        }
    }
    let z: f64 = dist
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(d, _)| d)
        .sum();
    dist.iter()
        .zip(&keep)
        .map(|(d, k)| if *k { d / z } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn temperature_identity_and_limits() {
        let d = [0.6, 0.4];
        assert_eq!(apply_temperature(&d, 1.0), d.to_vec());
        assert_eq!(apply_temperature(&d, 0.0), vec![1.0, 0.0]);
        assert_eq!(apply_temperature(&[0.5, 0.5], 0.0), vec![1.0, 0.0]);
        // 0.8² / (0.8² + 0.2²) = 0.64 / 0.68
        assert!(close(
            &apply_temperature(&[0.8, 0.2], 0.5),
            &[0.9411765, 0.0588235],
            1e-6
        ));
    }

    #[test]
    fn tiny_temperature_does_not_underflow() {
        let d = apply_temperature(&[0.3, 0.7], 1e-4);
        assert!(close(&d, &[0.0, 1.0], 1e-12));
        assert!(d.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn softmax_normalizes() {
        let p = softmax(&[0.0, (3.0f64).ln()]);
        assert!(close(&p, &[0.25, 0.75], 1e-12));
        let big = softmax(&[1000.0, 1000.0]);
        assert!(close(&big, &[0.5, 0.5], 1e-12));
    }

    #[test]
    fn top_p_keeps_nucleus() {
        let d = top_p_filter(&[0.5, 0.3, 0.2], 0.6);
        assert!(close(&d, &[0.625, 0.375, 0.0], 1e-12));
        assert_eq!(
            top_p_filter(&[0.5, 0.3, 0.2], 1.0)
                .iter()
                .filter(|p| **p > 0.0)
                .count(),
            3
        );
    }

    #[test]
    fn uniform_denoiser_entries() {
        let v = VocabSpec::new(4).unwrap();
        let seq = MaskedSequence::fully_masked(v, vec![0], 3).unwrap();
        let d = UniformDenoiser::new(v).predict(&seq, &[0, 2], 0.6).unwrap();
        d.validate(v, &[0, 2]).unwrap();
        assert!(d.iter().all(|(_, p)| p.iter().all(|x| *x == 0.25)));
    }

    #[test]
    fn validate_rejects_wrong_keys_and_mass() {
        let v = VocabSpec::new(2).unwrap();
        let mut d = DistributionSet::new();
        d.insert(0, vec![0.5, 0.5]);
        assert!(d.validate(v, &[1]).is_err());
        d.insert(1, vec![0.7, 0.2]);
        assert!(d.validate(v, &[0, 1]).is_err());
    }

    #[test]
    fn predict_requires_masked_positions() {
        let v = VocabSpec::new(3).unwrap();
        let seq = MaskedSequence::from_slots(v, vec![], vec![Some(1), None]).unwrap();
        let u = UniformDenoiser::new(v);
        assert!(u.predict(&seq, &[0], 1.0).is_err());
        assert!(u.predict(&seq, &[], 1.0).is_err());
        assert!(u.predict(&seq, &[1], 1.0).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dist() -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(0.001f64..1.0, 2..8).prop_map(|w| {
                let z: f64 = w.iter().sum();
                w.into_iter().map(|x| x / z).collect()
            })
        }

        proptest! {
            #[test]
            fn temperature_preserves_argmax(d in dist(), t in 0.05f64..5.0) {
                let out = apply_temperature(&d, t);
                prop_assert_eq!(argmax(&out), argmax(&d));
                prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
