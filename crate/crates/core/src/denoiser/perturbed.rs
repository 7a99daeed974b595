use super::{apply_temperature, check_request, Denoiser, DistributionSet, UniformDenoiser};
use crate::error::{Error, Result};
use crate::sequence::{MaskedSequence, VocabSpec};

/// `(1 − ε)·p_inner + ε·p_noise`, mixed before the temperature transform.
///
/// The noise source defaults to uniform; any other denoiser over the same
/// vocabulary (for example a decoy chain) can stand in for it.
pub struct PerturbedDenoiser<D, N = UniformDenoiser> {
    inner: D,
    noise: N,
    eps: f64,
}

impl<D: Denoiser> PerturbedDenoiser<D, UniformDenoiser> {
    pub fn uniform(inner: D, eps: f64) -> Result<Self> {
        let noise = UniformDenoiser::new(inner.vocab());
        Self::with_noise(inner, noise, eps)
    }
}

impl<D: Denoiser, N: Denoiser> PerturbedDenoiser<D, N> {
    pub fn with_noise(inner: D, noise: N, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::config(format!(
                "perturbation weight {eps} outside [0, 1]"
            )));
        }
        if inner.vocab() != noise.vocab() {
            return Err(Error::config(
                "noise source vocabulary differs from the inner denoiser",
            ));
        }
        Ok(Self { inner, noise, eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl<D: Denoiser, N: Denoiser> Denoiser for PerturbedDenoiser<D, N> {
    fn vocab(&self) -> VocabSpec {
        self.inner.vocab()
    }

    fn predict(
        &self,
        seq: &MaskedSequence,
        positions: &[usize],
        temperature: f64,
    ) -> Result<DistributionSet> {
        check_request(seq, positions)?;
        let clean = self.inner.predict(seq, positions, 1.0)?;
        let noise = self.noise.predict(seq, positions, 1.0)?;
        let mut out = DistributionSet::new();
        for (pos, p) in clean.iter() {
            let q = noise
                .get(pos)
                .ok_or_else(|| Error::Protocol(format!("noise source skipped position {pos}")))?;
            let mixed: Vec<f64> = p
                .iter()
                .zip(q)
                .map(|(a, b)| (1.0 - self.eps) * a + self.eps * b)
                .collect();
            out.insert(pos, apply_temperature(&mixed, temperature));
        }
        Ok(out)
    }
}
