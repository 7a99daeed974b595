use serde::{Deserialize, Serialize};

use super::{apply_temperature, check_request, Denoiser, DistributionSet, NORM_TOL};
use crate::error::{Error, Result};
use crate::sequence::{MaskedSequence, TokenId, VocabSpec};

/// An order-1 Markov chain over the full (prompt ++ generation) sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovSpec {
    pub initial: Vec<f64>,
    /// Row-stochastic: `transition[a][b] = P(next = b | current = a)`.
    pub transition: Vec<Vec<f64>>,
}

impl MarkovSpec {
    pub fn new(initial: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let spec = Self {
            initial,
            transition,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.initial.len();
        if v < 2 {
            return Err(Error::Validation(format!(
                "vocabulary of {v} tokens, need >= 2"
            )));
        }
        check_stochastic("initial", &self.initial)?;
        if self.transition.len() != v {
            return Err(Error::Validation(format!(
                "transition has {} rows, expected {v}",
                self.transition.len()
            )));
        }
        for (a, row) in self.transition.iter().enumerate() {
            if row.len() != v {
                return Err(Error::Validation(format!(
                    "transition row {a} has {} entries",
                    row.len()
                )));
            }
            check_stochastic(&format!("transition row {a}"), row)?;
        }
        Ok(())
    }

    pub fn vocab(&self) -> VocabSpec {
        VocabSpec::new(self.initial.len() as u32).expect("validated")
    }

    pub fn vocab_size(&self) -> usize {
        self.initial.len()
    }

    /// Mix every distribution with `eta` of uniform mass, giving full support.
    pub fn smoothed(&self, eta: f64) -> Self {
        let v = self.vocab_size() as f64;
        let mix = |p: &f64| (1.0 - eta) * p + eta / v;
        Self {
            initial: self.initial.iter().map(mix).collect(),
            transition: self
                .transition
                .iter()
                .map(|row| row.iter().map(mix).collect())
                .collect(),
        }
    }

    /// Joint probability of a fully specified token sequence.
    pub fn sequence_probability(&self, tokens: &[TokenId]) -> f64 {
        let Some((&first, rest)) = tokens.split_first() else {
            return 1.0;
        };
        let mut p = self.initial[first as usize];
        let mut prev = first;
        for &t in rest {
            p *= self.transition[prev as usize][t as usize];
            prev = t;
        }
        p
    }
}

fn check_stochastic(what: &str, d: &[f64]) -> Result<()> {
    if d.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Validation(format!(
            "{what} has negative or non-finite entries"
        )));
    }
    let total: f64 = d.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::Validation(format!("{what} sums to {total}")));
    }
    Ok(())
}

fn normalize(v: &mut [f64]) {
    let z: f64 = v.iter().sum();
    if z > 0.0 {
        v.iter_mut().for_each(|x| *x /= z);
    }
}

/// Exact conditional marginals `P(x_i | committed tokens)` at every masked
/// generation position, via forward-backward over each run of masks.
///
/// Under the Markov property a masked run only depends on the committed
/// tokens immediately bracketing it, so each run costs `O(len · V²)`. If the
/// bracketing tokens are jointly impossible under the chain the conditional is
/// undefined and the run falls back to uniform.
pub fn exact_conditionals(spec: &MarkovSpec, seq: &MaskedSequence) -> Result<DistributionSet> {
    spec.validate()?;
    conditionals_at(spec, seq, &seq.masked_positions())
}

fn conditionals_at(
    spec: &MarkovSpec,
    seq: &MaskedSequence,
    positions: &[usize],
) -> Result<DistributionSet> {
    let v = spec.vocab_size();
    if seq.vocab().size() != v {
        return Err(Error::Validation(format!(
            "chain has {v} tokens but sequence vocabulary has {}",
            seq.vocab().size()
        )));
    }
    let mut wanted = vec![false; seq.gen_len()];
    for &p in positions {
        wanted[p] = true;
    }
    let offset = seq.prompt().len();
    let total = seq.total_len();
    let mut out = DistributionSet::new();

    let mut i = 0;
    while i < seq.gen_len() {
        if !seq.is_masked(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < seq.gen_len() && seq.is_masked(i) {
            i += 1;
        }
        let end = i;
        if !(start..end).any(|j| wanted[j]) {
            continue;
        }
        let (a, b) = (offset + start, offset + end);
        let n = end - start;

        let mut fwd = vec![vec![0.0; v]; n];
        fwd[0] = match a.checked_sub(1).and_then(|k| seq.slot(k)) {
            Some(left) => spec.transition[left as usize].clone(),
            None => spec.initial.clone(),
        };
        normalize(&mut fwd[0]);
        for k in 1..n {
            let mut next = vec![0.0; v];
            for (x, &fx) in fwd[k - 1].iter().enumerate() {
                if fx == 0.0 {
                    continue;
                }
                for (y, &t) in spec.transition[x].iter().enumerate() {
                    next[y] += fx * t;
                }
            }
            normalize(&mut next);
            fwd[k] = next;
        }

        let mut bwd = vec![vec![1.0; v]; n];
        if b < total {
            let right = seq.slot(b).expect("run ends at a committed slot") as usize;
            for (x, row) in spec.transition.iter().enumerate() {
                bwd[n - 1][x] = row[right];
            }
            normalize(&mut bwd[n - 1]);
        }
        for k in (0..n - 1).rev() {
            let mut prev = vec![0.0; v];
            for (x, row) in spec.transition.iter().enumerate() {
                prev[x] = row.iter().zip(&bwd[k + 1]).map(|(t, g)| t * g).sum();
            }
            normalize(&mut prev);
            bwd[k] = prev;
        }

        for k in 0..n {
            if !wanted[start + k] {
                continue;
            }
            let mut m: Vec<f64> = fwd[k].iter().zip(&bwd[k]).map(|(f, g)| f * g).collect();
            let z: f64 = m.iter().sum();
            if z > 0.0 {
                m.iter_mut().for_each(|x| *x /= z);
            } else {
                m = vec![1.0 / v as f64; v];
            }
            out.insert(start + k, m);
        }
    }
    Ok(out)
}

/// Denoiser whose conditionals are the exact marginals of a known chain.
#[derive(Debug, Clone)]
pub struct MarkovOracle {
    spec: MarkovSpec,
}

impl MarkovOracle {
    pub fn new(spec: MarkovSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &MarkovSpec {
        &self.spec
    }
}

impl Denoiser for MarkovOracle {
    fn vocab(&self) -> VocabSpec {
        self.spec.vocab()
    }

    fn predict(
        &self,
        seq: &MaskedSequence,
        positions: &[usize],
        temperature: f64,
    ) -> Result<DistributionSet> {
        check_request(seq, positions)?;
        let raw = conditionals_at(&self.spec, seq, positions)?;
        Ok(raw.map_values(|d| apply_temperature(d, temperature)))
    }
}
