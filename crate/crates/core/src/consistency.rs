//! Cross-sample agreement: NUPR@k, voting consistency, the remask mask and
//! the two stopping rules.
//!
//! Every tie is broken by value (lowest token id, lexicographically smallest
//! answer), never by sample order, so permuting samples changes nothing here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::Answer;
use crate::error::{Error, Result};
use crate::sequence::TokenId;

/// Completed generations for one prompt plus their extracted answers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<Vec<TokenId>>,
    answers: Vec<Answer>,
}

impl SampleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(samples: Vec<Vec<TokenId>>, answers: Vec<Answer>) -> Result<Self> {
        if samples.len() != answers.len() {
            return Err(Error::domain("samples and answers differ in length"));
        }
        let mut set = Self::new();
        for (s, a) in samples.into_iter().zip(answers) {
            set.push(s, a)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, sample: Vec<TokenId>, answer: Answer) -> Result<()> {
        if let Some(first) = self.samples.first() {
            if first.len() != sample.len() {
                return Err(Error::domain(format!(
                    "sample of length {} in a set of length {}",
                    sample.len(),
                    first.len()
                )));
            }
        }
        self.samples.push(sample);
        self.answers.push(answer);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn gen_len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn samples(&self) -> &[Vec<TokenId>] {
        &self.samples
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyParams {
    /// A position is retained when at least `⌈tau_frac · K⌉` samples agree on it...
    pub tau_frac: f64,
    /// ...and at least `min_agree` do. `usize::MAX` disables retention.
    pub min_agree: usize,
    /// Order of the NUPR metric reported alongside runs.
    pub k: usize,
    /// Answer-stop fires once the modal answer has this many votes.
    pub stop_count: usize,
    /// Answer-clause retention needs the modal answer's share to exceed this.
    pub tau_ans: f64,
    /// Answer-stop additionally requires a strict majority of all samples.
    pub require_majority: bool,
}

impl Default for ConsistencyParams {
    fn default() -> Self {
        Self {
            tau_frac: 0.5,
            min_agree: 2,
            k: 2,
            stop_count: 2,
            tau_ans: 0.5,
            require_majority: true,
        }
    }
}

impl ConsistencyParams {
    /// Every sample decoded from scratch and all `n` of them collected.
    pub fn without_early_stop() -> Self {
        Self {
            min_agree: usize::MAX,
            stop_count: usize::MAX,
            tau_ans: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_frac > 0.0 && self.tau_frac <= 1.0) {
            return Err(Error::config(format!(
                "tau_frac must be in (0, 1], got {}",
                self.tau_frac
            )));
        }
        if !(self.tau_ans > 0.0 && self.tau_ans <= 1.0) {
            return Err(Error::config(format!(
                "tau_ans must be in (0, 1], got {}",
                self.tau_ans
            )));
        }
        if self.min_agree < 2 {
            return Err(Error::config("min_agree must be >= 2"));
        }
        if self.stop_count < 2 {
            return Err(Error::config("stop_count must be >= 2"));
        }
        if self.k == 0 {
            return Err(Error::config("k must be >= 1"));
        }
        Ok(())
    }

    fn retention_threshold(&self, k: usize) -> usize {
        let frac = (self.tau_frac * k as f64 - 1e-9).ceil().max(0.0) as usize;
        self.min_agree.max(frac)
    }
}

/// Modal token and its count at every position (ties → lowest id).
pub fn token_agreement(set: &SampleSet) -> Vec<(TokenId, usize)> {
    (0..set.gen_len())
        .map(|i| {
            let mut counts: BTreeMap<TokenId, usize> = BTreeMap::new();
            for s in set.samples() {
                *counts.entry(s[i]).or_default() += 1;
            }
            // BTreeMap iterates in ascending id; keep the first maximum.
            counts.into_iter().fold(
                (0, 0),
                |best, (t, c)| if c > best.1 { (t, c) } else { best },
            )
        })
        .collect()
}

/// Fraction of positions where at least `k` of the `K` samples share a token.
pub fn nupr_at_k(set: &SampleSet, k: usize) -> Result<f64> {
    if k == 0 || k > set.len() {
        return Err(Error::domain(format!(
            "NUPR@{k} undefined for {} samples",
            set.len()
        )));
    }
    let agreement = token_agreement(set);
    if agreement.is_empty() {
        return Ok(0.0);
    }
    let hits = agreement.iter().filter(|(_, c)| *c >= k).count();
    Ok(hits as f64 / agreement.len() as f64)
}

/// Answers bucketed by value; all unparseable answers share one bucket.
fn answer_counts(answers: &[Answer]) -> BTreeMap<(bool, &str), usize> {
    let mut counts = BTreeMap::new();
    for a in answers {
        let key = if a.parseable {
            (true, a.value.as_str())
        } else {
            (false, "")
        };
        *counts.entry(key).or_default() += 1;
    }
    counts
}

/// Share of the votes held by the most frequent answer.
pub fn voting_consistency_level(answers: &[Answer]) -> Result<f64> {
    if answers.is_empty() {
        return Err(Error::domain("voting consistency of zero answers"));
    }
    let top = answer_counts(answers).into_values().max().unwrap_or(0);
    Ok(top as f64 / answers.len() as f64)
}

/// Most frequent parseable answer and its count (ties → smallest value).
pub fn modal_answer(answers: &[Answer]) -> Option<(&str, usize)> {
    answer_counts(answers)
        .into_iter()
        .filter(|((parseable, _), _)| *parseable)
        .fold(
            None,
            |best: Option<(&str, usize)>, ((_, v), c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((v, c)),
            },
        )
}

/// Which positions to regenerate, and the token each retained position keeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemaskMask {
    /// `true` = remask, `false` = retain.
    pub remask: Vec<bool>,
    /// Retained value per position; meaningful only where `remask` is false.
    pub tokens: Vec<TokenId>,
}

impl RemaskMask {
    pub fn all_retained(&self) -> bool {
        self.remask.iter().all(|m| !m)
    }

    pub fn remask_count(&self) -> usize {
        self.remask.iter().filter(|m| **m).count()
    }

    pub fn len(&self) -> usize {
        self.remask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.remask.is_empty()
    }
}

/// Retain positions where enough samples agree, plus positions where all
/// samples carrying a dominant answer agree; remask the rest.
pub fn compute_remask_mask(set: &SampleSet, params: &ConsistencyParams) -> RemaskMask {
    let k = set.len();
    let agreement = token_agreement(set);
    let threshold = params.retention_threshold(k);
    let mut remask: Vec<bool> = agreement.iter().map(|(_, c)| *c < threshold).collect();
    let mut tokens: Vec<TokenId> = agreement.iter().map(|(t, _)| *t).collect();

    if k >= 2 {
        if let Some((value, count)) = modal_answer(set.answers()) {
            if count as f64 / k as f64 > params.tau_ans {
                let backers: Vec<&Vec<TokenId>> = set
                    .samples()
                    .iter()
                    .zip(set.answers())
                    .filter(|(_, a)| a.parseable && a.value == value)
                    .map(|(s, _)| s)
                    .collect();
                for i in 0..remask.len() {
                    if !remask[i] {
                        continue;
                    }
                    let t = backers[0][i];
                    if backers.iter().all(|s| s[i] == t) {
                        remask[i] = false;
                        tokens[i] = t;
                    }
                }
            }
        }
    }
    RemaskMask { remask, tokens }
}

/// The vote has converged: the modal parseable answer reached `stop_count`
/// votes (and, unless relaxed, holds a strict majority).
pub fn check_answer_stop(answers: &[Answer], params: &ConsistencyParams) -> bool {
    let Some((_, count)) = modal_answer(answers) else {
        return false;
    };
    count >= params.stop_count && (!params.require_majority || 2 * count > answers.len())
}

/// No position would be remasked.
pub fn check_token_stop(set: &SampleSet, params: &ConsistencyParams) -> bool {
    set.len() >= 2 && compute_remask_mask(set, params).all_retained()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ans(v: &str) -> Answer {
        Answer::parsed(v)
    }

    fn set_of(rows: &[&str]) -> SampleSet {
        // Characters as token ids, each answer = the last character.
        let mut s = SampleSet::new();
        for r in rows {
            let toks: Vec<TokenId> = r.bytes().map(TokenId::from).collect();
            s.push(toks, ans(&r[r.len() - 1..])).unwrap();
        }
        s
    }

    #[test]
    fn agreement_by_hand() {
        let s = set_of(&["ab", "ab", "ac"]);
        assert_eq!(
            token_agreement(&s),
            vec![(b'a' as u32, 3), (b'b' as u32, 2)]
        );
        let disjoint = set_of(&["ab", "cd"]);
        assert!(token_agreement(&disjoint).iter().all(|(_, c)| *c == 1));
        // Tie at position 0 between 'c' and 'a' resolves to the lower id.
        assert_eq!(token_agreement(&disjoint)[0].0, b'a' as u32);
    }

    #[test]
    fn nupr_by_hand() {
        let s = set_of(&["ab", "ab", "ac"]);
        assert_eq!(nupr_at_k(&s, 2).unwrap(), 1.0);
        assert_eq!(nupr_at_k(&s, 3).unwrap(), 0.5);
        assert!(nupr_at_k(&s, 4).is_err());
        assert!(nupr_at_k(&s, 0).is_err());
        let same = set_of(&["abc"; 5]);
        assert_eq!(nupr_at_k(&same, 2).unwrap(), 1.0);
        assert_eq!(nupr_at_k(&same, 3).unwrap(), 1.0);
        assert_eq!(nupr_at_k(&set_of(&["ab", "cd"]), 2).unwrap(), 0.0);
    }

    #[test]
    fn voting_consistency() {
        let a = |xs: &[&str]| xs.iter().map(|x| ans(x)).collect::<Vec<_>>();
        assert_eq!(voting_consistency_level(&a(&["a"; 5])).unwrap(), 1.0);
        assert_eq!(
            voting_consistency_level(&a(&["a", "a", "b", "a", "c"])).unwrap(),
            0.6
        );
        assert_eq!(
            voting_consistency_level(&a(&["a", "b", "c", "d", "e"])).unwrap(),
            0.2
        );
        let mixed = vec![Answer::unparseable(), Answer::unparseable(), ans("x")];
        assert!((voting_consistency_level(&mixed).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(voting_consistency_level(&[]).is_err());
    }

    #[test]
    fn remask_unanimous_and_single() {
        let p = ConsistencyParams::default();
        let s = set_of(&["1+1=2", "1+1=2"]);
        assert!(compute_remask_mask(&s, &p).all_retained());
        let one = set_of(&["1+1=2"]);
        assert!(compute_remask_mask(&one, &p).remask.iter().all(|m| *m));
    }

    #[test]
    fn remask_only_the_disputed_answer() {
        let p = ConsistencyParams::default();
        let s = set_of(&["1+1=2", "1+1=3"]);
        let m = compute_remask_mask(&s, &p);
        assert_eq!(m.remask, vec![false, false, false, false, true]);
        assert_eq!(
            &m.tokens[..4],
            &[b'1' as u32, b'+' as u32, b'1' as u32, b'=' as u32]
        );
    }

    #[test]
    fn answer_clause_retains_where_backers_agree() {
        // K=3, answers (x, x, y): share 2/3 > 0.5. Position 1 has tokens
        // (p, p, q) so the plain rule already retains it; position 0 has
        // (a, b, c) and is remasked; position 2 carries the answer.
        let mut s = SampleSet::new();
        s.push(vec![1, 5, 9], ans("x")).unwrap();
        s.push(vec![2, 5, 9], ans("x")).unwrap();
        s.push(vec![3, 6, 8], ans("y")).unwrap();
        let p = ConsistencyParams::default();
        let m = compute_remask_mask(&s, &p);
        assert_eq!(m.remask, vec![true, false, false]);
        // With the plain rule disabled only the backers' agreement remains.
        let strict = ConsistencyParams {
            min_agree: usize::MAX,
            ..p.clone()
        };
        let m = compute_remask_mask(&s, &strict);
        assert_eq!(m.remask, vec![true, false, false]);
        assert_eq!(m.tokens[1..], [5, 9]);
        let no_clause = ConsistencyParams {
            tau_ans: 1.0,
            ..strict
        };
        assert!(compute_remask_mask(&s, &no_clause)
            .remask
            .iter()
            .all(|x| *x));
    }

    #[test]
    fn answer_stop_rules() {
        let p = ConsistencyParams::default();
        let a = |xs: &[&str]| xs.iter().map(|x| ans(x)).collect::<Vec<_>>();
        assert!(check_answer_stop(&a(&["a", "a"]), &p));
        assert!(!check_answer_stop(&a(&["a", "b"]), &p));
        let p3 = ConsistencyParams {
            stop_count: 3,
            ..p.clone()
        };
        assert!(check_answer_stop(&a(&["a", "b", "a", "a"]), &p3));
        // Count 2 of 4 is not a strict majority...
        assert!(!check_answer_stop(&a(&["a", "b", "a", "c"]), &p));
        // ...unless relaxed to count-only.
        let relaxed = ConsistencyParams {
            require_majority: false,
            ..p.clone()
        };
        assert!(check_answer_stop(&a(&["a", "b", "a", "c"]), &relaxed));
        let unparsed = vec![Answer::unparseable(), Answer::unparseable()];
        assert!(!check_answer_stop(&unparsed, &p));
    }

    #[test]
    fn token_stop_rules() {
        let p = ConsistencyParams::default();
        assert!(check_token_stop(&set_of(&["abc", "abc"]), &p));
        assert!(!check_token_stop(&set_of(&["abc", "abd"]), &p));
        assert!(check_token_stop(&set_of(&["abc", "abd", "xbd"]), &p));
        assert!(!check_token_stop(&set_of(&["abc"]), &p));
    }

    #[test]
    fn disabled_early_stop_never_retains() {
        let p = ConsistencyParams::without_early_stop();
        let s = set_of(&["abc", "abc", "abc"]);
        assert!(compute_remask_mask(&s, &p).remask.iter().all(|m| *m));
        assert!(!check_answer_stop(s.answers(), &p));
        assert!(!check_token_stop(&s, &p));
    }

    #[test]
    fn retention_threshold_grows_with_k() {
        let p = ConsistencyParams::default();
        assert_eq!(p.retention_threshold(1), 2);
        assert_eq!(p.retention_threshold(2), 2);
        assert_eq!(p.retention_threshold(5), 3);
        assert_eq!(p.retention_threshold(6), 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sample_set() -> impl Strategy<Value = (Vec<Vec<u32>>, Vec<String>)> {
            (1usize..=6, 1usize..=16).prop_flat_map(|(k, l)| {
                (
                    prop::collection::vec(prop::collection::vec(0u32..4, l), k),
                    prop::collection::vec(
                        prop::sample::select(vec!["1", "2", "3"]).prop_map(String::from),
                        k,
                    ),
                )
            })
        }

        fn build(rows: &[Vec<u32>], answers: &[String]) -> SampleSet {
            SampleSet::from_parts(rows.to_vec(), answers.iter().map(|a| ans(a)).collect()).unwrap()
        }

        proptest! {
            #[test]
            fn nupr_is_monotone_in_k((rows, answers) in sample_set()) {
                let s = build(&rows, &answers);
                let vals: Vec<f64> = (1..=s.len()).map(|k| nupr_at_k(&s, k).unwrap()).collect();
                prop_assert_eq!(vals[0], 1.0);
                prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
            }

            #[test]
            fn metrics_ignore_sample_order((rows, answers) in sample_set(), rot in 0usize..6) {
                let s = build(&rows, &answers);
                let r = rot % rows.len();
                let mut rows2 = rows.clone();
                rows2.rotate_left(r);
                let mut ans2 = answers.clone();
                ans2.rotate_left(r);
                rows2.reverse();
                ans2.reverse();
                let t = build(&rows2, &ans2);
                let p = ConsistencyParams::default();
                prop_assert_eq!(compute_remask_mask(&s, &p), compute_remask_mask(&t, &p));
                prop_assert_eq!(token_agreement(&s), token_agreement(&t));
                prop_assert_eq!(
                    voting_consistency_level(s.answers()).unwrap(),
                    voting_consistency_level(t.answers()).unwrap()
                );
                prop_assert_eq!(check_answer_stop(s.answers(), &p), check_answer_stop(t.answers(), &p));
            }

            #[test]
            fn consistency_level_times_k_is_integral((rows, answers) in sample_set()) {
                let s = build(&rows, &answers);
                let v = voting_consistency_level(s.answers()).unwrap() * s.len() as f64;
                prop_assert!((v - v.round()).abs() < 1e-9);
                prop_assert!(v.round() >= 1.0 && v.round() <= s.len() as f64);
            }

            #[test]
            fn token_stop_means_full_retention((rows, answers) in sample_set()) {
                let s = build(&rows, &answers);
                let p = ConsistencyParams::default();
                if check_token_stop(&s, &p) {
                    prop_assert!(compute_remask_mask(&s, &p).all_retained());
                }
            }
        }
    }
}
