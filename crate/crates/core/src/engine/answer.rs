use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::TokenId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    #[default]
    Numeric,
    Choice,
    String,
}

impl std::str::FromStr for AnswerType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(AnswerType::Numeric),
            "choice" => Ok(AnswerType::Choice),
            "string" => Ok(AnswerType::String),
            other => Err(Error::config(format!("unknown answer type {other:?}"))),
        }
    }
}

/// A candidate answer. Unparseable answers are values too; they just never win.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Answer {
    pub value: String,
    pub parseable: bool,
}

impl Answer {
    /// A parseable answer taken verbatim.
    pub fn parsed(value: impl Into<String>) -> Self {
        Self {
            value: value.into(),
            parseable: true,
        }
    }

    pub fn unparseable() -> Self {
        Self {
            value: String::new(),
            parseable: false,
        }
    }

    pub fn canonical(raw: &str, ty: AnswerType) -> Self {
        Self::parsed(canonicalize(raw, ty))
    }

    /// Wire rendering used in result files.
    pub fn display(&self) -> &str {
        if self.parseable {
            &self.value
        } else {
            "<unparseable>"
        }
    }
}

/// Idempotent normal form for comparing answers.
pub fn canonicalize(raw: &str, ty: AnswerType) -> String {
    let s = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    match ty {
        AnswerType::String => s,
        AnswerType::Choice => s.to_uppercase(),
        AnswerType::Numeric => canonical_number(&s),
    }
}

fn canonical_number(s: &str) -> String {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty()
        || !body.chars().all(|c| c.is_ascii_digit() || c == '.')
        || body.matches('.').count() > 1
    {
        return s.to_string();
    }
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let int = int.trim_start_matches('0');
    let frac = frac.trim_end_matches('0');
    let int = if int.is_empty() { "0" } else { int };
    let mut out = int.to_string();
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    if neg && out != "0" {
        out.insert(0, '-');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rendering {
    /// Tokens `0..=9` rendered as decimal digits; any other token is unparseable.
    #[default]
    Digits,
    /// Token ids joined by single spaces.
    Ids,
}

/// Where the answer lives in a completed generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorSpec {
    pub separator: TokenId,
    /// The answer ends at the first occurrence of this token after the separator.
    #[serde(default)]
    pub terminator: Option<TokenId>,
    #[serde(default)]
    pub rendering: Rendering,
    #[serde(default)]
    pub answer_type: AnswerType,
}

impl ExtractorSpec {
    pub fn new(separator: TokenId) -> Self {
        Self {
            separator,
            terminator: None,
            rendering: Rendering::Digits,
            answer_type: AnswerType::Numeric,
        }
    }

    pub fn with_terminator(mut self, t: TokenId) -> Self {
        self.terminator = Some(t);
        self
    }

    pub fn with_rendering(mut self, r: Rendering) -> Self {
        self.rendering = r;
        self
    }
}

/// The tokens after the last separator (up to the terminator), canonicalized.
pub fn extract_answer(sample: &[TokenId], spec: &ExtractorSpec) -> Answer {
    let Some(sep) = sample.iter().rposition(|&t| t == spec.separator) else {
        return Answer::unparseable();
    };
    let tail = &sample[sep + 1..];
    let tail = match spec.terminator {
        Some(term) => tail.split(|&t| t == term).next().unwrap_or(&[]),
        None => tail,
    };
    if tail.is_empty() {
        return Answer::unparseable();
    }
    let raw = match spec.rendering {
        Rendering::Digits => {
            let mut s = String::with_capacity(tail.len());
            for &t in tail {
                match char::from_digit(t, 10) {
                    Some(c) => s.push(c),
                    None => return Answer::unparseable(),
                }
            }
            s
        }
        Rendering::Ids => tail
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    };
    Answer::canonical(&raw, spec.answer_type)
}

/// Plurality over parseable answers; ties → earliest first occurrence.
pub fn majority_vote(answers: &[Answer]) -> Result<Answer> {
    let first = answers
        .first()
        .ok_or_else(|| Error::domain("majority vote over zero answers"))?;
    let mut tally: Vec<(&Answer, usize)> = Vec::new();
    for a in answers.iter().filter(|a| a.parseable) {
        match tally.iter_mut().find(|(b, _)| *b == a) {
            Some((_, c)) => *c += 1,
            None => tally.push((a, 1)),
        }
    }
    // `tally` is in first-occurrence order, so the first maximum wins ties.
    let best = tally
        .into_iter()
        .fold(None, |best: Option<(&Answer, usize)>, (a, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((a, c)),
        });
    Ok(match best {
        Some((a, _)) => a.clone(),
        None => first.clone(),
    })
}
