use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{canonicalize, Answer, AnswerType, ExtractorSpec};
use crate::error::{Error, Result};
use crate::sequence::TokenId;

use super::synth::SyntheticParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PromptSpec {
    Literal(Vec<TokenId>),
    Synthetic { synthetic: SyntheticParams },
}

/// One line of a tasks JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub prompt: PromptSpec,
    pub gold: String,
    pub answer_type: AnswerType,
    /// Required for literal prompts; synthetic tasks derive their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractor: Option<ExtractorSpec>,
    /// 1-based source line, for diagnostics.
    #[serde(skip)]
    pub line: usize,
}

impl TaskRecord {
    pub fn gold_answer(&self) -> Answer {
        Answer::canonical(&self.gold, self.answer_type)
    }

    pub fn extractor(&self) -> Result<ExtractorSpec> {
        match (&self.extractor, &self.prompt) {
            (Some(e), _) => Ok(e.clone()),
            (None, PromptSpec::Synthetic { synthetic }) => Ok(synthetic.extractor()),
            (None, PromptSpec::Literal(_)) => Err(Error::config(format!(
                "task {}: literal prompts need an \"extractor\"",
                self.id
            ))),
        }
    }

    pub fn prompt_tokens(&self) -> Vec<TokenId> {
        match &self.prompt {
            PromptSpec::Literal(t) => t.clone(),
            PromptSpec::Synthetic { synthetic } => synthetic.prompt(),
        }
    }
}

/// Read and validate a JSON-lines task file. Blank lines are ignored.
pub fn ingest_tasks(path: &Path) -> Result<Vec<TaskRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let task_err = |line: usize, message: String| Error::Task {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut rec: TaskRecord =
            serde_json::from_str(raw).map_err(|e| task_err(line, e.to_string()))?;
        rec.line = line;
        if let Some(first) = seen.insert(rec.id.clone(), line) {
            return Err(task_err(
                line,
                format!("duplicate id {:?} (first seen on line {first})", rec.id),
            ));
        }
        if canonicalize(&rec.gold, rec.answer_type).is_empty() {
            return Err(task_err(line, "gold answer is empty".into()));
        }
        if let PromptSpec::Synthetic { synthetic } = &rec.prompt {
            synthetic
                .validate()
                .map_err(|e| task_err(line, e.to_string()))?;
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_tasks(path: &Path, tasks: &[TaskRecord]) -> Result<()> {
    let mut buf = Vec::new();
    for t in tasks {
        serde_json::to_writer(&mut buf, t)?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}
