use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::MethodReport;
use crate::error::{Error, Result};

/// `x` rounded to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.max(1) - 1, x).parse().unwrap_or(x)
}

fn fmt6(x: f64) -> String {
    format!("{}", round_sig(x, 6))
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().unwrap_or(0.0), 6);
            *v = serde_json::Number::from_f64(r)
                .map(Value::Number)
                .unwrap_or(Value::Null);
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_floats),
        Value::Object(m) => m.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Compact JSON with sorted keys and 6-significant-digit floats.
fn stable_json<T: serde::Serialize>(x: &T) -> Result<String> {
    let mut v = serde_json::to_value(x)?;
    round_floats(&mut v);
    Ok(serde_json::to_string(&v)?)
}

fn write(path: &Path, content: &str) -> Result<PathBuf> {
    fs::write(path, content).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Write `results.jsonl`, `summary.json`, `summary.csv` and `plotdata/*.csv`.
pub fn emit_report(reports: &[MethodReport], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::config("no reports to emit"));
    }
    let plot_dir = out_dir.join("plotdata");
    fs::create_dir_all(&plot_dir).map_err(|e| Error::io(&plot_dir, e))?;
    let mut written = Vec::new();

    let mut rows: Vec<(&str, &str, String)> = Vec::new();
    for r in reports {
        for q in &r.results {
            rows.push((&r.label, &q.id, stable_json(q)?));
        }
    }
    rows.sort();
    let mut results = String::new();
    for (_, _, line) in rows {
        results.push_str(&line);
        results.push('\n');
    }
    written.push(write(&out_dir.join("results.jsonl"), &results)?);

    let summary = serde_json::json!({ "reports": reports });
    let mut summary_text = stable_json(&summary)?;
    summary_text.push('\n');
    written.push(write(&out_dir.join("summary.json"), &summary_text)?);

    let mut csv =
        String::from("label,method,questions,skipped,accuracy,mean_steps,mean_samples,bpc\n");
    for r in reports {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.label,
            r.method.as_str(),
            r.questions,
            r.skipped,
            fmt6(r.accuracy),
            fmt6(r.mean_steps),
            fmt6(r.mean_samples),
            r.bpc.map(fmt6).unwrap_or_default()
        );
    }
    written.push(write(&out_dir.join("summary.csv"), &csv)?);

    let mut hist = String::from("label,samples,votes,bin,count\n");
    for r in reports {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let k = r.config.generation.max_samples;
        for v in 1..=k {
            counts.insert((k, v), 0);
        }
        for q in &r.results {
            *counts.entry((q.samples_used, q.modal_votes)).or_default() += 1;
        }
        for ((samples, votes), count) in counts {
            let _ = writeln!(
                hist,
                "{},{samples},{votes},{votes}/{samples},{count}",
                r.label
            );
        }
    }
    written.push(write(&plot_dir.join("consistency_histogram.csv"), &hist)?);

    let mut nupr = String::from("label,k,nupr,questions\n");
    for r in reports {
        let max_k = r.results.iter().map(|q| q.nupr.len()).max().unwrap_or(0);
        for k in 1..=max_k {
            let vals: Vec<f64> = r
                .results
                .iter()
                .filter_map(|q| q.nupr.get(k - 1).copied())
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let _ = writeln!(nupr, "{},{k},{},{}", r.label, fmt6(mean), vals.len());
        }
    }
    written.push(write(&plot_dir.join("nupr.csv"), &nupr)?);

    Ok(written)
}
