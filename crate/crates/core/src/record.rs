//! Line-oriented `key=value` records with `#` comments.
//!
//! A file holds one or more records separated by blank lines. Floats are
//! printed with Rust's shortest round-trip formatting and `-0` is folded to
//! `0`, so output is byte-stable across runs.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Record {
    entries: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        let key = key.into();
        debug_assert!(!key.contains('=') && !key.contains('\n'));
        self.entries.push((key, value.to_string()));
        self
    }

    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.push(key, format_f64(value))
    }

    pub fn push_point(&mut self, key: impl Into<String>, point: &[f64]) -> &mut Self {
        self.push(key, format_point(point))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

pub fn format_point(p: &[f64]) -> String {
    p.iter().map(|c| format_f64(*c)).collect::<Vec<_>>().join(",")
}

/// Renders records separated by blank lines, after an optional comment block.
pub fn render_records(comment: Option<&str>, records: &[Record]) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&r.to_string());
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<Record>, RecordError> {
    let mut out = Vec::new();
    let mut cur = Record::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| RecordError {
            line: idx + 1,
            message: format!("expected key=value, found `{line}`"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(RecordError {
                line: idx + 1,
                message: "empty key".into(),
            });
        }
        cur.push(k, v.trim());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}
