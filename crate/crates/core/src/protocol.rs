//! Trial protocol files: `utterance_id label [pair_id]` per line.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Genuine,
    Spoof,
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "genuine" => Ok(Label::Genuine),
            "spoof" => Ok(Label::Spoof),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Genuine => "genuine",
            Label::Spoof => "spoof",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolEntry {
    pub utterance_id: String,
    pub label: Label,
    pub pair_id: Option<String>,
}

impl ProtocolEntry {
    pub fn new(id: impl Into<String>, label: Label, pair_id: Option<String>) -> Self {
        Self {
            utterance_id: id.into(),
            label,
            pair_id,
        }
    }
}

/// Parses protocol text. Blank lines and lines starting with `#` are skipped;
/// reported line numbers are 1-based physical lines.
pub fn parse_protocol_str(text: &str) -> Result<Vec<ProtocolEntry>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: idx + 1, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 || toks.len() > 3 {
            return Err(err(format!(
                "expected `utterance_id label [pair_id]`, found {} fields",
                toks.len()
            )));
        }
        let label = toks[1].parse::<Label>().map_err(err)?;
        let id = toks[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::Duplicate(id));
        }
        out.push(ProtocolEntry {
            utterance_id: id,
            label,
            pair_id: toks.get(2).map(|s| s.to_string()),
        });
    }
    Ok(out)
}

pub fn parse_protocol(path: impl AsRef<Path>) -> Result<Vec<ProtocolEntry>> {
    let path = path.as_ref();
    let bytes = fsutil::read_all(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Format(format!("{}: protocol is not UTF-8", path.display())))?;
    parse_protocol_str(&text)
}

pub fn render_protocol(entries: &[ProtocolEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        s.push_str(&e.utterance_id);
        s.push(' ');
        s.push_str(&e.label.to_string());
        if let Some(p) = &e.pair_id {
            s.push(' ');
            s.push_str(p);
        }
        s.push('\n');
    }
    s
}
