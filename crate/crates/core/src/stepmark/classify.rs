//! Response triage: every raw LLM response maps to exactly one verdict.

use super::parse_stepmarks;
use serde::{Deserialize, Serialize};

/// Case-insensitive prefixes that mark an apology-style refusal.
const SORRY_PREFIXES: &[&str] = &[
    "i'm sorry",
    "i am sorry",
    "im sorry",
    "sorry,",
    "sorry but",
    "i apologize",
    "i apologise",
    "my apologies",
    "unfortunately, i",
    "as an ai",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseVerdict {
    Valid,
    SorryLike { detail: String },
    NonConforming { detail: String },
}

impl ResponseVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, ResponseVerdict::Valid)
    }
}

/// Splits a raw response into its step-marked part and an optional trailing
/// pseudo-code section. The section starts at a line reading `pseudo-code:`
/// (variants: `pseudocode`, `pseudo codes`, optional colon, any case).
pub fn split_response(raw: &str) -> (&str, Option<&str>) {
    let mut offset = 0usize;
    for line in raw.split_inclusive('\n') {
        let t = line.trim().trim_end_matches(':').replace([' ', '-'], "");
        let lower = t.to_lowercase();
        if lower == "pseudocode" || lower == "pseudocodes" {
            let fine = &raw[..offset];
            let code = &raw[offset + line.len()..];
            return (fine, Some(code));
        }
        offset += line.len();
    }
    (raw, None)
}

/// Total classification: sorry-like prefix, then step-mark conformance.
pub fn classify_response(raw: &str) -> ResponseVerdict {
    let lower = raw.trim_start().to_lowercase();
    for prefix in SORRY_PREFIXES {
        if lower.starts_with(prefix) {
            return ResponseVerdict::SorryLike { detail: snippet(raw) };
        }
    }
    let (fine, _code) = split_response(raw);
    match parse_stepmarks(fine) {
        Ok(_) => ResponseVerdict::Valid,
        Err(e) => ResponseVerdict::NonConforming { detail: e.to_string() },
    }
}

fn snippet(s: &str) -> String {
    s.trim().chars().take(60).collect()
}
