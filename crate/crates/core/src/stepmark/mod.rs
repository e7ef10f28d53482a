//! Lossless parser/serializer for named step marks.
//!
//! A fine-grained description is a sequence of tagged steps:
//!
//! ```text
//! <step 1: beginning pose>The man stands upright.</step 1: beginning pose>
//! ```
//!
//! Open/close tags must carry the same `index: name` payload (whitespace
//! around `:` is tolerated); indices must run 1..n without gaps; any
//! non-whitespace text outside tags makes the input non-conforming. The
//! canonical serialized form uses a single space after `:` and no
//! inter-tag text, so `parse(serialize(s)) == s`.

mod classify;
mod pseudocode;

pub use classify::{classify_response, split_response, ResponseVerdict};
pub use pseudocode::{validate_pseudocode, PseudoArg, PseudoCall, PseudoCodeBlock, PseudoError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("input is empty")]
    EmptyInput,
    #[error("unbalanced tags: {0}")]
    UnbalancedTags(String),
    #[error("step index gap: expected {expected}, found {found}")]
    IndexGap { expected: u32, found: u32 },
    #[error("duplicate step index {0}")]
    DuplicateIndex(u32),
    #[error("open/close tag payload mismatch: `{open}` vs `{close}`")]
    TagPayloadMismatch { open: String, close: String },
    #[error("non-whitespace text outside step tags: `{0}`")]
    StrayText(String),
    #[error("invalid step: {0}")]
    InvalidStep(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum TruncateError {
    #[error("too few steps: have {have}, need at least {need}")]
    TooFewSteps { have: usize, need: usize },
}

/// One line of the canonical corpus format (JSON Lines): a description
/// paired with its motion file. `fine` is the canonical tagged string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusLine {
    pub source_id: String,
    pub coarse: String,
    pub fine: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudocode: Option<String>,
    pub motion_file: String,
}

/// One named step of a fine-grained description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub index: u32,
    pub name: String,
    pub body: String,
}

impl Step {
    /// Normalizes name/body (trim, collapse name whitespace) and checks the
    /// step invariants.
    pub fn new(index: u32, name: &str, body: &str) -> Result<Self, ParseError> {
        if index == 0 {
            return Err(ParseError::InvalidStep("step index must be positive".into()));
        }
        let name = collapse_ws(name);
        if name.is_empty() {
            return Err(ParseError::InvalidStep("step name is empty".into()));
        }
        if name.contains('<') || name.contains('>') {
            return Err(ParseError::InvalidStep(format!("step name `{name}` contains angle brackets")));
        }
        let body = body.trim().to_string();
        if body.is_empty() {
            return Err(ParseError::InvalidStep(format!("step {index} has an empty body")));
        }
        if body.to_lowercase().contains("<step") || body.to_lowercase().contains("</step") {
            return Err(ParseError::InvalidStep(format!("step {index} body contains step tags")));
        }
        Ok(Self { index, name, body })
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// An ordered, contiguously indexed list of steps plus provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepMarkedText {
    pub steps: Vec<Step>,
    pub coarse: Option<String>,
    pub source_id: String,
}

impl StepMarkedText {
    pub fn new(steps: Vec<Step>) -> Result<Self, ParseError> {
        let text = Self { steps, coarse: None, source_id: String::new() };
        text.check_indices()?;
        Ok(text)
    }

    fn check_indices(&self) -> Result<(), ParseError> {
        if self.steps.is_empty() {
            return Err(ParseError::EmptyInput);
        }
        for (i, step) in self.steps.iter().enumerate() {
            let expected = i as u32 + 1;
            if step.index != expected {
                if self.steps[..i].iter().any(|s| s.index == step.index) {
                    return Err(ParseError::DuplicateIndex(step.index));
                }
                return Err(ParseError::IndexGap { expected, found: step.index });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

struct Tag {
    closing: bool,
    index: u32,
    name: String,
    /// Raw payload as written, for mismatch diagnostics.
    raw: String,
    /// Byte range of the whole tag in the input.
    span: (usize, usize),
}

/// Scans `raw[from..]` for the next `<step ...>` or `</step ...>` tag.
/// Returns the tag and the byte offset where the scan stopped, or an error
/// when a tag is malformed.
fn next_tag(raw: &str, from: usize) -> Result<Option<Tag>, ParseError> {
    let bytes = raw.as_bytes();
    let mut i = from;
    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &raw[i..];
        let closing = rest.starts_with("</");
        let after = if closing { &rest[2..] } else { &rest[1..] };
        if !after.starts_with("step") {
            // Not a step tag; the caller decides whether stray `<` is legal.
            return Ok(Some(Tag {
                closing: false,
                index: 0,
                name: String::new(),
                raw: String::new(),
                span: (i, i),
            }));
        }
        let Some(end_rel) = rest.find('>') else {
            return Err(ParseError::UnbalancedTags(format!(
                "tag starting at byte {i} is never closed with `>`"
            )));
        };
        let inner_start = i + if closing { 2 } else { 1 };
        let payload = &raw[inner_start..i + end_rel];
        let (index, name) = parse_payload(payload)?;
        return Ok(Some(Tag {
            closing,
            index,
            name,
            raw: collapse_ws(payload),
            span: (i, i + end_rel + 1),
        }));
    }
    Ok(None)
}

/// Parses `step <digits> : <name>` with tolerated whitespace.
fn parse_payload(payload: &str) -> Result<(u32, String), ParseError> {
    let body = payload.trim();
    let rest = body.strip_prefix("step").ok_or_else(|| {
        ParseError::UnbalancedTags(format!("tag payload `{body}` does not start with `step`"))
    })?;
    let rest = rest.trim_start();
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return Err(ParseError::UnbalancedTags(format!("tag payload `{body}` has no step index")));
    }
    let index: u32 = digits
        .parse()
        .map_err(|_| ParseError::UnbalancedTags(format!("step index `{digits}` out of range")))?;
    let rest = rest[digits.len()..].trim_start();
    let rest = rest.strip_prefix(':').ok_or_else(|| {
        ParseError::UnbalancedTags(format!("tag payload `{body}` is missing `:` before the name"))
    })?;
    let name = collapse_ws(rest);
    if name.is_empty() {
        return Err(ParseError::UnbalancedTags(format!("tag payload `{body}` has an empty name")));
    }
    Ok((index, name))
}

fn snippet(s: &str) -> String {
    let t = s.trim();
    let mut out: String = t.chars().take(40).collect();
    if t.chars().count() > 40 {
        out.push_str("...");
    }
    out
}

/// Parses a raw step-marked string into a [`StepMarkedText`].
pub fn parse_stepmarks(raw: &str) -> Result<StepMarkedText, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let mut steps = Vec::new();
    let mut cursor = 0usize;
    loop {
        let tag = next_tag(raw, cursor)?;
        let Some(tag) = tag else {
            let tail = &raw[cursor..];
            if !tail.trim().is_empty() {
                return Err(ParseError::StrayText(snippet(tail)));
            }
            break;
        };
        if tag.span.0 == tag.span.1 {
            // A `<` that does not open a step tag: stray prose.
            return Err(ParseError::StrayText(snippet(&raw[tag.span.0..])));
        }
        // Text between tags must be whitespace.
        let between = &raw[cursor..tag.span.0];
        if !between.trim().is_empty() {
            return Err(ParseError::StrayText(snippet(between)));
        }
        if tag.closing {
            return Err(ParseError::UnbalancedTags(format!(
                "close tag `{}` without a matching open tag",
                tag.raw
            )));
        }
        // Body runs to the next tag, which must be the matching close.
        let body_start = tag.span.1;
        let close = next_tag(raw, body_start)?;
        let Some(close) = close else {
            return Err(ParseError::UnbalancedTags(format!("step `{}` is never closed", tag.raw)));
        };
        if close.span.0 == close.span.1 {
            return Err(ParseError::StrayText(snippet(&raw[close.span.0..])));
        }
        if !close.closing {
            return Err(ParseError::UnbalancedTags(format!(
                "step `{}` is followed by a new open tag before being closed",
                tag.raw
            )));
        }
        if close.index != tag.index || close.name != tag.name {
            return Err(ParseError::TagPayloadMismatch { open: tag.raw, close: close.raw });
        }
        let body = &raw[body_start..close.span.0];
        steps.push(Step::new(tag.index, &tag.name, body)?);
        cursor = close.span.1;
    }
    if steps.is_empty() {
        return Err(ParseError::StrayText(snippet(raw)));
    }
    StepMarkedText::new(steps)
}

/// Canonical tag form: sorted by index, single space after `:`, no
/// inter-tag text. `parse(serialize(s)) == s`.
pub fn serialize(text: &StepMarkedText) -> String {
    let mut steps: Vec<&Step> = text.steps.iter().collect();
    steps.sort_by_key(|s| s.index);
    let mut out = String::new();
    for step in steps {
        out.push_str(&format!(
            "<step {idx}: {name}>{body}</step {idx}: {name}>",
            idx = step.index,
            name = step.name,
            body = step.body
        ));
    }
    out
}

/// Step bodies in index order, tags removed, internal whitespace collapsed
/// to single spaces.
pub fn strip_steps(text: &StepMarkedText) -> Vec<String> {
    let mut steps: Vec<&Step> = text.steps.iter().collect();
    steps.sort_by_key(|s| s.index);
    steps.iter().map(|s| collapse_ws(&s.body)).collect()
}

/// Step-truncation modes used by the input/data ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruncateMode {
    /// Drop the first and last steps, keep the inner ones.
    DelFirstLast,
    /// Keep only the first and last steps.
    DelInner,
}

/// Removes steps per `mode` and reindexes the survivors from 1.
pub fn truncate_steps(
    text: &StepMarkedText,
    mode: TruncateMode,
) -> Result<StepMarkedText, TruncateError> {
    let n = text.steps.len();
    let kept: Vec<Step> = match mode {
        TruncateMode::DelFirstLast => {
            if n < 3 {
                return Err(TruncateError::TooFewSteps { have: n, need: 3 });
            }
            text.steps[1..n - 1].to_vec()
        }
        TruncateMode::DelInner => {
            if n < 2 {
                return Err(TruncateError::TooFewSteps { have: n, need: 2 });
            }
            vec![text.steps[0].clone(), text.steps[n - 1].clone()]
        }
    };
    let steps = kept
        .into_iter()
        .enumerate()
        .map(|(i, mut s)| {
            s.index = i as u32 + 1;
            s
        })
        .collect();
    let mut out = StepMarkedText::new(steps).expect("reindexed steps are contiguous");
    out.coarse = text.coarse.clone();
    out.source_id = text.source_id.clone();
    Ok(out)
}
