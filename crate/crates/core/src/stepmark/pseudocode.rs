//! Minimal call grammar for per-step pseudo-code blocks.
//!
//! The source material shows pseudo-codes only as an image, so this grammar
//! is a documented stand-in: one call per line, `verb(arg, key=value, ...)`
//! with `verb`/identifiers matching `[a-z_][a-z0-9_]*` and numeric literals
//! allowed as values. Step groups are separated by one or more blank lines;
//! the group count must equal the paired description's step count.

use super::StepMarkedText;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PseudoError {
    #[error("pseudo-code grammar error on line {line}: `{text}`")]
    GrammarError { line: usize, text: String },
    #[error("pseudo-code has {groups} step groups, description has {steps} steps")]
    StepCountMismatch { groups: usize, steps: usize },
    #[error("pseudo-code block is empty")]
    EmptyBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PseudoArg {
    Ident(String),
    Number(String),
    KeyValue { key: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoCall {
    pub verb: String,
    pub args: Vec<PseudoArg>,
}

/// Per-step groups of validated calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoCodeBlock {
    pub steps: Vec<Vec<PseudoCall>>,
}

fn call_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let ident = r"[a-z_][a-z0-9_]*";
        let number = r"-?[0-9]+(?:\.[0-9]+)?";
        let value = format!(r"(?:{ident}|{number})");
        let arg = format!(r"(?:{ident}\s*=\s*{value}|{value})");
        let args = format!(r"{arg}(?:\s*,\s*{arg})*");
        Regex::new(&format!(r"^\s*({ident})\s*\(\s*(?:({args})\s*)?\)\s*$")).unwrap()
    })
}

fn parse_arg(raw: &str) -> PseudoArg {
    if let Some((k, v)) = raw.split_once('=') {
        return PseudoArg::KeyValue { key: k.trim().to_string(), value: v.trim().to_string() };
    }
    let t = raw.trim();
    if t.starts_with('-') || t.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        PseudoArg::Number(t.to_string())
    } else {
        PseudoArg::Ident(t.to_string())
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<PseudoCall, PseudoError> {
    let caps = call_re().captures(line).ok_or_else(|| PseudoError::GrammarError {
        line: line_no,
        text: line.trim().to_string(),
    })?;
    let verb = caps[1].to_string();
    let args = match caps.get(2) {
        None => Vec::new(),
        Some(m) => split_top_level_commas(m.as_str()).into_iter().map(|a| parse_arg(&a)).collect(),
    };
    Ok(PseudoCall { verb, args })
}

fn split_top_level_commas(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).collect()
}

/// Validates a raw pseudo-code block against the paired step-marked text.
pub fn validate_pseudocode(
    block_text: &str,
    paired: &StepMarkedText,
) -> Result<PseudoCodeBlock, PseudoError> {
    if block_text.trim().is_empty() {
        return Err(PseudoError::EmptyBlock);
    }
    let mut groups: Vec<Vec<PseudoCall>> = Vec::new();
    let mut current: Vec<PseudoCall> = Vec::new();
    for (i, line) in block_text.lines().enumerate() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                groups.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push(parse_line(line, i + 1)?);
    }
    if !current.is_empty() {
        groups.push(current);
    }
    if groups.len() != paired.len() {
        return Err(PseudoError::StepCountMismatch { groups: groups.len(), steps: paired.len() });
    }
    Ok(PseudoCodeBlock { steps: groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepmark::{Step, StepMarkedText};

    fn paired(n: u32) -> StepMarkedText {
        StepMarkedText::new(
            (1..=n).map(|i| Step::new(i, "s", "b.").unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn accepts_call_with_keyword_argument() {
        let block = validate_pseudocode("raise(arms, target=above_head)", &paired(1)).unwrap();
        assert_eq!(block.steps.len(), 1);
        let call = &block.steps[0][0];
        assert_eq!(call.verb, "raise");
        assert_eq!(call.args.len(), 2);
        assert_eq!(call.args[0], PseudoArg::Ident("arms".into()));
        assert_eq!(
            call.args[1],
            PseudoArg::KeyValue { key: "target".into(), value: "above_head".into() }
        );
    }

    #[test]
    fn unbalanced_paren_is_a_grammar_error() {
        assert!(matches!(
            validate_pseudocode("raise(arms", &paired(1)),
            Err(PseudoError::GrammarError { line: 1, .. })
        ));
    }

    #[test]
    fn group_count_must_match_step_count() {
        let block = "stand()\n\nlift(leg)\n\nkick(leg, height=0.5)";
        assert!(matches!(
            validate_pseudocode(block, &paired(4)),
            Err(PseudoError::StepCountMismatch { groups: 3, steps: 4 })
        ));
        assert!(validate_pseudocode(block, &paired(3)).is_ok());
    }

    #[test]
    fn empty_block_is_rejected() {
        assert_eq!(validate_pseudocode("  \n \n", &paired(1)).unwrap_err(), PseudoError::EmptyBlock);
    }

    #[test]
    fn numbers_and_empty_arg_lists_parse() {
        let block = validate_pseudocode("hold(0.5)\nrelax()", &paired(1)).unwrap();
        assert_eq!(block.steps[0][0].args[0], PseudoArg::Number("0.5".into()));
        assert!(block.steps[0][1].args.is_empty());
    }

    #[test]
    fn uppercase_verbs_are_rejected() {
        assert!(validate_pseudocode("Raise(arms)", &paired(1)).is_err());
    }

    /// Hand-written character-walk recognizer, kept regex-free on purpose:
    /// it is the reference the grammar is fuzz-checked against.
    pub(crate) fn reference_accepts_line(line: &str) -> bool {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let n = chars.len();
        let skip_ws = |i: &mut usize| {
            while *i < n && chars[*i].is_whitespace() {
                *i += 1;
            }
        };
        let ident = |i: &mut usize| -> bool {
            if *i >= n || !(chars[*i].is_ascii_lowercase() || chars[*i] == '_') {
                return false;
            }
            *i += 1;
            while *i < n
                && (chars[*i].is_ascii_lowercase() || chars[*i].is_ascii_digit() || chars[*i] == '_')
            {
                *i += 1;
            }
            true
        };
        let number = |i: &mut usize| -> bool {
            let start = *i;
            if *i < n && chars[*i] == '-' {
                *i += 1;
            }
            let ds = *i;
            while *i < n && chars[*i].is_ascii_digit() {
                *i += 1;
            }
            if *i == ds {
                *i = start;
                return false;
            }
            if *i < n && chars[*i] == '.' {
                *i += 1;
                let fs = *i;
                while *i < n && chars[*i].is_ascii_digit() {
                    *i += 1;
                }
                if *i == fs {
                    *i = start;
                    return false;
                }
            }
            true
        };
        let value = |i: &mut usize| -> bool {
            if *i < n && (chars[*i].is_ascii_lowercase() || chars[*i] == '_') {
                ident(i)
            } else {
                number(i)
            }
        };
        skip_ws(&mut i);
        if !ident(&mut i) {
            return false;
        }
        skip_ws(&mut i);
        if i >= n || chars[i] != '(' {
            return false;
        }
        i += 1;
        skip_ws(&mut i);
        if i < n && chars[i] == ')' {
            i += 1;
        } else {
            loop {
                // arg: value or ident '=' value
                let before = i;
                if chars.get(i).is_some_and(|c| c.is_ascii_lowercase() || *c == '_') {
                    if !ident(&mut i) {
                        return false;
                    }
                    skip_ws(&mut i);
                    if i < n && chars[i] == '=' {
                        i += 1;
                        skip_ws(&mut i);
                        if !value(&mut i) {
                            return false;
                        }
                    }
                } else if !number(&mut i) {
                    return false;
                }
                if i == before {
                    return false;
                }
                skip_ws(&mut i);
                if i < n && chars[i] == ',' {
                    i += 1;
                    skip_ws(&mut i);
                    continue;
                }
                break;
            }
            if i >= n || chars[i] != ')' {
                return false;
            }
            i += 1;
        }
        skip_ws(&mut i);
        i == n
    }

    #[test]
    fn grammar_agrees_with_reference_recognizer_on_fuzz_corpus() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let fragments = [
            "raise", "lift_leg", "hold", "x1", "_t", "Raise", "9x", "arms", "leg", "0.5",
            "-3", "12", "1.", ".5", "target", "above_head", "(", ")", ",", "=", " ", "  ",
        ];
        let single = paired(1);
        for _ in 0..1000 {
            let len = rng.gen_range(1..10);
            let line: String =
                (0..len).map(|_| fragments[rng.gen_range(0..fragments.len())]).collect();
            let ours = validate_pseudocode(&line, &single).is_ok();
            let reference = reference_accepts_line(&line);
            assert_eq!(ours, reference, "disagreement on {line:?}");
        }
    }
}
