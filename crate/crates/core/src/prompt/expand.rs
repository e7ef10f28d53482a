//! Batch expansion of coarse descriptions into validated step-marked
//! texts: retries on bad verdicts, bounded concurrency, a
//! requests-per-minute cap, an in-order sink, and checkpointed resume.

use crate::prompt::client::{Clock, LlmClient, RequestCtx, TransportError};
use crate::prompt::templates::{render_prompt, PromptTemplate, RenderError, TemplateId};
use crate::stepmark::{
    classify_response, parse_stepmarks, serialize, split_response, validate_pseudocode,
    CorpusLine, PseudoCodeBlock, ResponseVerdict, StepMarkedText,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpandError {
    #[error("retries exhausted; last verdict: {last:?}")]
    ExhaustedRetries { last: ResponseVerdict },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("sink write: {0}")]
    SinkWrite(#[from] std::io::Error),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] serde_json::Error),
}

/// One input to expand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpandInput {
    pub source_id: String,
    pub coarse: String,
    #[serde(default)]
    pub motion_file: Option<String>,
}

/// One request/response round, logged for audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmExchange {
    pub template_id: TemplateId,
    pub coarse_in: String,
    pub attempt: u32,
    pub timestamp_millis: u64,
    pub prompt: String,
    pub raw_response: String,
    pub verdict: ResponseVerdict,
}

/// Terminal per-item status recorded in the checkpoint file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointStatus {
    Valid,
    SorryDropped,
    NonconformingDropped,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub valid: usize,
    pub sorry_dropped: usize,
    pub nonconforming_dropped: usize,
    pub transport_failed: usize,
}

impl ExpansionReport {
    fn count(&mut self, status: CheckpointStatus) {
        match status {
            CheckpointStatus::Valid => self.valid += 1,
            CheckpointStatus::SorryDropped => self.sorry_dropped += 1,
            CheckpointStatus::NonconformingDropped => self.nonconforming_dropped += 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpandOptions {
    pub max_retries: u32,
    pub concurrency: usize,
    pub requests_per_minute: u32,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        Self { max_retries: 2, concurrency: 4, requests_per_minute: 60 }
    }
}

/// Expands one coarse description, retrying on sorry-like or
/// non-conforming verdicts. Pseudo-codes are validated when the template
/// demands them and then discarded from the stored fine text.
pub fn expand_one(
    input: &ExpandInput,
    template: &PromptTemplate,
    client: &dyn LlmClient,
    max_retries: u32,
    clock: &dyn Clock,
) -> Result<(StepMarkedText, Option<PseudoCodeBlock>, Vec<LlmExchange>), ExpandError> {
    let prompt = render_prompt(template, &input.coarse)?;
    let mut exchanges = Vec::new();
    let mut last = ResponseVerdict::NonConforming { detail: "no attempts made".into() };
    for attempt in 1..=max_retries + 1 {
        let ctx = RequestCtx { source_id: input.source_id.clone(), attempt };
        let raw = client.submit(&prompt, &ctx)?;
        let mut verdict = classify_response(&raw);
        let mut success = None;
        if verdict.is_valid() {
            let (fine_part, code_part) = split_response(&raw);
            let mut parsed =
                parse_stepmarks(fine_part).expect("classify_response validated this text");
            parsed.coarse = Some(input.coarse.clone());
            parsed.source_id = input.source_id.clone();
            if template.requires_pseudocode {
                match code_part {
                    None => {
                        verdict = ResponseVerdict::NonConforming {
                            detail: "missing required pseudo-code section".into(),
                        };
                    }
                    Some(code) => match validate_pseudocode(code, &parsed) {
                        Ok(block) => success = Some((parsed, Some(block))),
                        Err(e) => {
                            verdict =
                                ResponseVerdict::NonConforming { detail: e.to_string() };
                        }
                    },
                }
            } else {
                success = Some((parsed, None));
            }
        }
        exchanges.push(LlmExchange {
            template_id: template.id,
            coarse_in: input.coarse.clone(),
            attempt,
            timestamp_millis: clock.now_millis(),
            prompt: prompt.clone(),
            raw_response: raw,
            verdict: verdict.clone(),
        });
        if let Some((parsed, block)) = success {
            return Ok((parsed, block, exchanges));
        }
        last = verdict;
    }
    Err(ExpandError::ExhaustedRetries { last })
}

/// Sliding-window requests-per-minute limiter over an injectable clock.
struct RateLimiter<'a> {
    clock: &'a dyn Clock,
    rpm: u32,
    window: Mutex<VecDeque<u64>>,
}

impl<'a> RateLimiter<'a> {
    fn new(clock: &'a dyn Clock, rpm: u32) -> Self {
        Self { clock, rpm, window: Mutex::new(VecDeque::new()) }
    }

    fn acquire(&self) {
        loop {
            let wait = {
                let mut w = self.window.lock().unwrap();
                let now = self.clock.now_millis();
                while w.front().is_some_and(|&t| t + 60_000 <= now) {
                    w.pop_front();
                }
                if (w.len() as u32) < self.rpm {
                    w.push_back(now);
                    return;
                }
                w.front().map(|&t| t + 60_000 - now).unwrap_or(1)
            };
            self.clock.sleep_millis(wait.max(1));
        }
    }
}

struct RateLimitedClient<'a> {
    inner: &'a dyn LlmClient,
    limiter: &'a RateLimiter<'a>,
}

impl LlmClient for RateLimitedClient<'_> {
    fn submit(&self, prompt: &str, ctx: &RequestCtx) -> Result<String, TransportError> {
        self.limiter.acquire();
        self.inner.submit(prompt, ctx)
    }
}

enum Outcome {
    /// Completed in a previous run; already on disk.
    Previously,
    Done {
        status: Option<CheckpointStatus>,
        line: Option<CorpusLine>,
        exchanges: Vec<LlmExchange>,
    },
}

struct SinkState {
    results: Vec<Option<Outcome>>,
    next_write: usize,
    sink: std::fs::File,
    exchanges: Option<std::fs::File>,
    checkpoint: BTreeMap<String, CheckpointStatus>,
    report: ExpansionReport,
}

fn persist_checkpoint(
    path: &Path,
    checkpoint: &BTreeMap<String, CheckpointStatus>,
) -> Result<(), ExpandError> {
    std::fs::write(path, serde_json::to_string_pretty(checkpoint)?)?;
    Ok(())
}

fn drain_ready(
    state: &mut SinkState,
    inputs: &[ExpandInput],
    checkpoint_path: &Path,
) -> Result<(), ExpandError> {
    while state.next_write < state.results.len() {
        let Some(outcome) = state.results[state.next_write].take() else {
            break;
        };
        let input = &inputs[state.next_write];
        match outcome {
            Outcome::Previously => {}
            Outcome::Done { status, line, exchanges } => {
                if let Some(line) = line {
                    writeln!(state.sink, "{}", serde_json::to_string(&line)?)?;
                }
                if let Some(exch_file) = &mut state.exchanges {
                    for e in &exchanges {
                        writeln!(exch_file, "{}", serde_json::to_string(e)?)?;
                    }
                }
                match status {
                    Some(s) => {
                        state.checkpoint.insert(input.source_id.clone(), s);
                        state.report.count(s);
                        persist_checkpoint(checkpoint_path, &state.checkpoint)?;
                    }
                    None => state.report.transport_failed += 1,
                }
            }
        }
        state.next_write += 1;
    }
    Ok(())
}

/// Expands every input under the concurrency and rate caps. Output order
/// is stable by input order; completed items are checkpointed by
/// `source_id`, so a rerun never re-requests them. Transport failures are
/// not checkpointed and will be retried by a rerun.
#[allow(clippy::too_many_arguments)]
pub fn expand_corpus(
    inputs: &[ExpandInput],
    template: &PromptTemplate,
    client: &dyn LlmClient,
    options: &ExpandOptions,
    sink_path: &Path,
    checkpoint_path: &Path,
    exchanges_path: Option<&Path>,
    clock: &dyn Clock,
) -> Result<ExpansionReport, ExpandError> {
    assert!(options.concurrency >= 1, "concurrency must be at least 1");
    let checkpoint: BTreeMap<String, CheckpointStatus> = if checkpoint_path.exists() {
        serde_json::from_str(&std::fs::read_to_string(checkpoint_path)?)?
    } else {
        BTreeMap::new()
    };
    let mut report = ExpansionReport::default();
    let mut results: Vec<Option<Outcome>> = Vec::with_capacity(inputs.len());
    let mut done_before: Vec<bool> = Vec::with_capacity(inputs.len());
    for input in inputs {
        if let Some(status) = checkpoint.get(&input.source_id) {
            report.count(*status);
            results.push(Some(Outcome::Previously));
            done_before.push(true);
        } else {
            results.push(None);
            done_before.push(false);
        }
    }
    let sink = std::fs::OpenOptions::new().create(true).append(true).open(sink_path)?;
    let exchanges = match exchanges_path {
        Some(p) => Some(std::fs::OpenOptions::new().create(true).append(true).open(p)?),
        None => None,
    };
    let state = Mutex::new(SinkState {
        results,
        next_write: 0,
        sink,
        exchanges,
        checkpoint,
        report,
    });
    let limiter = RateLimiter::new(clock, options.requests_per_minute);
    let limited = RateLimitedClient { inner: client, limiter: &limiter };
    let next_index = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..options.concurrency.min(inputs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next_index.fetch_add(1, Ordering::SeqCst);
                if i >= inputs.len() {
                    break;
                }
                if done_before[i] {
                    continue; // checkpointed in a previous run
                }
                let outcome =
                    match expand_one(&inputs[i], template, &limited, options.max_retries, clock) {
                        Ok((fine, block, exchanges)) => Outcome::Done {
                            status: Some(CheckpointStatus::Valid),
                            line: Some(CorpusLine {
                                source_id: inputs[i].source_id.clone(),
                                coarse: inputs[i].coarse.clone(),
                                fine: serialize(&fine),
                                pseudocode: block.map(|b| {
                                    serde_json::to_string(&b).expect("serializable")
                                }),
                                motion_file: inputs[i].motion_file.clone().unwrap_or_default(),
                            }),
                            exchanges,
                        },
                        Err(ExpandError::ExhaustedRetries { last }) => {
                            let status = match last {
                                ResponseVerdict::SorryLike { .. } => CheckpointStatus::SorryDropped,
                                _ => CheckpointStatus::NonconformingDropped,
                            };
                            Outcome::Done { status: Some(status), line: None, exchanges: Vec::new() }
                        }
                        Err(ExpandError::Transport(_)) => {
                            Outcome::Done { status: None, line: None, exchanges: Vec::new() }
                        }
                        Err(_) => Outcome::Done {
                            status: Some(CheckpointStatus::NonconformingDropped),
                            line: None,
                            exchanges: Vec::new(),
                        },
                    };
                let mut s = state.lock().unwrap();
                s.results[i] = Some(outcome);
                let _ = drain_ready(&mut s, inputs, checkpoint_path);
            });
        }
    });

    let mut s = state.into_inner().unwrap();
    drain_ready(&mut s, inputs, checkpoint_path)?;
    s.sink.flush()?;
    Ok(s.report)
}
