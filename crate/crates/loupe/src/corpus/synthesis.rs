//! Synthetic trajectory requests and validation.
//!
//! For each hard sample, a synthesis endpoint receives the question, the
//! uncompressed text of every evidence page, and the gold answer, and must
//! emit a trajectory with exactly one expansion per evidence page. Replies
//! that violate the tool-call-count contract are rejected records.

use serde::{Deserialize, Serialize};

use crate::ledger::{TokenCounter, TokenLedger};
use crate::prompts::TRACE_GENERATION_SYSTEM_PROMPT;
use crate::protocol::expand::{ExpandOutcome, ExpandPayload, Expander};
use crate::protocol::{
    parse_model_turn, EpisodeConfig, EpisodeStatus, ParsedTurn, ToolResponseRecord, Trajectory,
    TrajectoryTurn, TurnAction,
};
use crate::render::{EncoderProfile, GlyphMetrics, PageSet};

use super::{CorpusError, Sample};

/// A prompt bundle for the synthesis endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRequest {
    pub sample_id: String,
    pub system_prompt: String,
    pub user_prompt: String,
    /// The reply must contain exactly this many tool calls, one per evidence
    /// page.
    pub expected_tool_calls: usize,
}

/// Builds the synthesis request: trace-generation system prompt plus the
/// question, each evidence page's uncompressed text, and the gold answer.
pub fn build_synthesis_request(
    sample: &Sample,
    evidence_texts: &[(usize, String)],
    answer: &str,
) -> Result<SynthesisRequest, CorpusError> {
    if evidence_texts.is_empty() {
        return Err(CorpusError::EmptyEvidence(sample.id.clone()));
    }
    let mut user = String::new();
    user.push_str("[QUESTION]\n");
    user.push_str(&sample.question);
    user.push_str("\n[/QUESTION]\n\n[EVIDENCE]\n");
    for (index, text) in evidence_texts {
        user.push_str(&crate::prompts::tool_response_text(*index, text));
        user.push_str("\n\n");
    }
    user.push_str("[/EVIDENCE]\n\n[GOLD ANSWER]\n");
    user.push_str(answer);
    user.push_str("\n[/GOLD ANSWER]\n\n");
    user.push_str(&format!(
        "Generate a trajectory with exactly {n} read_text tool call(s), one per evidence image in the order given, each in its own ---RESPONSE{{N}}--- segment, followed by a final ---RESPONSE{last}--- segment containing the final answer after its <think> block.",
        n = evidence_texts.len(),
        last = evidence_texts.len() + 1,
    ));
    Ok(SynthesisRequest {
        sample_id: sample.id.clone(),
        system_prompt: TRACE_GENERATION_SYSTEM_PROMPT.to_string(),
        user_prompt: user,
        expected_tool_calls: evidence_texts.len(),
    })
}

/// Splits a synthesis reply into its `---RESPONSE{N}---` segments.
fn split_segments(reply: &str) -> Vec<String> {
    let mut segments: Vec<String> = Vec::new();
    let mut rest = reply;
    while let Some(start) = rest.find("---RESPONSE") {
        let after = &rest[start + "---RESPONSE".len()..];
        // The delimiter is "---RESPONSE{N}---": skip the number and the
        // closing dashes; anything else is not a delimiter.
        let digits = after.bytes().take_while(|b| b.is_ascii_digit()).count();
        let Some(tail) = after[digits..].strip_prefix("---") else {
            rest = after;
            continue;
        };
        let body = tail.strip_prefix('\n').unwrap_or(tail);
        let end = body.find("---RESPONSE").unwrap_or(body.len());
        segments.push(body[..end].trim().to_string());
        rest = &body[end..];
    }
    segments
}

/// Validates a synthesis reply: every non-final segment must carry exactly
/// one tool call, the final segment must be an answer, and the tool-call
/// count must equal `expected_calls`.
pub fn validate_synthesis_reply(
    reply: &str,
    expected_calls: usize,
) -> Result<Vec<ParsedTurn>, CorpusError> {
    let segments = split_segments(reply);
    if segments.is_empty() {
        return Err(CorpusError::SynthesisRejected(
            "no ---RESPONSE{N}--- segments found".into(),
        ));
    }
    let mut turns = Vec::with_capacity(segments.len());
    for (i, segment) in segments.iter().enumerate() {
        let parsed = parse_model_turn(segment)
            .map_err(|e| CorpusError::SynthesisRejected(format!("segment {}: {e}", i + 1)))?;
        if parsed.extra_tool_calls > 0 {
            return Err(CorpusError::SynthesisRejected(format!(
                "segment {} contains more than one tool call",
                i + 1
            )));
        }
        turns.push(parsed);
    }
    let calls = turns
        .iter()
        .filter(|t| matches!(t.action, TurnAction::Expand(_)))
        .count();
    if calls != expected_calls {
        return Err(CorpusError::SynthesisRejected(format!(
            "expected {expected_calls} tool calls, found {calls}"
        )));
    }
    match turns.last().map(|t| &t.action) {
        Some(TurnAction::Answer(_)) => {}
        _ => {
            return Err(CorpusError::SynthesisRejected(
                "final segment must be an answer, not a tool call".into(),
            ))
        }
    }
    for turn in &turns[..turns.len() - 1] {
        if !matches!(turn.action, TurnAction::Expand(_)) {
            return Err(CorpusError::SynthesisRejected(
                "non-final segment without a tool call".into(),
            ));
        }
    }
    Ok(turns)
}

/// Replays validated synthesis turns against the real pages, attaching
/// ground-truth tool responses and a ledger, producing a trajectory ready
/// for export.
pub fn assemble_synthetic_trajectory(
    sample: &Sample,
    pages: &PageSet,
    turns: Vec<ParsedTurn>,
    counter: &dyn TokenCounter,
    metrics: &dyn GlyphMetrics,
) -> Result<Trajectory, CorpusError> {
    let config = EpisodeConfig::default();
    let expander = Expander {
        pages,
        source_text: &sample.document,
        metrics,
        counter,
        ocr: None,
        config: &config,
        profile: EncoderProfile::default_vit(),
    };
    let mut ledger = TokenLedger::new(counter.count(&sample.document), pages.total_visual_tokens());
    let mut out_turns = Vec::with_capacity(turns.len());
    let mut final_answer = None;

    for (i, parsed) in turns.into_iter().enumerate() {
        let turn_no = i as u32 + 1;
        match parsed.action {
            TurnAction::Expand(call) => {
                let outcome = expander
                    .expand(&call)
                    .map_err(|e| CorpusError::SynthesisRejected(e.to_string()))?;
                let response = match outcome {
                    ExpandOutcome::Expanded(resp) => {
                        ledger.record_expansion(turn_no, resp.kind, resp.token_cost);
                        let text = match resp.payload {
                            ExpandPayload::Text(t) => Some(t),
                            ExpandPayload::ImagePng { .. } => None,
                        };
                        ToolResponseRecord {
                            kind: resp.kind,
                            text,
                            image_dims: None,
                            token_cost: resp.token_cost,
                            executed: true,
                        }
                    }
                    ExpandOutcome::Rejected { .. } => {
                        return Err(CorpusError::SynthesisRejected(format!(
                            "tool call on image {} is out of range",
                            call.image_index
                        )))
                    }
                };
                let raw_reply = format!(
                    "<think>{}</think>\n{}",
                    parsed.reasoning,
                    crate::protocol::serialize_tool_call(&call)
                );
                out_turns.push(TrajectoryTurn {
                    reasoning: parsed.reasoning,
                    raw_reply,
                    tool_call: Some(call),
                    tool_response: Some(response),
                    extra_tool_calls: 0,
                    malformed: None,
                });
            }
            TurnAction::Answer(answer) => {
                let raw_reply = format!("<think>{}</think>\n{}", parsed.reasoning, answer);
                out_turns.push(TrajectoryTurn {
                    reasoning: parsed.reasoning,
                    raw_reply,
                    tool_call: None,
                    tool_response: None,
                    extra_tool_calls: 0,
                    malformed: None,
                });
                final_answer = Some(answer);
            }
        }
    }

    Ok(Trajectory {
        sample_id: sample.id.clone(),
        turns: out_turns,
        final_answer,
        status: EpisodeStatus::Answered,
        ledger,
        error: None,
    })
}
