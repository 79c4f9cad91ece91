//! Parsing of model replies: `<think>` reasoning, `<tool_call>` blocks, and
//! final answers.

use serde::Deserialize;
use thiserror::Error;

use super::{ToolCall, ToolName};

const TOOL_OPEN: &str = "<tool_call>";
const TOOL_CLOSE: &str = "</tool_call>";
const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";

/// A malformed reply: tool-call tags were present but no block parsed.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("malformed tool call: {offending}")]
pub struct ParseError {
    /// The offending block body, as found in the reply.
    pub offending: String,
}

/// What the model did this turn.
#[derive(Debug, Clone, PartialEq)]
pub enum TurnAction {
    Expand(ToolCall),
    Answer(String),
}

/// A successfully parsed model reply.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTurn {
    /// Contents of all `<think>` blocks, verbatim, joined by newline.
    pub reasoning: String,
    pub action: TurnAction,
    /// Tool-call blocks beyond the first; they are ignored, one expansion
    /// per turn.
    pub extra_tool_calls: usize,
}

#[derive(Deserialize)]
struct ToolCallBody {
    name: String,
    arguments: ToolCallArgs,
}

#[derive(Deserialize)]
struct ToolCallArgs {
    image: i64,
}

fn parse_tool_body(body: &str) -> Option<ToolCall> {
    let parsed: ToolCallBody = serde_json::from_str(body).ok()?;
    let tool_name = ToolName::parse(&parsed.name)?;
    if parsed.arguments.image < 1 {
        return None;
    }
    Some(ToolCall {
        tool_name,
        image_index: parsed.arguments.image as usize,
    })
}

/// All `<tool_call>...</tool_call>` block bodies in order of appearance.
fn tool_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find(TOOL_OPEN) {
        let after = &rest[open + TOOL_OPEN.len()..];
        match after.find(TOOL_CLOSE) {
            Some(close) => {
                out.push(&after[..close]);
                rest = &after[close + TOOL_CLOSE.len()..];
            }
            None => {
                // Unterminated block: take the remainder as the body.
                out.push(after);
                break;
            }
        }
    }
    out
}

fn think_contents(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find(THINK_OPEN) {
        let after = &rest[open + THINK_OPEN.len()..];
        match after.find(THINK_CLOSE) {
            Some(close) => {
                out.push(&after[..close]);
                rest = &after[close + THINK_CLOSE.len()..];
            }
            None => {
                out.push(after);
                break;
            }
        }
    }
    out
}

/// Text following the last closing think tag, or the whole reply when there
/// is none.
fn after_last_think(text: &str) -> &str {
    match text.rfind(THINK_CLOSE) {
        Some(pos) => &text[pos + THINK_CLOSE.len()..],
        None => text,
    }
}

/// Parses one model reply.
///
/// The first well-formed `<tool_call>` block wins; further blocks are
/// counted in `extra_tool_calls` and ignored. If tool-call tags are present
/// but no block parses, the reply is a [`ParseError`] carrying the offending
/// body. With no tool call, the text after the last `</think>` is the final
/// answer; when that is empty the whole reply is the answer.
pub fn parse_model_turn(text: &str) -> Result<ParsedTurn, ParseError> {
    let reasoning = think_contents(text).join("\n");
    let blocks = tool_blocks(text);
    if !blocks.is_empty() {
        for (i, body) in blocks.iter().enumerate() {
            if let Some(call) = parse_tool_body(body) {
                return Ok(ParsedTurn {
                    reasoning,
                    action: TurnAction::Expand(call),
                    extra_tool_calls: blocks.len() - i - 1,
                });
            }
        }
        return Err(ParseError {
            offending: blocks[0].trim().to_string(),
        });
    }
    let tail = after_last_think(text).trim();
    let answer = if tail.is_empty() { text.trim() } else { tail };
    Ok(ParsedTurn {
        reasoning,
        action: TurnAction::Answer(answer.to_string()),
        extra_tool_calls: 0,
    })
}

/// Canonical wire form of a tool call.
pub fn serialize_tool_call(call: &ToolCall) -> String {
    format!(
        "<tool_call>{{\"name\": \"{}\", \"arguments\": {{\"image\": {}}}}}</tool_call>",
        call.tool_name.as_str(),
        call.image_index
    )
}
