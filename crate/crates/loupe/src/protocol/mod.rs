//! The selection-then-expansion tool protocol.
//!
//! A model endpoint sees all compressed pages plus a question and replies in
//! a constrained grammar: reasoning inside `<think>` tags, at most one
//! `<tool_call>` block per turn requesting that a page be expanded, and
//! otherwise a final answer. [`episode::EpisodeHost::run`] drives the turn
//! loop against any [`endpoint::ChatEndpoint`] and records the resulting
//! [`episode::Trajectory`].

pub mod endpoint;
pub mod episode;
pub mod expand;
pub mod parse;

pub use endpoint::{
    ChatEndpoint, ChatMessage, ChatRequest, ContentPart, EndpointError, OcrEndpoint, Role,
};
pub use episode::{
    run_episodes, EpisodeHost, EpisodeJob, EpisodeStatus, ToolResponseRecord, Trajectory,
    TrajectoryTurn,
};
pub use expand::{ExpandOutcome, ExpandPayload, ExpandResponse, Expander};
pub use parse::{parse_model_turn, serialize_tool_call, ParseError, ParsedTurn, TurnAction};

use serde::{Deserialize, Serialize};

/// Names a model may call through the tool grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolName {
    ReadText,
    ZoomIn,
}

impl ToolName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ToolName::ReadText => "read_text",
            ToolName::ZoomIn => "zoom_in",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "read_text" => Some(ToolName::ReadText),
            "zoom_in" => Some(ToolName::ZoomIn),
            _ => None,
        }
    }
}

/// A parsed expansion request: which page to expand, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool_name: ToolName,
    pub image_index: usize,
}

/// What an expansion returns to the reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpandKind {
    /// The exact source-text slice of the selected page.
    SourceText,
    /// OCR output over a high-resolution re-render of the selected page.
    OcrText,
    /// A high-resolution re-render of the selected page, as an image.
    ImageZoom,
}

impl ExpandKind {
    /// The system prompt the model sees for this expansion kind. Text-bearing
    /// kinds share the `read_text` contract; zoom uses `zoom_in`.
    pub fn system_prompt(&self) -> &'static str {
        match self {
            ExpandKind::SourceText | ExpandKind::OcrText => crate::prompts::READ_TEXT_SYSTEM_PROMPT,
            ExpandKind::ImageZoom => crate::prompts::ZOOM_IN_SYSTEM_PROMPT,
        }
    }
}

/// Knobs for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    /// Hard cap on model turns per episode.
    pub max_turns: u32,
    pub expand_kind: ExpandKind,
    /// Linear scale factor for zoom re-renders.
    pub zoom_scale: u32,
    /// Pixel bounds for zoom re-renders.
    pub min_pixels: u64,
    pub max_pixels: u64,
    pub temperature: f64,
    pub max_tokens_per_turn: u32,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_turns: 6,
            expand_kind: ExpandKind::SourceText,
            zoom_scale: 4,
            min_pixels: 1,
            max_pixels: 4_194_304,
            temperature: 0.0,
            max_tokens_per_turn: 2048,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_turns < 1 {
            return Err("max_turns must be at least 1".into());
        }
        if self.zoom_scale < 1 {
            return Err("zoom_scale must be at least 1".into());
        }
        if self.min_pixels > self.max_pixels {
            return Err("min_pixels exceeds max_pixels".into());
        }
        Ok(())
    }
}
