//! Conversation export: multi-turn records with interleaved image
//! placeholders and per-message loss flags.
//!
//! A message with `loss: true` was produced by the model and trains the
//! loss; everything else (system, user, tool responses) is context only and
//! masked.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::ledger::TokenLedger;
use crate::protocol::{EpisodeStatus, ExpandKind, Trajectory};

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationMessage {
    pub role: String,
    pub content: String,
    /// True for model-produced messages that contribute to the training
    /// loss; false for context-only messages.
    pub loss: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// Page image files referenced by `<image>` placeholders, in order.
    pub images: Vec<String>,
    pub messages: Vec<ConversationMessage>,
    pub status: EpisodeStatus,
    pub ledger: TokenLedger,
}

/// Builds the exportable conversation for one trajectory: system, user
/// (image placeholders plus question), then alternating assistant and tool
/// messages.
pub fn conversation_from_trajectory(
    trajectory: &Trajectory,
    question: &str,
    expand_kind: ExpandKind,
    dataset: Option<String>,
    image_files: Vec<String>,
) -> Conversation {
    let mut messages = Vec::with_capacity(2 + 2 * trajectory.turns.len());
    messages.push(ConversationMessage {
        role: "system".into(),
        content: expand_kind.system_prompt().to_string(),
        loss: false,
    });
    let placeholders = "<image>\n".repeat(image_files.len());
    messages.push(ConversationMessage {
        role: "user".into(),
        content: format!("{placeholders}{question}"),
        loss: false,
    });
    for turn in &trajectory.turns {
        messages.push(ConversationMessage {
            role: "assistant".into(),
            content: turn.raw_reply.clone(),
            loss: true,
        });
        if let Some(response) = &turn.tool_response {
            let content = response
                .text
                .clone()
                .unwrap_or_else(|| "<image>".to_string());
            messages.push(ConversationMessage {
                role: "tool".into(),
                content,
                loss: false,
            });
        }
    }
    Conversation {
        id: trajectory.sample_id.clone(),
        dataset,
        images: image_files,
        messages,
        status: trajectory.status,
        ledger: trajectory.ledger.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportReport {
    pub written: u64,
    pub skipped_protocol_error: u64,
}

/// Writes one conversation per line. Conversations whose episode ended in a
/// protocol error are excluded and counted in the report.
pub fn export_sft_dataset(
    conversations: &[Conversation],
    mut writer: impl Write,
) -> Result<ExportReport, CorpusError> {
    let mut report = ExportReport {
        written: 0,
        skipped_protocol_error: 0,
    };
    for conv in conversations {
        if conv.status == EpisodeStatus::ProtocolError {
            report.skipped_protocol_error += 1;
            continue;
        }
        let line = serde_json::to_string(conv).expect("conversation serializes");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
        report.written += 1;
    }
    Ok(report)
}

/// Reads conversations back from a JSONL reader.
pub fn import_sft_dataset(reader: impl BufRead) -> Result<Vec<Conversation>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let conv: Conversation =
            serde_json::from_str(&line).map_err(|source| CorpusError::Json {
                line: i + 1,
                source,
            })?;
        out.push(conv);
    }
    Ok(out)
}
