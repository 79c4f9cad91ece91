//! Dataset construction: evidence tracking through pagination, distractor
//! padding, hardness filtering, synthetic-trace requests, and loss-mask
//! annotated conversation export.

mod distractor;
mod evidence;
mod export;
mod hardness;
mod synthesis;

pub use distractor::{pad_with_distractors, PadOutcome};
pub use evidence::map_spans_to_pages;
pub use export::{
    conversation_from_trajectory, export_sft_dataset, import_sft_dataset, Conversation,
    ConversationMessage, ExportReport,
};
pub use hardness::{
    classify_hardness, split_sft_rl, ClassifiedSample, FilterReport, Hardness, SftRlSplit,
};
pub use synthesis::{
    assemble_synthetic_trajectory, build_synthesis_request, validate_synthesis_reply,
    SynthesisRequest,
};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::CharSpan;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("span {span:?} out of range for document of {len} chars")]
    SpanOutOfRange { span: CharSpan, len: usize },
    #[error("invalid sample {id}: {reason}")]
    InvalidSample { id: String, reason: String },
    #[error("target token range {lo}..={hi} outside the supported 3000..=32000")]
    InvalidTargetRange { lo: u64, hi: u64 },
    #[error("distractor pool is empty")]
    EmptyPool,
    #[error("empty evidence set for sample {0}")]
    EmptyEvidence(String),
    #[error("synthesis reply rejected: {0}")]
    SynthesisRejected(String),
    #[error(transparent)]
    Render(#[from] crate::render::RenderError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("jsonl decode error at line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
}

/// One QA sample: question, gold answers, document, and character-level
/// answer spans into the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub question: String,
    #[serde(rename = "answers")]
    pub gold_answers: Vec<String>,
    pub document: String,
    #[serde(rename = "spans", default)]
    pub answer_spans: Vec<CharSpan>,
    #[serde(default = "default_hop_count")]
    pub hop_count: u32,
}

fn default_hop_count() -> u32 {
    1
}

impl Sample {
    /// Checks the structural invariants: positive hop count, spans in range,
    /// and each span's slice containing a gold answer (case-normalized).
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.hop_count < 1 {
            return Err(CorpusError::InvalidSample {
                id: self.id.clone(),
                reason: "hop_count must be at least 1".into(),
            });
        }
        let len = crate::span::char_count(&self.document);
        for span in &self.answer_spans {
            if span.is_empty() || span.end > len {
                return Err(CorpusError::SpanOutOfRange { span: *span, len });
            }
            let slice = span.slice(&self.document).to_lowercase();
            if !self
                .gold_answers
                .iter()
                .any(|a| slice.contains(&a.to_lowercase()))
            {
                return Err(CorpusError::InvalidSample {
                    id: self.id.clone(),
                    reason: format!("span {span:?} does not contain a gold answer"),
                });
            }
        }
        Ok(())
    }
}

/// Ground-truth evidence pages for one sample: every page whose character
/// span intersects an answer span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceMap {
    pub sample_id: String,
    pub evidence_pages: BTreeSet<usize>,
}

/// Reads one sample per line from a JSONL reader.
pub fn read_samples_jsonl(reader: impl std::io::BufRead) -> Result<Vec<Sample>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: Sample = serde_json::from_str(&line).map_err(|source| CorpusError::Json {
            line: i + 1,
            source,
        })?;
        out.push(sample);
    }
    Ok(out)
}
