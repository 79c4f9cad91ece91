//! Mapping character-level answer spans through pagination to evidence
//! pages.

use std::collections::BTreeSet;

use crate::render::PageSet;
use crate::span::CharSpan;

use super::{CorpusError, EvidenceMap};

/// Returns every page whose character span intersects any answer span.
pub fn map_spans_to_pages(
    sample_id: &str,
    spans: &[CharSpan],
    pages: &PageSet,
) -> Result<EvidenceMap, CorpusError> {
    let len = pages.source_char_count;
    let mut evidence_pages = BTreeSet::new();
    for span in spans {
        if span.is_empty() || span.end > len {
            return Err(CorpusError::SpanOutOfRange { span: *span, len });
        }
        for page in &pages.pages {
            if page.char_span.intersects(span) {
                evidence_pages.insert(page.index);
            }
        }
    }
    Ok(EvidenceMap {
        sample_id: sample_id.to_string(),
        evidence_pages,
    })
}
