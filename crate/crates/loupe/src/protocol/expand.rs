//! The expansion tool: re-presents one selected page in uncompressed form.
//!
//! Expansion never adds information beyond the source document; it returns
//! the page's exact text slice, an OCR pass over a high-resolution
//! re-render, or the high-resolution image itself.

use crate::ledger::{ExpansionKind, TokenCounter};
use crate::prompts::tool_response_text;
use crate::render::{
    compute_visual_tokens, render_text_block, EncoderProfile, GlyphMetrics, PageSet,
};

use super::endpoint::{EndpointError, OcrEndpoint};
use super::{EpisodeConfig, ExpandKind, ToolCall};

/// Payload returned to the reader.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpandPayload {
    Text(String),
    ImagePng {
        png: Vec<u8>,
        width: u32,
        height: u32,
    },
}

/// A successful expansion with its token cost under the ledger rules: text
/// payloads cost their token count, image payloads cost their visual tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandResponse {
    pub kind: ExpansionKind,
    pub payload: ExpandPayload,
    pub token_cost: u64,
}

/// Result of one expansion attempt. Out-of-range indices are not errors:
/// they consume the turn and return an explanatory tool message while the
/// ledger stays unchanged.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpandOutcome {
    Expanded(ExpandResponse),
    Rejected { message: String },
}

/// Executes expansions against one document's pages.
pub struct Expander<'a> {
    pub pages: &'a PageSet,
    pub source_text: &'a str,
    pub metrics: &'a dyn GlyphMetrics,
    pub counter: &'a dyn TokenCounter,
    pub ocr: Option<&'a dyn OcrEndpoint>,
    pub config: &'a EpisodeConfig,
    pub profile: EncoderProfile,
}

impl<'a> Expander<'a> {
    pub fn expand(&self, call: &ToolCall) -> Result<ExpandOutcome, EndpointError> {
        let k = call.image_index;
        if k < 1 || k > self.pages.page_count() {
            return Ok(ExpandOutcome::Rejected {
                message: "invalid image index".to_string(),
            });
        }
        let slice = self.pages.pages[k - 1].char_span.slice(self.source_text);
        match self.config.expand_kind {
            ExpandKind::SourceText => {
                let text = tool_response_text(k, &slice);
                let token_cost = self.counter.count(&text).max(1);
                Ok(ExpandOutcome::Expanded(ExpandResponse {
                    kind: ExpansionKind::Text,
                    payload: ExpandPayload::Text(text),
                    token_cost,
                }))
            }
            ExpandKind::OcrText => {
                let ocr = self.ocr.ok_or_else(|| {
                    EndpointError::Misconfigured("ocr endpoint not configured".into())
                })?;
                let zoom = self.zoom_render(&slice)?;
                let png = crate::render::encode_page_png(&zoom.raster, zoom.width, zoom.height)
                    .map_err(|e| EndpointError::Misconfigured(e.to_string()))?;
                let extracted = ocr.extract(k, &png)?;
                let text = tool_response_text(k, &extracted);
                let token_cost = self.counter.count(&text).max(1);
                Ok(ExpandOutcome::Expanded(ExpandResponse {
                    kind: ExpansionKind::OcrText,
                    payload: ExpandPayload::Text(text),
                    token_cost,
                }))
            }
            ExpandKind::ImageZoom => {
                let zoom = self.zoom_render(&slice)?;
                let token_cost = compute_visual_tokens(zoom.width, zoom.height, &self.profile)
                    .map_err(|e| EndpointError::Misconfigured(e.to_string()))?
                    .max(1);
                let png = crate::render::encode_page_png(&zoom.raster, zoom.width, zoom.height)
                    .map_err(|e| EndpointError::Misconfigured(e.to_string()))?;
                Ok(ExpandOutcome::Expanded(ExpandResponse {
                    kind: ExpansionKind::Image,
                    payload: ExpandPayload::ImagePng {
                        png,
                        width: zoom.width,
                        height: zoom.height,
                    },
                    token_cost,
                }))
            }
        }
    }

    fn zoom_render(&self, slice: &str) -> Result<crate::render::ZoomRender, EndpointError> {
        render_text_block(
            slice,
            &self.pages.preset,
            self.metrics,
            self.config.zoom_scale,
            self.config.max_pixels,
        )
        .map_err(|e| EndpointError::Misconfigured(e.to_string()))
    }
}
