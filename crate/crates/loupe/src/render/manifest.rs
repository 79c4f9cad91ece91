//! Persistence boundary for rendered documents: one PNG per page plus a JSON
//! sidecar manifest describing the geometry, spans, and token counts.

use std::fs;
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use serde::{Deserialize, Serialize};

use super::{PageSet, RenderError, RenderPreset};
use crate::span::CharSpan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRecord {
    pub index: usize,
    pub file: String,
    pub width: u32,
    pub height: u32,
    pub char_span: CharSpan,
    pub visual_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentManifest {
    pub doc_id: String,
    pub preset: RenderPreset,
    pub source_char_count: usize,
    /// Source token count under the pipeline's tokenizer, when known.
    pub source_tokens: Option<u64>,
    pub total_visual_tokens: u64,
    /// Input compression rate `source_tokens / total_visual_tokens`.
    pub icr: Option<f64>,
    pub pages: Vec<PageRecord>,
}

/// Encodes one grayscale raster as PNG bytes.
pub(crate) fn encode_png(raster: &[u8], width: u32, height: u32) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(raster, width, height, ExtendedColorType::L8)
        .map_err(|e| RenderError::Png(e.to_string()))?;
    Ok(out)
}

/// Writes `{out_dir}/{doc_id}/page_{k:04}.png` for every page plus
/// `{out_dir}/{doc_id}/manifest.json`, and returns the manifest.
pub fn write_page_set(
    out_dir: &Path,
    doc_id: &str,
    page_set: &PageSet,
    source_tokens: Option<u64>,
) -> Result<DocumentManifest, RenderError> {
    let doc_dir: PathBuf = out_dir.join(doc_id);
    fs::create_dir_all(&doc_dir)?;

    let mut pages = Vec::with_capacity(page_set.pages.len());
    for page in &page_set.pages {
        let file = format!("page_{:04}.png", page.index);
        let png = encode_png(&page.raster, page.width, page.height)?;
        fs::write(doc_dir.join(&file), png)?;
        pages.push(PageRecord {
            index: page.index,
            file,
            width: page.width,
            height: page.height,
            char_span: page.char_span,
            visual_tokens: page.visual_tokens,
        });
    }

    let total_visual_tokens = page_set.total_visual_tokens();
    let icr = source_tokens
        .and_then(|n| (total_visual_tokens > 0).then(|| n as f64 / total_visual_tokens as f64));
    let manifest = DocumentManifest {
        doc_id: doc_id.to_string(),
        preset: page_set.preset.clone(),
        source_char_count: page_set.source_char_count,
        source_tokens,
        total_visual_tokens,
        icr,
        pages,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(doc_dir.join("manifest.json"), json)?;
    Ok(manifest)
}
