//! Glyph metrics and rasterization behind a trait, so layout logic never
//! depends on a particular font backend.

use std::path::Path;
use std::sync::Arc;

use super::RenderError;

/// A rasterized glyph: an 8-bit coverage bitmap plus placement offsets.
///
/// `xmin` is the left side bearing from the pen position; `ymin` is the
/// offset of the bitmap's bottom edge from the baseline (negative for
/// descenders). Rows are top-down.
#[derive(Debug, Clone)]
pub struct RasterGlyph {
    pub width: usize,
    pub height: usize,
    pub xmin: i32,
    pub ymin: i32,
    pub coverage: Vec<u8>,
}

/// Source of glyph geometry for one font face.
///
/// Implementations must be deterministic: identical `(ch, px)` inputs yield
/// identical advances and bitmaps. Characters without a glyph fall back to
/// the face's substitute glyph instead of failing.
pub trait GlyphMetrics: Send + Sync {
    /// Advance width of `ch` in pixels at font size `px`.
    fn advance(&self, ch: char, px: f32) -> f32;

    /// Distance from the top of a line box to the baseline, in pixels.
    fn ascent(&self, px: f32) -> f32;

    /// Coverage bitmap for `ch` at font size `px`.
    fn rasterize(&self, ch: char, px: f32) -> RasterGlyph;
}

/// TrueType-backed metrics loaded from a font file.
#[derive(Clone)]
pub struct FontMetrics {
    font: Arc<fontdue::Font>,
}

impl FontMetrics {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RenderError> {
        let bytes = std::fs::read(path.as_ref())
            .map_err(|e| RenderError::FontLoad(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RenderError> {
        let font = fontdue::Font::from_bytes(bytes, fontdue::FontSettings::default())
            .map_err(|e| RenderError::FontLoad(e.to_string()))?;
        Ok(Self {
            font: Arc::new(font),
        })
    }

    /// Glyph index for `ch`; 0 is the face's substitute glyph.
    fn glyph_index(&self, ch: char) -> u16 {
        self.font.lookup_glyph_index(ch)
    }
}

impl GlyphMetrics for FontMetrics {
    fn advance(&self, ch: char, px: f32) -> f32 {
        let index = self.glyph_index(ch);
        self.font.metrics_indexed(index, px).advance_width
    }

    fn ascent(&self, px: f32) -> f32 {
        self.font
            .horizontal_line_metrics(px)
            .map(|m| m.ascent)
            .unwrap_or(px)
    }

    fn rasterize(&self, ch: char, px: f32) -> RasterGlyph {
        let index = self.glyph_index(ch);
        let (metrics, coverage) = self.font.rasterize_indexed(index, px);
        RasterGlyph {
            width: metrics.width,
            height: metrics.height,
            xmin: metrics.xmin,
            ymin: metrics.ymin,
            coverage,
        }
    }
}
