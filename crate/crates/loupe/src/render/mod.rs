//! Deterministic text-to-image compression.
//!
//! A [`RenderPreset`] fixes the page geometry (and therefore the compression
//! level); [`render_pages`] word-wraps a document into fixed-size grayscale
//! page images and records, for every page, the half-open character span of
//! the source text it carries. [`compute_visual_tokens`] maps page geometry
//! to the visual-token cost under a given [`EncoderProfile`].
//!
//! Everything here is a pure function of its inputs: identical
//! `(text, preset, metrics)` produce a bit-identical [`PageSet`].

mod font;
mod layout;
mod manifest;

pub use font::{FontMetrics, GlyphMetrics, RasterGlyph};
pub use manifest::{write_page_set, DocumentManifest, PageRecord};

/// Encodes one grayscale page raster as PNG bytes.
pub fn encode_page_png(raster: &[u8], width: u32, height: u32) -> Result<Vec<u8>, RenderError> {
    manifest::encode_png(raster, width, height)
}

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::{char_count, CharSpan};
use layout::{LayoutParams, PageLayout};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid image dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },
    #[error("invalid preset {name:?}: {reason}")]
    InvalidPreset { name: String, reason: String },
    #[error("failed to load font: {0}")]
    FontLoad(String),
    #[error("page {0} out of range")]
    PageOutOfRange(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("png encode failed: {0}")]
    Png(String),
}

/// Geometry and typography of one compression level.
///
/// `font_size` is in points rendered at 72 dpi, so one point is one pixel.
/// `nominal_tokens_per_page` is informational: the text-token capacity the
/// preset was designed around, used for documentation and summaries only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderPreset {
    pub name: String,
    pub page_width: u32,
    pub page_height: u32,
    pub font_size: f32,
    pub line_spacing: f32,
    pub margin: u32,
    pub nominal_tokens_per_page: u32,
}

impl RenderPreset {
    /// 5x compression: 256x284 px pages, 8 pt type.
    pub fn five_x() -> Self {
        Self {
            name: "5x".into(),
            page_width: 256,
            page_height: 284,
            font_size: 8.0,
            line_spacing: 1.15,
            margin: 7,
            nominal_tokens_per_page: 405,
        }
    }

    /// 10x compression: 192x252 px pages, 6 pt type.
    pub fn ten_x() -> Self {
        Self {
            name: "10x".into(),
            page_width: 192,
            page_height: 252,
            font_size: 6.0,
            line_spacing: 1.10,
            margin: 6,
            nominal_tokens_per_page: 540,
        }
    }

    /// 15x compression: 128x190 px pages, 5 pt type.
    pub fn fifteen_x() -> Self {
        Self {
            name: "15x".into(),
            page_width: 128,
            page_height: 190,
            font_size: 5.0,
            line_spacing: 1.05,
            margin: 5,
            nominal_tokens_per_page: 378,
        }
    }

    pub fn builtins() -> Vec<Self> {
        vec![Self::five_x(), Self::ten_x(), Self::fifteen_x()]
    }

    /// Looks up a built-in preset by name (`"5x"`, `"10x"`, `"15x"`).
    pub fn builtin(name: &str) -> Option<Self> {
        Self::builtins().into_iter().find(|p| p.name == name)
    }

    /// Checks the grid-alignment and printable-area constraints.
    ///
    /// Widths must be positive multiples of 32 so the 2x2-merged patch grid
    /// divides them exactly; heights must make the default-profile token
    /// count an exact integer. Margins must leave at least one line of
    /// printable area.
    pub fn validate(&self) -> Result<(), RenderError> {
        let fail = |reason: &str| {
            Err(RenderError::InvalidPreset {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.page_width == 0 || !self.page_width.is_multiple_of(32) {
            return fail("page_width must be a positive multiple of 32");
        }
        if self.page_height == 0 {
            return fail("page_height must be positive");
        }
        let patches = self.page_height.div_ceil(16) as u64 * self.page_width.div_ceil(16) as u64;
        if !patches.is_multiple_of(4) {
            return fail(
                "page_height is not grid-aligned: default-profile token count is fractional",
            );
        }
        let positive_finite = |v: f32| v.is_finite() && v > 0.0;
        if !positive_finite(self.font_size) || !positive_finite(self.line_spacing) {
            return fail("font_size and line_spacing must be positive");
        }
        if 2 * self.margin >= self.page_width || 2 * self.margin >= self.page_height {
            return fail("margins consume the whole page");
        }
        if self.lines_per_page() == 0 {
            return fail("no printable line fits between the margins");
        }
        Ok(())
    }

    pub fn content_width(&self) -> f32 {
        self.page_width.saturating_sub(2 * self.margin) as f32
    }

    pub fn content_height(&self) -> u32 {
        self.page_height.saturating_sub(2 * self.margin)
    }

    /// Vertical distance between successive baselines, in whole pixels.
    /// Fractional pitches are floored: glyphs sit on integer pixel rows.
    pub fn line_pitch(&self) -> u32 {
        ((self.font_size * self.line_spacing).floor() as u32).max(1)
    }

    pub fn lines_per_page(&self) -> usize {
        (self.content_height() / self.line_pitch()) as usize
    }

    fn layout_params(&self) -> LayoutParams {
        LayoutParams {
            content_width: self.content_width(),
            lines_per_page: self.lines_per_page(),
            font_px: self.font_size,
        }
    }
}

/// How a vision encoder turns page geometry into a token count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenRounding {
    /// `ceil(H/stride) * ceil(W/stride) / merge`, rounded up if not exact.
    CeilDivideThenMerge,
    /// Per-axis half-up rounding at the merged stride:
    /// `round(H/(stride*side)) * round(W/(stride*side))`.
    RoundPerAxis,
}

/// Tokenization parameters of a vision encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderProfile {
    pub grid_stride: u32,
    /// Number of patches merged into one token (4 means 2x2 spatial merge).
    pub merge_factor: u32,
    pub rounding: TokenRounding,
}

impl EncoderProfile {
    /// Stride-16 patches with 2x2 merge, ceiling division.
    pub fn default_vit() -> Self {
        Self {
            grid_stride: 16,
            merge_factor: 4,
            rounding: TokenRounding::CeilDivideThenMerge,
        }
    }

    /// Patch size 14 with 2x2 merge: effectively 28 px per merged token per
    /// axis, rounded half-up per axis.
    pub fn glm() -> Self {
        Self {
            grid_stride: 14,
            merge_factor: 4,
            rounding: TokenRounding::RoundPerAxis,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default_vit()),
            "glm" => Some(Self::glm()),
            _ => None,
        }
    }
}

impl Default for EncoderProfile {
    fn default() -> Self {
        Self::default_vit()
    }
}

/// Visual-token count for an image of `width` x `height` px under `profile`.
pub fn compute_visual_tokens(
    width: u32,
    height: u32,
    profile: &EncoderProfile,
) -> Result<u64, RenderError> {
    if width == 0 || height == 0 {
        return Err(RenderError::InvalidDimensions { width, height });
    }
    let stride = profile.grid_stride as u64;
    match profile.rounding {
        TokenRounding::CeilDivideThenMerge => {
            let patches = (height as u64).div_ceil(stride) * (width as u64).div_ceil(stride);
            Ok(patches.div_ceil(profile.merge_factor as u64))
        }
        TokenRounding::RoundPerAxis => {
            let side = (profile.merge_factor as f64).sqrt().round() as u64;
            let effective = (stride * side) as f64;
            let round_half_up = |v: f64| (v / effective + 0.5).floor() as u64;
            Ok(round_half_up(height as f64) * round_half_up(width as f64))
        }
    }
}

/// One rendered page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    /// 1-based position within the document.
    pub index: usize,
    pub width: u32,
    pub height: u32,
    /// Half-open character interval of the source text carried by this page.
    pub char_span: CharSpan,
    pub visual_tokens: u64,
    /// 8-bit grayscale, row-major, `width * height` bytes. White background,
    /// black glyphs. PNG encoding happens only at the persistence boundary.
    #[serde(skip)]
    pub raster: Vec<u8>,
}

/// An ordered set of rendered pages covering one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageSet {
    pub pages: Vec<Page>,
    pub preset: RenderPreset,
    pub source_char_count: usize,
}

impl PageSet {
    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    pub fn total_visual_tokens(&self) -> u64 {
        self.pages.iter().map(|p| p.visual_tokens).sum()
    }

    /// The source-text slice carried by 1-based page `index`.
    pub fn page_text(&self, source_text: &str, index: usize) -> Result<String, RenderError> {
        let page = self
            .pages
            .get(index.checked_sub(1).ok_or(RenderError::PageOutOfRange(0))?)
            .ok_or(RenderError::PageOutOfRange(index))?;
        Ok(page.char_span.slice(source_text))
    }
}

/// Renders `text` into fixed-geometry pages under the default encoder
/// profile.
pub fn render_pages(
    text: &str,
    preset: &RenderPreset,
    metrics: &dyn GlyphMetrics,
) -> Result<PageSet, RenderError> {
    render_pages_with(text, preset, metrics, &EncoderProfile::default_vit())
}

/// Renders `text` into fixed-geometry pages, counting visual tokens with
/// `profile`.
pub fn render_pages_with(
    text: &str,
    preset: &RenderPreset,
    metrics: &dyn GlyphMetrics,
    profile: &EncoderProfile,
) -> Result<PageSet, RenderError> {
    preset.validate()?;
    let layouts = layout::paginate(text, &preset.layout_params(), metrics);
    let visual_tokens = compute_visual_tokens(preset.page_width, preset.page_height, profile)?;
    let pages = layouts
        .iter()
        .enumerate()
        .map(|(i, layout)| Page {
            index: i + 1,
            width: preset.page_width,
            height: preset.page_height,
            char_span: layout.span,
            visual_tokens,
            raster: rasterize(layout, preset, metrics, 1),
        })
        .collect();
    Ok(PageSet {
        pages,
        preset: preset.clone(),
        source_char_count: char_count(text),
    })
}

/// A standalone render of one text block, used for high-resolution zoom
/// responses. Unlike document pages the height follows the content, so the
/// whole block always lands on a single image.
#[derive(Debug, Clone)]
pub struct ZoomRender {
    pub width: u32,
    pub height: u32,
    pub scale: u32,
    pub raster: Vec<u8>,
}

/// Re-renders `text` at `scale` times the preset geometry, shrinking the
/// scale as needed to stay within `max_pixels`.
pub fn render_text_block(
    text: &str,
    preset: &RenderPreset,
    metrics: &dyn GlyphMetrics,
    scale: u32,
    max_pixels: u64,
) -> Result<ZoomRender, RenderError> {
    preset.validate()?;
    let mut params = preset.layout_params();
    params.lines_per_page = usize::MAX / 2;
    let layouts = layout::paginate(text, &params, metrics);
    let lines_used = layouts
        .first()
        .and_then(|l| l.glyphs.iter().map(|g| g.line + 1).max())
        .unwrap_or(1);

    let base_w = preset.page_width as u64;
    let base_h = 2 * preset.margin as u64 + lines_used as u64 * preset.line_pitch() as u64;
    let mut s = scale.max(1) as u64;
    while s > 1 && (base_w * s) * (base_h * s) > max_pixels {
        s -= 1;
    }

    let blank = PageLayout {
        span: CharSpan::new(0, 0),
        glyphs: Vec::new(),
    };
    let layout = layouts.first().unwrap_or(&blank);
    let width = (base_w * s) as u32;
    let height = (base_h * s) as u32;
    let raster = rasterize_block(layout, preset, metrics, s as u32, width, height);
    Ok(ZoomRender {
        width,
        height,
        scale: s as u32,
        raster,
    })
}

fn rasterize(
    layout: &PageLayout,
    preset: &RenderPreset,
    metrics: &dyn GlyphMetrics,
    scale: u32,
) -> Vec<u8> {
    rasterize_block(
        layout,
        preset,
        metrics,
        scale,
        preset.page_width * scale,
        preset.page_height * scale,
    )
}

fn rasterize_block(
    layout: &PageLayout,
    preset: &RenderPreset,
    metrics: &dyn GlyphMetrics,
    scale: u32,
    width: u32,
    height: u32,
) -> Vec<u8> {
    let mut buf = vec![255u8; width as usize * height as usize];
    let font_px = preset.font_size * scale as f32;
    let ascent = metrics.ascent(font_px).round() as i64;
    let margin = (preset.margin * scale) as i64;
    let pitch = (preset.line_pitch() * scale) as i64;

    let mut cache: std::collections::HashMap<char, RasterGlyph> = std::collections::HashMap::new();
    for glyph in &layout.glyphs {
        let raster = cache
            .entry(glyph.ch)
            .or_insert_with(|| metrics.rasterize(glyph.ch, font_px));
        let baseline = margin + glyph.line as i64 * pitch + ascent;
        let left = margin + (glyph.x * scale as f32).round() as i64 + raster.xmin as i64;
        let top = baseline - (raster.height as i64 + raster.ymin as i64);
        blit(&mut buf, width, height, raster, left, top);
    }
    buf
}

fn blit(buf: &mut [u8], width: u32, height: u32, glyph: &RasterGlyph, left: i64, top: i64) {
    for row in 0..glyph.height {
        let y = top + row as i64;
        if y < 0 || y >= height as i64 {
            continue;
        }
        for col in 0..glyph.width {
            let x = left + col as i64;
            if x < 0 || x >= width as i64 {
                continue;
            }
            let ink = 255 - glyph.coverage[row * glyph.width + col];
            let dst = &mut buf[y as usize * width as usize + x as usize];
            // Darkest wins where glyph boxes overlap.
            if ink < *dst {
                *dst = ink;
            }
        }
    }
}

/// English letter frequencies (percent among letters) used by
/// [`page_capacity_estimate`]'s reference character distribution.
const LETTER_FREQS: &[(char, f32)] = &[
    ('e', 12.70),
    ('t', 9.06),
    ('a', 8.17),
    ('o', 7.51),
    ('i', 6.97),
    ('n', 6.75),
    ('s', 6.33),
    ('h', 6.09),
    ('r', 5.99),
    ('d', 4.25),
    ('l', 4.03),
    ('c', 2.78),
    ('u', 2.76),
    ('m', 2.41),
    ('w', 2.36),
    ('f', 2.23),
    ('g', 2.02),
    ('y', 1.97),
    ('p', 1.93),
    ('b', 1.49),
    ('v', 0.98),
    ('k', 0.77),
    ('j', 0.15),
    ('x', 0.15),
    ('q', 0.10),
    ('z', 0.07),
];

/// Fraction of characters in running prose that are word separators.
const SPACE_SHARE: f32 = 0.18;

/// Expected character capacity of one page: line count times the content
/// width divided by the mean glyph advance over an English-like reference
/// distribution. Degenerate presets (no printable area) yield 0.
pub fn page_capacity_estimate(preset: &RenderPreset, metrics: &dyn GlyphMetrics) -> f64 {
    if 2 * preset.margin >= preset.page_width || 2 * preset.margin >= preset.page_height {
        return 0.0;
    }
    let lines = preset.lines_per_page();
    if lines == 0 {
        return 0.0;
    }
    let total: f32 = LETTER_FREQS.iter().map(|&(_, f)| f).sum();
    let letter_mean: f32 = LETTER_FREQS
        .iter()
        .map(|&(ch, f)| f * metrics.advance(ch, preset.font_size))
        .sum::<f32>()
        / total;
    let mean =
        (1.0 - SPACE_SHARE) * letter_mean + SPACE_SHARE * metrics.advance(' ', preset.font_size);
    if mean <= 0.0 {
        return 0.0;
    }
    lines as f64 * (preset.content_width() / mean) as f64
}
