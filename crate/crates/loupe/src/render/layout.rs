//! Greedy word-wrap pagination.
//!
//! The layout walks the source text once, wrapping words at the content
//! width and stacking lines until the page's line budget is exhausted. Every
//! character of the source is attributed to exactly one page: a page's span
//! ends where the first character of the next page begins, so trailing
//! whitespace at a break belongs to the earlier page and the spans partition
//! `[0, char_count)` with no gaps.

use std::collections::HashMap;

use super::font::GlyphMetrics;
use crate::span::CharSpan;

#[derive(Debug, Clone)]
pub(crate) struct LayoutParams {
    pub content_width: f32,
    pub lines_per_page: usize,
    pub font_px: f32,
}

/// One glyph placed on a page.
#[derive(Debug, Clone)]
pub(crate) struct PlacedGlyph {
    pub ch: char,
    /// Pen x offset from the left content edge, in px.
    pub x: f32,
    /// Line number within the page, 0-based.
    pub line: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct PageLayout {
    pub span: CharSpan,
    pub glyphs: Vec<PlacedGlyph>,
}

struct Layouter<'a> {
    params: &'a LayoutParams,
    metrics: &'a dyn GlyphMetrics,
    advances: HashMap<char, f32>,
    pages: Vec<PageLayout>,
    current: Vec<PlacedGlyph>,
    page_start: usize,
    line: usize,
    pen: f32,
    newline_run: u32,
}

impl<'a> Layouter<'a> {
    fn advance(&mut self, ch: char) -> f32 {
        let params = self.params;
        let metrics = self.metrics;
        *self
            .advances
            .entry(ch)
            .or_insert_with(|| metrics.advance(ch, params.font_px))
    }

    fn break_line(&mut self) {
        self.line += 1;
        self.pen = 0.0;
    }

    fn newline(&mut self) {
        // Consecutive blank lines collapse to a single blank line: the first
        // newline ends the current line, the second yields one blank line,
        // further ones are absorbed.
        if self.newline_run < 2 {
            self.line += 1;
        }
        self.newline_run += 1;
        self.pen = 0.0;
    }

    fn place(&mut self, source_index: usize, ch: char) {
        let adv = self.advance(ch);
        if self.pen > 0.0 && self.pen + adv > self.params.content_width {
            self.break_line();
        }
        if self.line >= self.params.lines_per_page {
            if self.current.is_empty() {
                // Nothing printable landed on this page yet (leading blank
                // lines); reuse it from the top instead of emitting an empty
                // page.
                self.line = 0;
            } else {
                let glyphs = std::mem::take(&mut self.current);
                self.pages.push(PageLayout {
                    span: CharSpan::new(self.page_start, source_index),
                    glyphs,
                });
                self.page_start = source_index;
                self.line = 0;
            }
        }
        self.current.push(PlacedGlyph {
            ch,
            x: self.pen,
            line: self.line,
        });
        self.pen += adv;
    }

    fn finish(mut self, total_chars: usize) -> Vec<PageLayout> {
        if !self.current.is_empty() {
            self.pages.push(PageLayout {
                span: CharSpan::new(self.page_start, total_chars),
                glyphs: self.current,
            });
        } else if let Some(last) = self.pages.last_mut() {
            // Trailing whitespace after the final placed glyph belongs to the
            // last page so the spans cover the whole source.
            last.span.end = total_chars;
        } else if total_chars > 0 {
            // Whitespace-only source: one blank page spanning everything.
            self.pages.push(PageLayout {
                span: CharSpan::new(0, total_chars),
                glyphs: Vec::new(),
            });
        }
        self.pages
    }
}

pub(crate) fn paginate(
    text: &str,
    params: &LayoutParams,
    metrics: &dyn GlyphMetrics,
) -> Vec<PageLayout> {
    debug_assert!(params.lines_per_page >= 1);
    let chars: Vec<char> = text.chars().collect();
    let total = chars.len();
    let mut lay = Layouter {
        params,
        metrics,
        advances: HashMap::new(),
        pages: Vec::new(),
        current: Vec::new(),
        page_start: 0,
        line: 0,
        pen: 0.0,
        newline_run: 0,
    };

    let mut i = 0;
    while i < total {
        let ch = chars[i];
        if ch == '\n' {
            lay.newline();
            i += 1;
        } else if ch == '\r' {
            // Carriage returns are consumed silently; the following '\n'
            // (if any) carries the break.
            i += 1;
        } else if ch.is_whitespace() {
            lay.newline_run = 0;
            let adv = if ch == '\t' {
                lay.advance(' ')
            } else {
                lay.advance(ch)
            };
            lay.pen += adv;
            i += 1;
        } else {
            lay.newline_run = 0;
            // Measure the whole word, wrap once if it does not fit, then
            // place glyph by glyph; words wider than a full line hard-break
            // at character granularity.
            let word_end = {
                let mut j = i;
                while j < total && !chars[j].is_whitespace() {
                    j += 1;
                }
                j
            };
            let word_width: f32 = (i..word_end).map(|k| lay.advance(chars[k])).sum();
            if lay.pen > 0.0 && lay.pen + word_width > params.content_width {
                lay.break_line();
            }
            for (offset, &wch) in chars[i..word_end].iter().enumerate() {
                lay.place(i + offset, wch);
            }
            i = word_end;
        }
    }
    lay.finish(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fixed-advance metrics for layout tests: every glyph is `advance` px
    /// wide.
    pub(crate) struct FixedMetrics {
        pub advance: f32,
    }

    impl GlyphMetrics for FixedMetrics {
        fn advance(&self, _ch: char, _px: f32) -> f32 {
            self.advance
        }

        fn ascent(&self, px: f32) -> f32 {
            px * 0.8
        }

        fn rasterize(&self, _ch: char, _px: f32) -> super::super::font::RasterGlyph {
            super::super::font::RasterGlyph {
                width: self.advance as usize,
                height: 1,
                xmin: 0,
                ymin: 0,
                coverage: vec![255; self.advance as usize],
            }
        }
    }

    fn params(content_width: f32, lines: usize) -> LayoutParams {
        LayoutParams {
            content_width,
            lines_per_page: lines,
            font_px: 10.0,
        }
    }

    #[test]
    fn empty_text_yields_no_pages() {
        let m = FixedMetrics { advance: 5.0 };
        assert!(paginate("", &params(50.0, 4), &m).is_empty());
    }

    #[test]
    fn spans_partition_source() {
        let m = FixedMetrics { advance: 5.0 };
        let text = "one two three four five six seven eight nine ten";
        let pages = paginate(text, &params(30.0, 2), &m);
        assert!(pages.len() > 1);
        let mut cursor = 0;
        for page in &pages {
            assert_eq!(page.span.start, cursor);
            assert!(page.span.end > page.span.start);
            cursor = page.span.end;
        }
        assert_eq!(cursor, text.chars().count());
    }

    #[test]
    fn overlong_word_hard_breaks() {
        let m = FixedMetrics { advance: 5.0 };
        // 20 chars at 5px each on a 30px line: 6 chars per line, 4 lines.
        let pages = paginate(&"x".repeat(20), &params(30.0, 10), &m);
        assert_eq!(pages.len(), 1);
        let max_line = pages[0].glyphs.iter().map(|g| g.line).max().unwrap();
        assert_eq!(max_line, 3);
    }

    #[test]
    fn blank_lines_collapse() {
        let m = FixedMetrics { advance: 5.0 };
        let one_blank = paginate("a\n\nb", &params(50.0, 20), &m);
        let many_blank = paginate("a\n\n\n\n\nb", &params(50.0, 20), &m);
        let line_of = |pages: &[PageLayout]| pages[0].glyphs.last().unwrap().line;
        assert_eq!(line_of(&one_blank), 2);
        assert_eq!(line_of(&many_blank), 2);
    }

    #[test]
    fn whitespace_only_text_is_one_blank_page() {
        let m = FixedMetrics { advance: 5.0 };
        let pages = paginate("   \n\n  ", &params(50.0, 4), &m);
        assert_eq!(pages.len(), 1);
        assert!(pages[0].glyphs.is_empty());
        assert_eq!(pages[0].span, CharSpan::new(0, 7));
    }

    #[test]
    fn trailing_whitespace_joins_last_page() {
        let m = FixedMetrics { advance: 5.0 };
        let text = "word   \n\n  ";
        let pages = paginate(text, &params(50.0, 4), &m);
        assert_eq!(pages.len(), 1);
        assert_eq!(pages[0].span, CharSpan::new(0, text.chars().count()));
    }
}
