//! Half-open character intervals into a source text.
//!
//! All spans in this crate index Unicode scalar values (Rust `char`s), not
//! bytes, so they survive serialization across languages that count code
//! points.

use serde::{Deserialize, Serialize};

/// A half-open interval `[start, end)` of character indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when the two half-open intervals share at least one index.
    pub fn intersects(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains_index(&self, index: usize) -> bool {
        index >= self.start && index < self.end
    }

    /// The same interval shifted right by `offset` characters.
    pub fn shifted(&self, offset: usize) -> CharSpan {
        CharSpan::new(self.start + offset, self.end + offset)
    }

    /// Extracts the spanned characters from `text`. Indices past the end of
    /// the text are clamped.
    pub fn slice(&self, text: &str) -> String {
        if self.is_empty() {
            return String::new();
        }
        text.chars().skip(self.start).take(self.len()).collect()
    }
}

/// Number of Unicode scalar values in `text`.
pub fn char_count(text: &str) -> usize {
    text.chars().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intersects_half_open() {
        let a = CharSpan::new(0, 5);
        let b = CharSpan::new(5, 10);
        assert!(!a.intersects(&b));
        assert!(a.intersects(&CharSpan::new(4, 6)));
        assert!(CharSpan::new(3, 4).intersects(&a));
    }

    #[test]
    fn slice_is_char_based() {
        let text = "héllo wörld";
        assert_eq!(CharSpan::new(1, 5).slice(text), "éllo");
        assert_eq!(CharSpan::new(6, 11).slice(text), "wörld");
    }

    #[test]
    fn slice_clamps_out_of_range() {
        assert_eq!(CharSpan::new(3, 99).slice("abcdef"), "def");
        assert_eq!(CharSpan::new(7, 9).slice("abc"), "");
    }
}
