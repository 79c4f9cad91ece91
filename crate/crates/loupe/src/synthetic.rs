//! Deterministic pseudo-English corpus generation for tests, demos, and
//! hermetic pipeline runs.
//!
//! Word lengths follow ordinary English, so rendered page capacities match
//! real prose. Everything is a pure function of the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::corpus::Sample;
use crate::span::{char_count, CharSpan};

/// Common English words with a natural length distribution.
const WORDS: &[&str] = &[
    "the",
    "of",
    "and",
    "a",
    "to",
    "in",
    "is",
    "was",
    "he",
    "for",
    "it",
    "with",
    "as",
    "his",
    "on",
    "be",
    "at",
    "by",
    "had",
    "not",
    "are",
    "but",
    "from",
    "or",
    "have",
    "an",
    "they",
    "which",
    "one",
    "you",
    "were",
    "her",
    "all",
    "she",
    "there",
    "would",
    "their",
    "we",
    "him",
    "been",
    "has",
    "when",
    "who",
    "will",
    "more",
    "no",
    "if",
    "out",
    "so",
    "said",
    "what",
    "up",
    "its",
    "about",
    "into",
    "than",
    "them",
    "can",
    "only",
    "other",
    "new",
    "some",
    "could",
    "time",
    "these",
    "two",
    "may",
    "then",
    "do",
    "first",
    "any",
    "my",
    "now",
    "such",
    "like",
    "our",
    "over",
    "man",
    "me",
    "even",
    "most",
    "made",
    "after",
    "also",
    "did",
    "many",
    "before",
    "must",
    "through",
    "back",
    "years",
    "where",
    "much",
    "your",
    "way",
    "well",
    "down",
    "should",
    "because",
    "each",
    "just",
    "those",
    "people",
    "how",
    "too",
    "little",
    "state",
    "good",
    "very",
    "make",
    "world",
    "still",
    "own",
    "see",
    "men",
    "work",
    "long",
    "get",
    "here",
    "between",
    "both",
    "life",
    "being",
    "under",
    "never",
    "day",
    "same",
    "another",
    "know",
    "while",
    "last",
    "might",
    "great",
    "old",
    "year",
    "off",
    "come",
    "since",
    "against",
    "go",
    "came",
    "right",
    "used",
    "take",
    "three",
    "states",
    "himself",
    "few",
    "house",
    "use",
    "during",
    "without",
    "again",
    "place",
    "around",
    "however",
    "home",
    "small",
    "found",
    "thought",
    "went",
    "say",
    "part",
    "once",
    "general",
    "high",
    "upon",
    "school",
    "every",
    "country",
    "always",
    "city",
    "system",
    "given",
    "group",
    "often",
    "important",
    "until",
    "number",
    "public",
    "large",
    "toward",
    "different",
    "water",
    "course",
    "history",
    "looked",
    "early",
    "words",
    "morning",
    "example",
    "between",
    "present",
    "perhaps",
    "century",
    "national",
    "several",
    "itself",
];

/// Sentences per paragraph range and words per sentence range.
const SENTENCE_WORDS: std::ops::Range<usize> = 6..15;
const PARAGRAPH_SENTENCES: std::ops::Range<usize> = 10..19;

fn sentence(rng: &mut ChaCha12Rng) -> String {
    let n = rng.random_range(SENTENCE_WORDS);
    let mut s = String::new();
    for i in 0..n {
        let word = WORDS[rng.random_range(0..WORDS.len())];
        if i == 0 {
            let mut chars = word.chars();
            if let Some(first) = chars.next() {
                s.extend(first.to_uppercase());
                s.push_str(chars.as_str());
            }
        } else {
            s.push(' ');
            s.push_str(word);
        }
    }
    s.push('.');
    s
}

/// Deterministic prose of exactly `chars` characters (truncated at a char
/// boundary).
pub fn pseudo_english(seed: u64, chars: usize) -> String {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = String::new();
    let mut count = 0usize;
    while count < chars {
        let sentences = rng.random_range(PARAGRAPH_SENTENCES);
        for i in 0..sentences {
            if count >= chars {
                break;
            }
            let s = sentence(&mut rng);
            if i > 0 {
                out.push(' ');
                count += 1;
            }
            count += char_count(&s);
            out.push_str(&s);
        }
        if count < chars {
            out.push_str("\n\n");
            count += 2;
        }
    }
    out.chars().take(chars).collect()
}

/// Deterministic distractor passages, `passage_chars` characters each.
pub fn distractor_pool(seed: u64, passages: usize, passage_chars: usize) -> Vec<String> {
    (0..passages)
        .map(|i| {
            pseudo_english(
                seed.wrapping_add(0x9e3779b97f4a7c15)
                    .wrapping_mul(i as u64 + 1),
                passage_chars,
            )
        })
        .collect()
}

/// Marker answers are uppercase alphanumeric codes that cannot collide with
/// the lowercase word list.
fn marker_code(rng: &mut ChaCha12Rng) -> String {
    const ALPHABET: &[u8] = b"BCDFGHJKLMNPQRSTVWXZ";
    let mut code = String::from("Q");
    for _ in 0..6 {
        code.push(ALPHABET[rng.random_range(0..ALPHABET.len())] as char);
    }
    code
}

/// A generated QA sample whose gold answer is a unique planted marker code.
///
/// The marker sentence "The secret code is {code}." appears `hops` times at
/// seeded positions; `answer_spans` point exactly at each code occurrence.
pub fn sample_with_planted_answer(seed: u64, id: &str, doc_chars: usize, hops: usize) -> Sample {
    assert!(hops >= 1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let base = pseudo_english(seed.wrapping_add(1), doc_chars);
    let code = marker_code(&mut rng);

    // Pick distinct insertion points at space boundaries, then splice the
    // marker sentences in left to right, tracking the final spans.
    let space_positions: Vec<usize> = base
        .chars()
        .enumerate()
        .filter(|(_, ch)| *ch == ' ')
        .map(|(i, _)| i)
        .collect();
    let mut cuts: Vec<usize> = (0..hops)
        .map(|_| space_positions[rng.random_range(0..space_positions.len())])
        .collect();
    cuts.sort_unstable();
    cuts.dedup();
    while cuts.len() < hops {
        let extra = space_positions[rng.random_range(0..space_positions.len())];
        if !cuts.contains(&extra) {
            cuts.push(extra);
            cuts.sort_unstable();
        }
    }

    let marker_prefix = " The secret code is ";
    let marker_suffix = ".";
    let base_chars: Vec<char> = base.chars().collect();
    let mut document = String::new();
    let mut spans = Vec::with_capacity(hops);
    let mut emitted = 0usize; // chars of `document` emitted so far
    let mut consumed = 0usize; // chars of `base` consumed so far
    for cut in &cuts {
        document.extend(&base_chars[consumed..*cut]);
        emitted += cut - consumed;
        consumed = *cut;
        document.push_str(marker_prefix);
        emitted += char_count(marker_prefix);
        spans.push(CharSpan::new(emitted, emitted + char_count(&code)));
        document.push_str(&code);
        emitted += char_count(&code);
        document.push_str(marker_suffix);
        emitted += char_count(marker_suffix);
    }
    document.extend(&base_chars[consumed..]);

    let sample = Sample {
        id: id.to_string(),
        dataset: None,
        question: format!("What is the secret code mentioned {hops} time(s) in the document?"),
        gold_answers: vec![code],
        document,
        answer_spans: spans,
        hop_count: hops as u32,
    };
    debug_assert!(sample.validate().is_ok());
    sample
}
