//! Distractor padding: grow a gold document to a target token budget with
//! filler passages while keeping the answer spans valid.
//!
//! The gold document stays contiguous — passages are inserted around it, not
//! interleaved into it — so span tracking reduces to one offset.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::ledger::TokenCounter;
use crate::span::char_count;

use super::{CorpusError, Sample};

const PASSAGE_SEPARATOR: &str = "\n\n";

/// Result of a padding pass. `skipped` is the warning flag: the sample was
/// already above the target ceiling and came back unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct PadOutcome {
    pub sample: Sample,
    pub skipped: bool,
}

/// Pads `sample.document` with pool passages until its token count lands in
/// `target`, re-offsetting answer spans. Deterministic in `seed`.
pub fn pad_with_distractors(
    sample: &Sample,
    pool: &[String],
    target: RangeInclusive<u64>,
    counter: &dyn TokenCounter,
    seed: u64,
) -> Result<PadOutcome, CorpusError> {
    let (lo, hi) = (*target.start(), *target.end());
    if lo < 3_000 || hi > 32_000 || lo > hi {
        return Err(CorpusError::InvalidTargetRange { lo, hi });
    }
    if pool.is_empty() {
        return Err(CorpusError::EmptyPool);
    }

    let gold_tokens = counter.count(&sample.document);
    if gold_tokens > hi {
        return Ok(PadOutcome {
            sample: sample.clone(),
            skipped: true,
        });
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut before: Vec<String> = Vec::new();
    let mut after: Vec<String> = Vec::new();

    let assemble = |before: &[String], after: &[String]| -> (String, usize) {
        let mut doc = String::new();
        for passage in before {
            doc.push_str(passage);
            doc.push_str(PASSAGE_SEPARATOR);
        }
        let gold_offset = char_count(&doc);
        doc.push_str(&sample.document);
        for passage in after {
            doc.push_str(PASSAGE_SEPARATOR);
            doc.push_str(passage);
        }
        (doc, gold_offset)
    };

    let mut total = gold_tokens;
    while total < lo {
        let passage = pool[rng.random_range(0..pool.len())].clone();
        if rng.random_bool(0.5) {
            before.push(passage);
        } else {
            after.push(passage);
        }
        total = counter.count(&assemble(&before, &after).0);
    }

    // Overshot the ceiling: trim filler passages (never the gold document)
    // until the total fits. Each pass strictly shrinks one passage, so this
    // terminates; with all filler gone the gold alone is <= hi by the early
    // return above.
    while total > hi {
        let target = after
            .iter_mut()
            .rev()
            .chain(before.iter_mut().rev())
            .find(|p| !p.is_empty());
        match target {
            Some(passage) => {
                let keep = (char_count(passage) * 9) / 10;
                *passage = passage.chars().take(keep).collect();
            }
            None => break,
        }
        total = counter.count(&assemble(&before, &after).0);
    }

    let (document, gold_offset) = assemble(&before, &after);
    let answer_spans = sample
        .answer_spans
        .iter()
        .map(|s| s.shifted(gold_offset))
        .collect();
    let padded = Sample {
        document,
        answer_spans,
        ..sample.clone()
    };
    padded.validate()?;
    Ok(PadOutcome {
        sample: padded,
        skipped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::CharEstimator;
    use crate::span::CharSpan;

    fn gold_sample(doc: String, answer: &str) -> Sample {
        let pos = doc.to_lowercase().find(&answer.to_lowercase()).unwrap();
        let start = doc[..pos].chars().count();
        let end = start + answer.chars().count();
        Sample {
            id: "g".into(),
            dataset: None,
            question: "where is it".into(),
            gold_answers: vec![answer.into()],
            document: doc,
            answer_spans: vec![CharSpan::new(start, end)],
            hop_count: 1,
        }
    }

    fn pool() -> Vec<String> {
        (0..8)
            .map(|i| {
                format!("filler passage number {i} with some ordinary words in it. ").repeat(20)
            })
            .collect()
    }

    #[test]
    fn pads_small_doc_into_range_and_keeps_spans_valid() {
        // ~1000 tokens of gold under the chars/4 estimator.
        let doc = format!(
            "{} The marker answer is XKCDQ. {}",
            "lead text. ".repeat(150),
            "tail text. ".repeat(200)
        );
        let sample = gold_sample(doc, "XKCDQ");
        let counter = CharEstimator;
        let out = pad_with_distractors(&sample, &pool(), 3_000..=32_000, &counter, 7).unwrap();
        assert!(!out.skipped);
        let total = counter.count(&out.sample.document);
        assert!((3_000..=32_000).contains(&total), "total {total}");
        out.sample.validate().unwrap();
        // Re-search oracle: the gold answer is still at the recorded span.
        let slice = out.sample.answer_spans[0].slice(&out.sample.document);
        assert!(slice.to_lowercase().contains("xkcdq"));
    }

    #[test]
    fn over_budget_sample_returns_unchanged_with_warning() {
        let doc = format!("The marker is XKCDQ. {}", "word ".repeat(140_000));
        let sample = gold_sample(doc, "XKCDQ");
        let counter = CharEstimator;
        let out = pad_with_distractors(&sample, &pool(), 3_000..=32_000, &counter, 7).unwrap();
        assert!(out.skipped);
        assert_eq!(out.sample, sample);
    }

    #[test]
    fn same_seed_is_deterministic() {
        let doc = format!("Marker XKCDQ here. {}", "base text. ".repeat(100));
        let sample = gold_sample(doc, "XKCDQ");
        let counter = CharEstimator;
        let a = pad_with_distractors(&sample, &pool(), 3_000..=4_000, &counter, 99).unwrap();
        let b = pad_with_distractors(&sample, &pool(), 3_000..=4_000, &counter, 99).unwrap();
        assert_eq!(a, b);
        let c = pad_with_distractors(&sample, &pool(), 3_000..=4_000, &counter, 100).unwrap();
        assert_ne!(a.sample.document, c.sample.document);
    }

    #[test]
    fn rejects_unsupported_target_range() {
        let sample = gold_sample("Marker XKCDQ here.".into(), "XKCDQ");
        let counter = CharEstimator;
        assert!(matches!(
            pad_with_distractors(&sample, &pool(), 100..=200, &counter, 1),
            Err(CorpusError::InvalidTargetRange { .. })
        ));
        assert!(matches!(
            pad_with_distractors(&sample, &[], 3_000..=32_000, &counter, 1),
            Err(CorpusError::EmptyPool)
        ));
    }

    #[test]
    fn tight_ceiling_trims_filler() {
        let doc = format!("Marker XKCDQ sits here. {}", "gold body. ".repeat(500));
        let sample = gold_sample(doc, "XKCDQ");
        let counter = CharEstimator;
        let out = pad_with_distractors(&sample, &pool(), 3_000..=3_050, &counter, 5).unwrap();
        let total = counter.count(&out.sample.document);
        assert!((3_000..=3_050).contains(&total), "total {total}");
        out.sample.validate().unwrap();
    }

    #[test]
    fn mixed_size_pool_still_lands_in_range() {
        // One huge passage among tiny ones: trimming must shed the huge one
        // even when a tiny passage was added last.
        let mut pool: Vec<String> = (0..6).map(|i| format!("tiny filler {i}.")).collect();
        pool.push("gigantic filler passage. ".repeat(4_000));
        let doc = format!("Marker XKCDQ sits here. {}", "gold body. ".repeat(300));
        let sample = gold_sample(doc, "XKCDQ");
        let counter = CharEstimator;
        for seed in 0..24 {
            let out = pad_with_distractors(&sample, &pool, 3_000..=3_600, &counter, seed).unwrap();
            let total = counter.count(&out.sample.document);
            assert!(
                (3_000..=3_600).contains(&total),
                "seed {seed}: total {total}"
            );
            out.sample.validate().unwrap();
        }
    }
}
