//! `loupe build-data`: pad with distractors, render, track evidence.

use std::collections::BTreeMap;
use std::path::Path;

use loupe::corpus::{map_spans_to_pages, pad_with_distractors, Sample};
use loupe::ledger::TokenCounter;
use loupe::render::{render_pages_with, write_page_set};
use serde::Serialize;

use crate::config::Settings;
use crate::records::{read_jsonl, sample_seed, write_json_pretty, write_jsonl, PreparedRecord};
use crate::{config_err, CliResult};

#[derive(Serialize)]
struct BuildManifest {
    preset: String,
    target_tokens: (u64, u64),
    samples: u64,
    pad_skipped: u64,
    empty_evidence: u64,
    pages: u64,
    per_dataset: BTreeMap<String, u64>,
}

fn read_pool(path: &Path) -> CliResult<Vec<String>> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let passages: Vec<String> = raw
        .split("\n\n")
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect();
    if passages.is_empty() {
        return Err(config_err(format!(
            "{}: distractor pool has no passages",
            path.display()
        )));
    }
    Ok(passages)
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    settings: &Settings,
    input: &Path,
    pool_path: &Path,
    out: &Path,
    target_min: Option<u64>,
    target_max: Option<u64>,
    no_pages: bool,
) -> CliResult<()> {
    let samples: Vec<Sample> = read_jsonl(input)?;
    let pool = read_pool(pool_path)?;
    let counter = settings.counter();
    let lo = target_min.unwrap_or(*settings.pad_range.start());
    let hi = target_max.unwrap_or(*settings.pad_range.end());
    std::fs::create_dir_all(out)?;
    let pages_dir = out.join("pages");

    let mut prepared: Vec<PreparedRecord> = Vec::with_capacity(samples.len());
    let mut pad_skipped = 0u64;
    let mut empty_evidence = 0u64;
    let mut total_pages = 0u64;
    let mut per_dataset: BTreeMap<String, u64> = BTreeMap::new();

    for (index, sample) in samples.iter().enumerate() {
        sample.validate().map_err(config_err)?;
        let outcome = pad_with_distractors(
            sample,
            &pool,
            lo..=hi,
            &counter,
            sample_seed(settings.seed, index),
        )
        .map_err(config_err)?;
        if outcome.skipped {
            pad_skipped += 1;
        }
        let padded = outcome.sample;
        let pages = render_pages_with(
            &padded.document,
            &settings.preset,
            &settings.font,
            &settings.profile,
        )
        .map_err(config_err)?;
        let evidence =
            map_spans_to_pages(&padded.id, &padded.answer_spans, &pages).map_err(config_err)?;
        if evidence.evidence_pages.is_empty() {
            empty_evidence += 1;
        }
        if !no_pages {
            let source_tokens = counter.count(&padded.document);
            write_page_set(&pages_dir, &padded.id, &pages, Some(source_tokens))
                .map_err(config_err)?;
        }
        total_pages += pages.page_count() as u64;
        *per_dataset
            .entry(padded.dataset.clone().unwrap_or_else(|| "default".into()))
            .or_insert(0) += 1;
        prepared.push(PreparedRecord {
            sample: padded,
            evidence_pages: evidence.evidence_pages.into_iter().collect(),
            preset: settings.preset.name.clone(),
            pad_skipped: outcome.skipped,
        });
    }

    write_jsonl(&out.join("prepared.jsonl"), &prepared)?;
    let manifest = BuildManifest {
        preset: settings.preset.name.clone(),
        target_tokens: (lo, hi),
        samples: prepared.len() as u64,
        pad_skipped,
        empty_evidence,
        pages: total_pages,
        per_dataset,
    };
    write_json_pretty(&out.join("build_manifest.json"), &manifest)?;
    println!(
        "prepared {} samples ({} pages, {} pad-skipped, {} without evidence)",
        manifest.samples, manifest.pages, manifest.pad_skipped, manifest.empty_evidence
    );
    Ok(())
}
