//! `loupe synth-requests`: synthesis prompt bundles for hard samples.

use std::collections::BTreeSet;
use std::path::Path;

use loupe::corpus::{build_synthesis_request, ClassifiedSample, Hardness};
use loupe::render::render_pages_with;

use crate::config::Settings;
use crate::records::{read_jsonl, write_jsonl, PreparedRecord};
use crate::{config_err, CliResult};

pub fn run(
    settings: &Settings,
    input: &Path,
    classified: Option<&Path>,
    out: &Path,
) -> CliResult<()> {
    let prepared: Vec<PreparedRecord> = read_jsonl(input)?;
    let hard_ids: Option<BTreeSet<String>> = match classified {
        Some(path) => {
            let rows: Vec<ClassifiedSample> = read_jsonl(path)?;
            Some(
                rows.into_iter()
                    .filter(|r| r.hardness == Hardness::Hard)
                    .map(|r| r.sample_id)
                    .collect(),
            )
        }
        None => None,
    };

    let mut requests = Vec::new();
    let mut skipped_no_evidence = 0u64;
    for record in &prepared {
        if let Some(hard) = &hard_ids {
            if !hard.contains(&record.sample.id) {
                continue;
            }
        }
        if record.evidence_pages.is_empty() {
            skipped_no_evidence += 1;
            continue;
        }
        let preset = settings.preset_for(&record.preset)?;
        let pages = render_pages_with(
            &record.sample.document,
            &preset,
            &settings.font,
            &settings.profile,
        )
        .map_err(config_err)?;
        let evidence_texts: Vec<(usize, String)> = record
            .evidence_pages
            .iter()
            .map(|&k| {
                pages
                    .page_text(&record.sample.document, k)
                    .map(|text| (k, text))
                    .map_err(config_err)
            })
            .collect::<CliResult<_>>()?;
        let answer = record.sample.gold_answers.join("\n");
        let request = build_synthesis_request(&record.sample, &evidence_texts, &answer)
            .map_err(config_err)?;
        requests.push(request);
    }

    write_jsonl(out, &requests)?;
    println!(
        "wrote {} synthesis requests ({} skipped without evidence)",
        requests.len(),
        skipped_no_evidence
    );
    Ok(())
}
