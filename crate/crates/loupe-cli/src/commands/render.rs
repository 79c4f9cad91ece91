//! `loupe render`: documents to page images plus manifests.

use std::path::Path;

use loupe::corpus::Sample;
use loupe::ledger::TokenCounter;
use loupe::render::{render_pages_with, write_page_set};
use serde::Serialize;

use crate::config::Settings;
use crate::records::{read_jsonl, write_json_pretty};
use crate::CliResult;

#[derive(Serialize)]
struct RenderSummary {
    preset: String,
    docs: u64,
    pages: u64,
    mean_icr: Option<f64>,
}

pub fn run(settings: &Settings, input: &Path, out: &Path) -> CliResult<()> {
    let samples: Vec<Sample> = read_jsonl(input)?;
    let counter = settings.counter();
    std::fs::create_dir_all(out)?;

    let mut total_pages = 0u64;
    let mut icrs: Vec<f64> = Vec::new();
    for sample in &samples {
        let pages = render_pages_with(
            &sample.document,
            &settings.preset,
            &settings.font,
            &settings.profile,
        )
        .map_err(crate::config_err)?;
        let source_tokens = counter.count(&sample.document);
        let manifest = write_page_set(out, &sample.id, &pages, Some(source_tokens))
            .map_err(crate::config_err)?;
        total_pages += manifest.pages.len() as u64;
        if let Some(icr) = manifest.icr {
            icrs.push(icr);
        }
    }

    let summary = RenderSummary {
        preset: settings.preset.name.clone(),
        docs: samples.len() as u64,
        pages: total_pages,
        mean_icr: (!icrs.is_empty()).then(|| icrs.iter().sum::<f64>() / icrs.len() as f64),
    };
    write_json_pretty(&out.join("render_summary.json"), &summary)?;
    println!(
        "rendered {} docs to {} pages at {} (mean ICR {})",
        summary.docs,
        summary.pages,
        summary.preset,
        summary
            .mean_icr
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "n/a".into()),
    );
    Ok(())
}
