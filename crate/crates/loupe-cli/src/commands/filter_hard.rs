//! `loupe filter-hard`: easy/hard classification against model + judge
//! endpoints, plus the seeded SFT/RL split.

use std::collections::BTreeMap;
use std::path::Path;

use loupe::corpus::{classify_hardness, split_sft_rl, ClassifiedSample, FilterReport, Hardness};
use loupe::render::render_pages_with;
use serde::Serialize;

use crate::config::Settings;
use crate::records::{read_jsonl, write_json_pretty, write_jsonl, PreparedRecord};
use crate::{config_err, CliError, CliResult};

#[derive(Serialize)]
struct FilterOutput {
    reports: Vec<FilterReportRow>,
    sft_ids: Vec<String>,
    rl_ids: Vec<String>,
}

#[derive(Serialize)]
struct FilterReportRow {
    #[serde(flatten)]
    report: FilterReport,
    keep_rate_percent: f64,
}

pub fn run(settings: &Settings, input: &Path, out: &Path) -> CliResult<()> {
    let prepared: Vec<PreparedRecord> = read_jsonl(input)?;
    let model = settings.model_endpoint()?;
    let judge = settings.judge_endpoint()?;
    std::fs::create_dir_all(out)?;

    // Classification fans out with bounded parallelism; results keep input
    // order.
    let results: Vec<ClassifiedSample> = {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<Option<ClassifiedSample>>> = (0..prepared.len())
            .map(|_| std::sync::Mutex::new(None))
            .collect();
        std::thread::scope(|scope| {
            for _ in 0..settings.parallelism.min(prepared.len().max(1)) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= prepared.len() {
                        break;
                    }
                    let record = &prepared[i];
                    let classified = match settings.preset_for(&record.preset).and_then(|preset| {
                        render_pages_with(
                            &record.sample.document,
                            &preset,
                            &settings.font,
                            &settings.profile,
                        )
                        .map_err(config_err)
                    }) {
                        Ok(pages) => classify_hardness(
                            &record.sample,
                            &pages,
                            model.as_ref(),
                            judge.as_ref(),
                            settings.episode.temperature,
                            settings.episode.max_tokens_per_turn,
                        ),
                        Err(e) => ClassifiedSample {
                            sample_id: record.sample.id.clone(),
                            hardness: Hardness::Unclassified,
                            model_answer: None,
                            judge_raw: None,
                            error: Some(match e {
                                CliError::Config(m) | CliError::Endpoint(m) => m,
                                CliError::Other(e) => e.to_string(),
                            }),
                        },
                    };
                    *slots[i].lock().unwrap() = Some(classified);
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.into_inner().unwrap().expect("classified"))
            .collect()
    };

    write_jsonl(&out.join("classified.jsonl"), &results)?;

    // Per-dataset reports.
    let mut by_dataset: BTreeMap<String, FilterReport> = BTreeMap::new();
    let mut hard_ids = Vec::new();
    let mut easy_ids = Vec::new();
    for (record, classified) in prepared.iter().zip(&results) {
        let dataset = record
            .sample
            .dataset
            .clone()
            .unwrap_or_else(|| "default".into());
        let entry = by_dataset.entry(dataset.clone()).or_insert(FilterReport {
            dataset,
            generated: 0,
            hard: 0,
            easy: 0,
            unclassified: 0,
        });
        entry.generated += 1;
        match classified.hardness {
            Hardness::Hard => {
                entry.hard += 1;
                hard_ids.push(classified.sample_id.clone());
            }
            Hardness::Easy => {
                entry.easy += 1;
                easy_ids.push(classified.sample_id.clone());
            }
            Hardness::Unclassified => entry.unclassified += 1,
        }
    }

    let split = split_sft_rl(&hard_ids, &easy_ids, settings.seed);
    let reports: Vec<FilterReportRow> = by_dataset
        .into_values()
        .map(|report| FilterReportRow {
            keep_rate_percent: report.keep_rate_percent(),
            report,
        })
        .collect();
    for row in &reports {
        println!(
            "{}: {} generated, {} hard ({:.1}% keep), {} easy, {} unclassified",
            row.report.dataset,
            row.report.generated,
            row.report.hard,
            row.keep_rate_percent,
            row.report.easy,
            row.report.unclassified
        );
    }
    let unclassified_total: u64 = reports.iter().map(|r| r.report.unclassified).sum();
    let output = FilterOutput {
        reports,
        sft_ids: split.sft,
        rl_ids: split.rl,
    };
    write_json_pretty(&out.join("filter_report.json"), &output)?;

    // Every sample failing on endpoints means the endpoints are down.
    if unclassified_total == results.len() as u64 && !results.is_empty() {
        return Err(CliError::Endpoint(
            "all samples unclassified; model or judge endpoint unreachable".into(),
        ));
    }
    Ok(())
}
