//! `loupe run-episodes`: drive the selective-expansion protocol over
//! prepared samples, then judge and aggregate.

use std::path::Path;

use loupe::corpus::{conversation_from_trajectory, export_sft_dataset};
use loupe::protocol::{run_episodes, EpisodeHost, EpisodeJob, EpisodeStatus, Trajectory};
use loupe::render::render_pages_with;

use crate::config::Settings;
use crate::records::{read_jsonl, write_jsonl, PreparedRecord};
use crate::{config_err, CliError, CliResult};

pub fn run(settings: &Settings, input: &Path, out: &Path, limit: Option<usize>) -> CliResult<()> {
    let mut prepared: Vec<PreparedRecord> = read_jsonl(input)?;
    if let Some(limit) = limit {
        prepared.truncate(limit);
    }
    let model = settings.model_endpoint()?;
    let ocr = settings.ocr.as_ref().map(|spec| spec.build());
    let counter = settings.counter();
    std::fs::create_dir_all(out)?;

    let host = EpisodeHost {
        endpoint: model.as_ref(),
        ocr: ocr.as_deref(),
        counter: &counter,
        metrics: &settings.font,
        config: settings.episode.clone(),
        profile: settings.profile,
    };

    // Chunked so page rasters for the whole corpus never sit in memory at
    // once; output order stays the input order.
    let mut trajectories: Vec<Trajectory> = Vec::with_capacity(prepared.len());
    for chunk in prepared.chunks(32.max(settings.parallelism)) {
        let jobs: Vec<EpisodeJob> = chunk
            .iter()
            .map(|record| {
                let preset = settings.preset_for(&record.preset)?;
                let pages = render_pages_with(
                    &record.sample.document,
                    &preset,
                    &settings.font,
                    &settings.profile,
                )
                .map_err(config_err)?;
                Ok(EpisodeJob {
                    sample_id: record.sample.id.clone(),
                    question: record.sample.question.clone(),
                    source_text: record.sample.document.clone(),
                    pages,
                })
            })
            .collect::<CliResult<_>>()?;
        trajectories.extend(run_episodes(&host, &jobs, settings.parallelism));
    }

    // Flush trajectories before any endpoint-failure exit so partial runs
    // are never lost.
    write_jsonl(&out.join("trajectories.jsonl"), &trajectories)?;

    // Conversation export with loss masks, one line per episode; protocol
    // errors are excluded and counted.
    let conversations: Vec<_> = prepared
        .iter()
        .zip(&trajectories)
        .map(|(record, trajectory)| {
            let preset = settings.preset_for(&record.preset)?;
            let per_page = loupe::render::compute_visual_tokens(
                preset.page_width,
                preset.page_height,
                &settings.profile,
            )
            .map_err(config_err)?;
            let pages = (trajectory.ledger.initial_visual_tokens() / per_page.max(1)) as usize;
            let images = (1..=pages)
                .map(|k| format!("{}/page_{k:04}.png", record.sample.id))
                .collect();
            Ok(conversation_from_trajectory(
                trajectory,
                &record.sample.question,
                settings.episode.expand_kind,
                record.sample.dataset.clone(),
                images,
            ))
        })
        .collect::<CliResult<_>>()?;
    let mut conv_file =
        std::io::BufWriter::new(std::fs::File::create(out.join("conversations.jsonl"))?);
    let export = export_sft_dataset(&conversations, &mut conv_file).map_err(config_err)?;
    drop(conv_file);
    if export.skipped_protocol_error > 0 {
        eprintln!(
            "warning: {} conversations skipped (protocol errors)",
            export.skipped_protocol_error
        );
    }

    let failures = trajectories
        .iter()
        .filter(|t| t.status == EpisodeStatus::ProtocolError)
        .count();
    if failures == trajectories.len() && !trajectories.is_empty() {
        let detail = trajectories[0]
            .error
            .clone()
            .unwrap_or_else(|| "unknown endpoint failure".into());
        return Err(CliError::Endpoint(format!(
            "all {} episodes failed ({detail}); partial trajectories flushed to {}",
            failures,
            out.join("trajectories.jsonl").display()
        )));
    }
    if failures > 0 {
        eprintln!(
            "warning: {failures} of {} episodes ended in protocol_error",
            trajectories.len()
        );
    }

    // Judge and aggregate when a judge endpoint is configured.
    if settings.judge.is_some() {
        super::score::score_trajectories(settings, &prepared, &trajectories, out, false)?;
    } else {
        println!(
            "ran {} episodes ({} protocol errors); no judge configured, skipping scoring",
            trajectories.len(),
            failures
        );
    }
    Ok(())
}
