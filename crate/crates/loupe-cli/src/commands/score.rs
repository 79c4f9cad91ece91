//! `loupe score`: judge trajectories and build per-dataset and macro
//! tables.

use std::collections::BTreeMap;
use std::path::Path;

use loupe::corpus::EvidenceMap;
use loupe::ledger::aggregate_ecr;
use loupe::protocol::Trajectory;
use loupe::scoring::{
    judge_answer, judged_answer_text, selection_hit, DatasetReport, RunReport, ScoringError,
};

use crate::config::Settings;
use crate::records::{read_jsonl, write_json_pretty, PreparedRecord};
use crate::{config_err, CliError, CliResult};

pub fn run(
    settings: &Settings,
    trajectories: &Path,
    input: &Path,
    out: &Path,
    force_extract: bool,
) -> CliResult<()> {
    let prepared: Vec<PreparedRecord> = read_jsonl(input)?;
    let trajectories: Vec<Trajectory> = read_jsonl(trajectories)?;
    std::fs::create_dir_all(out)?;
    score_trajectories(settings, &prepared, &trajectories, out, force_extract)
}

struct DatasetAccumulator {
    samples: u64,
    judged: u64,
    correct: u64,
    invalid: u64,
    hits: u64,
    with_evidence: u64,
    expand_calls: u64,
    ledgers: Vec<loupe::ledger::TokenLedger>,
}

/// Shared by `score` and `run-episodes`: judge every trajectory, fold into
/// per-dataset reports, write report.json/report.csv, print the table.
pub fn score_trajectories(
    settings: &Settings,
    prepared: &[PreparedRecord],
    trajectories: &[Trajectory],
    out: &Path,
    force_extract: bool,
) -> CliResult<()> {
    let judge = settings.judge_endpoint()?;
    let by_id: BTreeMap<&str, &PreparedRecord> = prepared
        .iter()
        .map(|record| (record.sample.id.as_str(), record))
        .collect();

    let mut groups: BTreeMap<String, DatasetAccumulator> = BTreeMap::new();
    for trajectory in trajectories {
        let Some(record) = by_id.get(trajectory.sample_id.as_str()) else {
            return Err(config_err(format!(
                "trajectory {} has no matching prepared sample",
                trajectory.sample_id
            )));
        };
        let dataset = record
            .sample
            .dataset
            .clone()
            .unwrap_or_else(|| "default".into());
        let acc = groups.entry(dataset).or_insert(DatasetAccumulator {
            samples: 0,
            judged: 0,
            correct: 0,
            invalid: 0,
            hits: 0,
            with_evidence: 0,
            expand_calls: 0,
            ledgers: Vec::new(),
        });
        acc.samples += 1;
        acc.expand_calls += trajectory.expand_calls() as u64;
        acc.ledgers.push(trajectory.ledger.clone());

        if !record.evidence_pages.is_empty() {
            acc.with_evidence += 1;
            let evidence = EvidenceMap {
                sample_id: record.sample.id.clone(),
                evidence_pages: record.evidence_pages.iter().copied().collect(),
            };
            if selection_hit(trajectory, &evidence) {
                acc.hits += 1;
            }
        }

        let Some(answer) = judged_answer_text(trajectory, force_extract) else {
            continue;
        };
        match judge_answer(
            judge.as_ref(),
            &record.sample.question,
            &record.sample.gold_answers,
            &answer,
        ) {
            Ok(verdict) => {
                acc.judged += 1;
                if verdict.correct {
                    acc.correct += 1;
                }
            }
            Err(ScoringError::InvalidVerdict(_)) => acc.invalid += 1,
            Err(ScoringError::Endpoint(e)) => {
                return Err(CliError::Endpoint(format!("judge endpoint failed: {e}")))
            }
            Err(e) => return Err(CliError::Other(anyhow::anyhow!(e))),
        }
    }

    let mut datasets = Vec::with_capacity(groups.len());
    for (name, acc) in groups {
        let ecr = aggregate_ecr(acc.ledgers.iter()).map_err(config_err)?;
        datasets.push(DatasetReport {
            dataset: name,
            samples: acc.samples,
            judged: acc.judged,
            invalid_verdicts: acc.invalid,
            qa_accuracy_percent: if acc.samples > 0 {
                100.0 * acc.correct as f64 / acc.samples as f64
            } else {
                0.0
            },
            selection_accuracy_percent: (acc.with_evidence > 0)
                .then(|| 100.0 * acc.hits as f64 / acc.with_evidence as f64),
            ecr,
            avg_expand_calls: if acc.samples > 0 {
                acc.expand_calls as f64 / acc.samples as f64
            } else {
                0.0
            },
        });
    }
    let report = RunReport::from_datasets(datasets).map_err(config_err)?;
    write_json_pretty(&out.join("report.json"), &report)?;
    std::fs::write(out.join("report.csv"), report.to_csv())?;
    print!("{}", report.to_text_table());
    Ok(())
}
