//! `loupe report`: per-episode token-ledger table with ICR/ECR and KV-cache
//! budgets.

use std::path::Path;

use loupe::ledger::{aggregate_ecr, format_mib, kv_bytes};
use loupe::protocol::Trajectory;

use crate::config::Settings;
use crate::records::read_jsonl;
use crate::{config_err, CliResult};

pub fn run(settings: &Settings, trajectories: &Path, csv: Option<&Path>) -> CliResult<()> {
    let trajectories: Vec<Trajectory> = read_jsonl(trajectories)?;
    if trajectories.is_empty() {
        return Err(config_err("no trajectories to report on"));
    }

    println!(
        "{:<20} {:>10} {:>10} {:>8} {:>8} {:>8} {:>10}",
        "sample", "N", "visual", "expands", "ICR", "ECR", "KV MiB"
    );
    let mut csv_out = String::from(
        "sample,source_tokens,initial_visual_tokens,expansions,reader_total,icr,ecr,kv_mib\n",
    );
    for trajectory in &trajectories {
        let ledger = &trajectory.ledger;
        let icr = ledger.icr().map_err(config_err)?;
        let ecr = ledger.ecr().map_err(config_err)?;
        let kv = kv_bytes(ledger.reader_total(), settings.kv_bytes_per_token);
        println!(
            "{:<20} {:>10} {:>10} {:>8} {:>8.2} {:>8.2} {:>10}",
            trajectory.sample_id,
            ledger.source_tokens(),
            ledger.initial_visual_tokens(),
            ledger.expansions().len(),
            icr,
            ecr,
            format_mib(kv)
        );
        csv_out.push_str(&format!(
            "{},{},{},{},{},{icr},{ecr},{}\n",
            trajectory.sample_id,
            ledger.source_tokens(),
            ledger.initial_visual_tokens(),
            ledger.expansions().len(),
            ledger.reader_total(),
            format_mib(kv)
        ));
    }

    let summary = aggregate_ecr(trajectories.iter().map(|t| &t.ledger)).map_err(config_err)?;
    let total_reader: u64 = trajectories.iter().map(|t| t.ledger.reader_total()).sum();
    println!(
        "\n{} episodes; ECR mean-of-ratios {:.3}, ratio-of-sums {:.3}; total reader KV {} MiB",
        trajectories.len(),
        summary.mean_of_ratios,
        summary.ratio_of_sums,
        format_mib(kv_bytes(total_reader, settings.kv_bytes_per_token))
    );

    if let Some(path) = csv {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, csv_out)?;
    }
    Ok(())
}
