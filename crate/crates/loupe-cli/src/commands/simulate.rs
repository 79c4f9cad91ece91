//! `loupe simulate`: closed-form benefit sweep, CSV in, CSV out.

use std::path::Path;

use loupe::simlab::{simulate_episodes, sweep, PolicySpec, RegimeCurve, SweepTable};

use crate::config::Settings;
use crate::{config_err, CliResult};

fn read_curve(path: &Path) -> CliResult<RegimeCurve> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?
        .clone();
    let col = |names: &[&str]| -> CliResult<usize> {
        headers
            .iter()
            .position(|h| names.contains(&h))
            .ok_or_else(|| {
                config_err(format!(
                    "{}: missing column (expected one of {names:?})",
                    path.display()
                ))
            })
    };
    let rate_col = col(&["rate", "rho"])?;
    let dno_col = col(&["no_tool_error", "d_no"])?;
    let sel_col = col(&["selection", "p", "p_hit"])?;

    let mut curve = RegimeCurve {
        rates: Vec::new(),
        no_tool_error: Vec::new(),
        selection: Vec::new(),
    };
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| config_err(format!("{}:{}: {e}", path.display(), i + 2)))?;
        let field = |idx: usize| -> CliResult<f64> {
            row.get(idx)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| config_err(format!("{}:{}: malformed value", path.display(), i + 2)))
        };
        curve.rates.push(field(rate_col)?);
        curve.no_tool_error.push(field(dno_col)?);
        curve.selection.push(field(sel_col)?);
    }
    Ok(curve)
}

fn render_csv(table: &SweepTable, empirical: &[Option<f64>]) -> String {
    let mc = empirical.iter().any(Option::is_some);
    let mut out = String::from("rate,no_tool_error,p_hit,expected_error,benefit");
    if mc {
        out.push_str(",empirical_with_tool_error");
    }
    out.push('\n');
    for (row, emp) in table.rows.iter().zip(empirical) {
        out.push_str(&format!(
            "{},{},{},{},{}",
            row.rate, row.no_tool_error, row.p_hit, row.expected_error, row.benefit
        ));
        if mc {
            match emp {
                Some(v) => out.push_str(&format!(",{v}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    settings: &Settings,
    curve: Option<&Path>,
    p_hit: Option<f64>,
    err_hit: Option<f64>,
    err_miss: Option<f64>,
    d_no: Option<f64>,
    out: Option<&Path>,
    mc_trials: Option<u64>,
) -> CliResult<()> {
    let err_hit = err_hit.unwrap_or(0.0);
    let err_miss = err_miss.unwrap_or(1.0);
    let curve = match (curve, p_hit, d_no) {
        (Some(path), _, _) => read_curve(path)?,
        (None, Some(p), Some(d)) => RegimeCurve {
            rates: vec![1.0],
            no_tool_error: vec![d],
            selection: vec![p],
        },
        _ => {
            return Err(config_err(
                "pass --curve <csv>, or --p-hit and --d-no for a single point",
            ))
        }
    };

    let table = sweep(&curve, err_hit, err_miss).map_err(config_err)?;
    let empirical: Vec<Option<f64>> = match mc_trials {
        None => vec![None; table.rows.len()],
        Some(trials) => table
            .rows
            .iter()
            .map(|row| {
                let policy = PolicySpec::new(row.p_hit, err_hit, err_miss).map_err(config_err)?;
                let sim = simulate_episodes(&policy, row.no_tool_error, trials, settings.seed)
                    .map_err(config_err)?;
                Ok(Some(sim.with_tool_error))
            })
            .collect::<CliResult<_>>()?,
    };

    let csv = render_csv(&table, &empirical);
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, &csv)?;
        }
        None => print!("{csv}"),
    }
    match table.crossover {
        Some(rate) => println!("# benefit turns positive at rate {rate}"),
        None => println!("# benefit never turns positive on this grid"),
    }
    Ok(())
}
