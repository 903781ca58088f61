//! Seeded Monte-Carlo sweeps and their CSV output.

use std::io::Write;
use std::time::{Duration, Instant};

use dfris_core::channel::generate_channels;
use dfris_core::optimizer::run;
use dfris_core::system::transmit_power;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::RunError;

/// Result of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub sum_rate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub transmit_power: f64,
}

/// One `(sweep value, trial)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub parameter: &'static str,
    /// Sweep value as written in the config; empty without a sweep.
    pub value: String,
    pub trial: usize,
    pub seed: u64,
    /// The error message if the trial failed.
    pub outcome: Result<TrialOutcome, String>,
    pub wall_time: Duration,
}

/// Mean and standard error of the sum rate at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub parameter: &'static str,
    pub value: String,
    pub trials: usize,
    pub failed: usize,
    pub mean_sum_rate: f64,
    /// Sample standard deviation over `sqrt(n)`; NaN with fewer than two successes.
    pub stderr_sum_rate: f64,
    pub mean_iterations: f64,
    pub converged_fraction: f64,
}

pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_add(trial as u64)
}

/// Generates the channels of `seed` and runs the optimizer on them.
pub fn run_trial(scenario: &ScenarioConfig, seed: u64) -> dfris_core::Result<TrialOutcome> {
    let channels = generate_channels(&scenario.geometry_model(), &scenario.link_path_loss(), seed)?;
    let params = scenario.params()?;
    let out = run(&channels, &params, &scenario.optimizer_config(seed))?;
    Ok(TrialOutcome {
        sum_rate: out.sum_rate,
        iterations: out.iterations,
        converged: out.converged,
        transmit_power: transmit_power(&out.beamformers),
    })
}

/// Runs every trial of every sweep point on the current rayon pool.
///
/// Rows come back ordered by sweep value, then trial index, whatever the
/// thread count. A failing trial is recorded in its row and the sweep continues.
pub fn run_sweep(config: &ScenarioConfig) -> Result<Vec<ResultRow>, RunError> {
    let parameter = config.sweep_name();
    let points = config.sweep_points()?;
    let cells: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..config.trials).map(move |t| (p, t)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(p, trial)| {
            let (value, scenario) = &points[p];
            let seed = trial_seed(config.base_seed, trial);
            let start = Instant::now();
            let outcome = run_trial(scenario, seed).map_err(|e| e.to_string());
            ResultRow {
                parameter,
                value: value.clone(),
                trial,
                seed,
                outcome,
                wall_time: start.elapsed(),
            }
        })
        .collect())
}

/// Per-sweep-value aggregates, in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<(&ResultRow, Vec<&ResultRow>)> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|(head, _)| head.value == row.value) {
            Some((_, members)) => members.push(row),
            None => groups.push((row, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|(head, members)| {
            let ok: Vec<&TrialOutcome> = members.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let n = ok.len() as f64;
            let mean = ok.iter().map(|o| o.sum_rate).sum::<f64>() / n;
            let stderr = if ok.len() < 2 {
                f64::NAN
            } else {
                let var = ok.iter().map(|o| (o.sum_rate - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            };
            SummaryRow {
                parameter: head.parameter,
                value: head.value.clone(),
                trials: members.len(),
                failed: members.len() - ok.len(),
                mean_sum_rate: mean,
                stderr_sum_rate: stderr,
                mean_iterations: ok.iter().map(|o| o.iterations as f64).sum::<f64>() / n,
                converged_fraction: ok.iter().filter(|o| o.converged).count() as f64 / n,
            }
        })
        .collect()
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one line per row. Wall time is optional because it breaks
/// byte-for-byte reproducibility.
pub fn write_rows_csv<W: Write>(rows: &[ResultRow], with_timing: bool, mut out: W) -> std::io::Result<()> {
    write!(out, "parameter,value,trial,seed,sum_rate,iterations,converged,transmit_power")?;
    if with_timing {
        write!(out, ",wall_time_s")?;
    }
    writeln!(out, ",error")?;
    for row in rows {
        write!(out, "{},{},{},{},", row.parameter, quote(&row.value), row.trial, row.seed)?;
        match &row.outcome {
            Ok(o) => write!(
                out,
                "{},{},{},{}",
                real(o.sum_rate),
                o.iterations,
                o.converged,
                real(o.transmit_power)
            )?,
            Err(_) => write!(out, "NaN,0,false,NaN")?,
        }
        if with_timing {
            write!(out, ",{}", real(row.wall_time.as_secs_f64()))?;
        }
        let error = row.outcome.as_ref().err().map_or(String::new(), |e| quote(e));
        writeln!(out, ",{error}")?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "parameter,value,trials,failed,mean_sum_rate,stderr_sum_rate,mean_iterations,converged_fraction"
    )?;
    for s in summary {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.parameter,
            quote(&s.value),
            s.trials,
            s.failed,
            real(s.mean_sum_rate),
            real(s.stderr_sum_rate),
            real(s.mean_iterations),
            real(s.converged_fraction)
        )?;
    }
    Ok(())
}
