//! Per-iteration convergence traces.

use std::io::Write;

use dfris_core::channel::{generate_channels, write_channel_dump, ChannelSet};
use dfris_core::optimizer::{run_with_sink, IterationRecord, Outcome};

use crate::config::ScenarioConfig;
use crate::error::RunError;

pub const TRACE_HEADER: &str = "iteration,sum_rate,power,mu";

/// Channels of one seeded realization of the scenario.
pub fn realization(config: &ScenarioConfig, seed: u64) -> dfris_core::Result<ChannelSet> {
    generate_channels(&config.geometry_model(), &config.link_path_loss(), seed)
}

/// Runs the optimizer on the realization of `seed`, writing one CSV line per
/// outer iteration as it completes. The sweep block, if any, is ignored.
pub fn emit_convergence_trace<W: Write>(config: &ScenarioConfig, seed: u64, mut out: W) -> Result<Outcome, RunError> {
    let channels = realization(config, seed)?;
    let params = config.params()?;
    writeln!(out, "{TRACE_HEADER}")?;
    let mut io_error = None;
    let outcome = run_with_sink(&channels, &params, &config.optimizer_config(seed), &mut |r: &IterationRecord| {
        if io_error.is_none() {
            if let Err(e) = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e}",
                r.iteration, r.sum_rate, r.transmit_power, r.mu
            ) {
                io_error = Some(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    out.flush()?;
    Ok(outcome)
}

/// Writes the realization of `seed` in the plain-text channel format.
pub fn dump_channels<W: Write>(config: &ScenarioConfig, seed: u64, out: W) -> Result<(), RunError> {
    write_channel_dump(&realization(config, seed)?, out)?;
    Ok(())
}
