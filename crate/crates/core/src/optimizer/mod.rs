//! Block-coordinate ascent over `(gamma, tau, w, phi1, phi2)`.
//!
//! Each outer iteration performs, in order: the closed-form auxiliary
//! updates, the beamforming update with its power multiplier, and one MM
//! inner loop per RIS face. For continuous phases every block is an exact
//! (or majorized) maximization of `g_R`, so the sum rate recorded at the end
//! of each outer iteration never decreases.

mod auxiliary;
mod beamforming;
mod phase;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use auxiliary::{update_gamma, update_tau};
pub use beamforming::{effective_channels, matched_filter, update_beamformers, EffectiveChannels};
pub use phase::{
    mm_minimize, mm_phase_data_phi1, mm_phase_data_phi2, mm_step, project_phases, quantize_phases,
    update_phi1, update_phi2, MmOutcome, PhaseProblem,
};

use crate::channel::ChannelSet;
use crate::system::{
    self, f_r_surrogate, g_r_surrogate, BeamformerSet, NoiseAndGainParams, ReflectionState, Resolution,
};
use crate::{CVector, Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub outer_max_iters: usize,
    /// Stop when the relative sum-rate change between outer iterations falls below this.
    pub outer_rel_tol: f64,
    /// Cap on MM steps per face per outer iteration.
    pub mm_max_iters: usize,
    pub mm_rel_tol: f64,
    /// Bisection stops once the power is within this fraction of the budget.
    pub bisection_power_tol: f64,
    pub bisection_mu_bracket_growth: f64,
    pub resolution: Resolution,
    /// Seed of the random initial phases.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            outer_max_iters: 100,
            outer_rel_tol: 1e-4,
            mm_max_iters: 200,
            mm_rel_tol: 1e-6,
            bisection_power_tol: 1e-9,
            bisection_mu_bracket_growth: 2.0,
            resolution: Resolution::Continuous,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_max_iters == 0 || self.mm_max_iters == 0 {
            return Err(Error::Config("iteration caps must be at least 1".into()));
        }
        for (name, v) in [
            ("outer_rel_tol", self.outer_rel_tol),
            ("mm_rel_tol", self.mm_rel_tol),
            ("bisection_power_tol", self.bisection_power_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.bisection_mu_bracket_growth > 1.0) {
            return Err(Error::Config("bisection_mu_bracket_growth must exceed 1".into()));
        }
        if self.resolution == Resolution::Bits(0) {
            return Err(Error::Config("phase resolution needs at least one bit".into()));
        }
        Ok(())
    }
}

/// `g_R` (in bits) after each block of one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockObjectives {
    /// `f_R` at the new `gamma`, i.e. `g_R` with `tau` at its optimum for that `gamma`.
    pub after_gamma: f64,
    pub after_tau: f64,
    pub after_beamformers: f64,
    pub after_phi1: f64,
    pub after_phi2: f64,
}

impl BlockObjectives {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.after_gamma,
            self.after_tau,
            self.after_beamformers,
            self.after_phi1,
            self.after_phi2,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based outer iteration index.
    pub iteration: usize,
    /// Sum rate after the full iteration, bits/s/Hz.
    pub sum_rate: f64,
    pub objectives: BlockObjectives,
    pub transmit_power: f64,
    pub mu: f64,
    pub mm_steps_phi1: usize,
    pub mm_steps_phi2: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    /// Sum rate of the initial point.
    pub initial_sum_rate: f64,
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn sum_rates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sum_rate).collect()
    }

    /// First iteration whose relative change from the previous sum rate is below `tol`.
    pub fn plateau_iteration(&self, tol: f64) -> Option<usize> {
        let mut prev = self.initial_sum_rate;
        for r in &self.records {
            if relative_change(prev, r.sum_rate) < tol {
                return Some(r.iteration);
            }
            prev = r.sum_rate;
        }
        None
    }
}

/// Receives iteration records as they are produced.
pub trait TraceSink {
    fn record(&mut self, record: &IterationRecord);
}

impl<F: FnMut(&IterationRecord)> TraceSink for F {
    fn record(&mut self, record: &IterationRecord) {
        self(record)
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub beamformers: BeamformerSet,
    pub reflection: ReflectionState,
    pub trace: IterationTrace,
    /// Sum rate of the returned point.
    pub sum_rate: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn relative_change(prev: f64, next: f64) -> f64 {
    let diff = (next - prev).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / prev.abs().max(f64::MIN_POSITIVE)
    }
}

/// Random initial reflection (uniform phases, snapped to the grid when quantized).
pub fn initial_reflection(m: usize, resolution: Resolution, seed: u64) -> ReflectionState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut draw = || {
        let v = CVector::from_fn(m, |_, _| {
            C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)
        });
        project_phases(&v, resolution)
    };
    let phi1 = draw();
    let phi2 = draw();
    ReflectionState::new(phi1, phi2, resolution)
}

fn check_inputs(
    channels: &ChannelSet,
    params: &NoiseAndGainParams,
    config: &OptimizerConfig,
) -> Result<()> {
    channels.validate()?;
    params.validate()?;
    config.validate()?;
    if params.sigma_k_sq.len() != channels.n_users() {
        return Err(Error::Dimension(format!(
            "{} noise powers for {} users",
            params.sigma_k_sq.len(),
            channels.n_users()
        )));
    }
    Ok(())
}

/// Runs the joint design from the seeded initialization in `config`.
pub fn run(
    channels: &ChannelSet,
    params: &NoiseAndGainParams,
    config: &OptimizerConfig,
) -> Result<Outcome> {
    run_with_sink(channels, params, config, &mut |_: &IterationRecord| {})
}

/// As [`run`], streaming every iteration record into `sink`.
pub fn run_with_sink(
    channels: &ChannelSet,
    params: &NoiseAndGainParams,
    config: &OptimizerConfig,
    sink: &mut dyn TraceSink,
) -> Result<Outcome> {
    check_inputs(channels, params, config)?;
    let reflection = initial_reflection(channels.n_elements(), config.resolution, config.seed);
    let beamformers = matched_filter(channels, &reflection, params)?;
    run_from(channels, params, config, reflection, beamformers, sink)
}

/// Runs the joint design from a given starting point.
pub fn run_from(
    channels: &ChannelSet,
    params: &NoiseAndGainParams,
    config: &OptimizerConfig,
    mut reflection: ReflectionState,
    mut beamformers: BeamformerSet,
    sink: &mut dyn TraceSink,
) -> Result<Outcome> {
    check_inputs(channels, params, config)?;
    reflection.resolution = config.resolution;

    let initial_sum_rate = system::sum_rate(channels, &reflection, &beamformers, params)?;
    let mut trace = IterationTrace {
        initial_sum_rate,
        records: Vec::new(),
    };
    let mut best = (initial_sum_rate, beamformers.clone(), reflection.clone());
    let mut prev_rate = initial_sum_rate;
    let mut converged = false;

    for iteration in 1..=config.outer_max_iters {
        let gamma = update_gamma(channels, &reflection, &beamformers, params)?;
        let after_gamma = f_r_surrogate(channels, &reflection, &beamformers, &gamma, params)?;
        let tau = update_tau(channels, &reflection, &beamformers, &gamma, params)?;
        let g = |refl: &ReflectionState, bf: &BeamformerSet| {
            g_r_surrogate(channels, refl, bf, &gamma, &tau, params)
        };
        let after_tau = g(&reflection, &beamformers)?;

        let eff = effective_channels(channels, &reflection, &tau, params)?;
        let (w, mu) = update_beamformers(&eff, &gamma, params.p_t, config)?;
        beamformers = w;
        let after_beamformers = g(&reflection, &beamformers)?;

        let phi1 = update_phi1(channels, &reflection, &beamformers, &gamma, &tau, params, config)?;
        reflection.phi1 = phi1.phi;
        let after_phi1 = g(&reflection, &beamformers)?;

        let phi2 = update_phi2(channels, &reflection, &beamformers, &gamma, &tau, params, config)?;
        reflection.phi2 = phi2.phi;
        let after_phi2 = g(&reflection, &beamformers)?;

        let rate = system::sum_rate(channels, &reflection, &beamformers, params)?;
        let record = IterationRecord {
            iteration,
            sum_rate: rate,
            objectives: BlockObjectives {
                after_gamma,
                after_tau,
                after_beamformers,
                after_phi1,
                after_phi2,
            },
            transmit_power: system::transmit_power(&beamformers),
            mu,
            mm_steps_phi1: phi1.steps,
            mm_steps_phi2: phi2.steps,
        };
        sink.record(&record);
        trace.records.push(record);

        if rate > best.0 {
            best = (rate, beamformers.clone(), reflection.clone());
        }
        if relative_change(prev_rate, rate) < config.outer_rel_tol {
            converged = true;
            break;
        }
        prev_rate = rate;
    }

    let iterations = trace.records.len();
    let (sum_rate, beamformers, reflection) = best;
    Ok(Outcome {
        beamformers,
        reflection,
        trace,
        sum_rate,
        iterations,
        converged,
    })
}

/// Alternates the auxiliary and beamforming blocks with the reflection held
/// fixed, starting from matched filtering. Returns the beamformers and their
/// sum rate.
pub fn optimize_beamformers(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    params: &NoiseAndGainParams,
    config: &OptimizerConfig,
) -> Result<(BeamformerSet, f64)> {
    check_inputs(channels, params, config)?;
    let mut beamformers = matched_filter(channels, reflection, params)?;
    let mut rate = system::sum_rate(channels, reflection, &beamformers, params)?;
    for _ in 0..config.outer_max_iters {
        let gamma = update_gamma(channels, reflection, &beamformers, params)?;
        let tau = update_tau(channels, reflection, &beamformers, &gamma, params)?;
        let eff = effective_channels(channels, reflection, &tau, params)?;
        beamformers = update_beamformers(&eff, &gamma, params.p_t, config)?.0;
        let next = system::sum_rate(channels, reflection, &beamformers, params)?;
        let change = relative_change(rate, next);
        rate = next;
        if change < config.outer_rel_tol {
            break;
        }
    }
    Ok((beamformers, rate))
}
