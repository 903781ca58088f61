//! Majorization-minimization updates of the two reflection vectors.
//!
//! With the other blocks fixed, each face solves
//! `min phi^H Q phi - 2 Re{phi^H d}` over unit-modulus `phi`. Replacing `Q`
//! by `lambda_max I` around the current iterate gives a majorizer whose
//! minimizer is the phase of `p = (lambda_max I - Q) phi_t + d`.

use super::OptimizerConfig;
use crate::channel::ChannelSet;
use crate::linalg::{gram, largest_eigenvalue, phase_angle, unit_phase};
use crate::system::{BeamformerSet, NoiseAndGainParams, ReflectionState, Resolution, UserLinks};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Unit-modulus quadratic program `phi^H quad phi - 2 Re{phi^H linear}`.
#[derive(Debug, Clone)]
pub struct PhaseProblem {
    pub quad: CMatrix,
    pub linear: CVector,
}

impl PhaseProblem {
    pub fn objective(&self, phi: &CVector) -> f64 {
        (phi.adjoint() * &self.quad * phi)[(0, 0)].re - 2.0 * phi.dotc(&self.linear).re
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        largest_eigenvalue(&self.quad)
    }

    /// `p = (lambda_max I - quad) phi_t + linear`.
    pub fn mm_direction(&self, lambda_max: f64, phi_t: &CVector) -> CVector {
        phi_t * C64::new(lambda_max, 0.0) - &self.quad * phi_t + &self.linear
    }

    /// Majorizer of [`Self::objective`] built at `phi_t`, evaluated at `phi`.
    pub fn surrogate(&self, lambda_max: f64, phi_t: &CVector, phi: &CVector) -> f64 {
        let shifted_t = phi_t * C64::new(lambda_max, 0.0) - &self.quad * phi_t;
        lambda_max * phi.norm_squared() - 2.0 * phi.dotc(&shifted_t).re
            + phi_t.dotc(&shifted_t).re
            - 2.0 * phi.dotc(&self.linear).re
    }
}

/// Data of the face-1 subproblem.
///
/// `r_{k,i}^H phi1` is user `k`'s amplitude from beam `i`, scaled by `tau_k^*`
/// (and `sqrt(beta)` with the face-2 coupling for the relay user);
/// `quad = sum_{k,i} r_{k,i} r_{k,i}^H`, `linear = sum_k sqrt(1+gamma_k) r_{k,k}`.
pub fn mm_phase_data_phi1(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    gamma: &[f64],
    tau: &[C64],
    params: &NoiseAndGainParams,
) -> Result<PhaseProblem> {
    check_aux(channels, gamma, tau)?;
    let links = UserLinks::new(channels, reflection, params)?;
    let k_total = channels.n_users();
    let m = channels.n_elements();
    let received: Vec<CVector> = beamformers
        .w
        .iter()
        .map(|w| (&channels.g_bs_ris * w).map(|z| z.conj()))
        .collect();

    let mut columns = Vec::with_capacity(k_total * k_total);
    let mut linear = CVector::zeros(m);
    for k in 0..k_total {
        // per-element weight of r_{k,i} before multiplying by conj(G w_i)
        let front = if k + 1 < k_total {
            &channels.h_users[k] * tau[k]
        } else {
            &channels.g_t * (tau[k] * links.relay_coupling.conj() * params.beta.sqrt())
        };
        for (i, rx) in received.iter().enumerate() {
            let r = front.component_mul(rx);
            if i == k {
                linear += &r * C64::new((1.0 + gamma[k]).sqrt(), 0.0);
            }
            columns.push(r);
        }
    }
    Ok(PhaseProblem {
        quad: gram(&columns, m),
        linear,
    })
}

/// Data of the face-2 subproblem.
///
/// `v_{K,k}^H phi2 = sqrt(beta) tau_K^* (g_t^H Phi1 G w_k) (h_K^H Phi2 g_r)`,
/// `quad = sum_k v v^H + beta sigma_0^2 |tau_K|^2 e e^H` with `e^H phi2 = h_K^H Phi2 g_r`,
/// and `linear = sqrt(1+gamma_K) v_{K,K}`. The second term of `quad` carries the
/// amplifier noise, which also depends on `phi2`.
pub fn mm_phase_data_phi2(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    gamma: &[f64],
    tau: &[C64],
    params: &NoiseAndGainParams,
) -> Result<PhaseProblem> {
    check_aux(channels, gamma, tau)?;
    crate::system::UserLinks::new(channels, reflection, params)?;
    let k_total = channels.n_users();
    let relay = k_total - 1;
    let m = channels.n_elements();
    let e = channels.h_users[relay].component_mul(&channels.g_r.map(|z| z.conj()));
    let horn_amp: Vec<C64> = beamformers
        .w
        .iter()
        .map(|w| channels.g_t.dotc(&reflection.phi1.component_mul(&(&channels.g_bs_ris * w))))
        .collect();

    let scale = tau[relay] * params.beta.sqrt();
    let mut columns: Vec<CVector> = horn_amp.iter().map(|t| &e * (scale * t.conj())).collect();
    let linear = &columns[relay] * C64::new((1.0 + gamma[relay]).sqrt(), 0.0);
    columns.push(&e * C64::new(tau[relay].norm() * (params.beta * params.sigma0_sq).sqrt(), 0.0));
    Ok(PhaseProblem {
        quad: gram(&columns, m),
        linear,
    })
}

fn check_aux(channels: &ChannelSet, gamma: &[f64], tau: &[C64]) -> Result<()> {
    let k = channels.n_users();
    if gamma.len() != k || tau.len() != k {
        return Err(Error::Dimension("auxiliary vectors must have length K".into()));
    }
    Ok(())
}

/// Rounds every phase of `p` to the nearest multiple of `2 pi / 2^bits`.
pub fn quantize_phases(p: &CVector, bits: u32) -> Result<CVector> {
    if bits == 0 {
        return Err(Error::Domain("phase resolution needs at least one bit".into()));
    }
    let step = Resolution::Bits(bits).step().expect("finite resolution");
    Ok(p.map(|z| {
        let k = (phase_angle(z) / step).round();
        C64::from_polar(1.0, k * step)
    }))
}

/// Projects `p` onto the feasible phase set.
pub fn project_phases(p: &CVector, resolution: Resolution) -> CVector {
    match resolution {
        Resolution::Continuous => p.map(unit_phase),
        Resolution::Bits(b) => quantize_phases(p, b).expect("bits validated on construction"),
    }
}

/// One MM step from `phi_t`.
pub fn mm_step(problem: &PhaseProblem, lambda_max: f64, phi_t: &CVector, resolution: Resolution) -> CVector {
    project_phases(&problem.mm_direction(lambda_max, phi_t), resolution)
}

/// Result of an MM inner loop.
#[derive(Debug, Clone)]
pub struct MmOutcome {
    pub phi: CVector,
    pub steps: usize,
    pub objective: f64,
}

/// Iterates MM steps until the relative objective change drops below
/// `config.mm_rel_tol`, the iterate stops moving, or `config.mm_max_iters`
/// steps have been taken.
pub fn mm_minimize(
    problem: &PhaseProblem,
    start: &CVector,
    resolution: Resolution,
    config: &OptimizerConfig,
) -> MmOutcome {
    let lambda_max = problem.largest_eigenvalue().max(0.0);
    let mut phi = start.clone();
    let mut objective = problem.objective(&phi);
    let mut steps = 0;
    while steps < config.mm_max_iters {
        let next = mm_step(problem, lambda_max, &phi, resolution);
        steps += 1;
        let next_objective = problem.objective(&next);
        let unchanged = next == phi;
        let change = (next_objective - objective).abs();
        phi = next;
        let scale = objective.abs().max(next_objective.abs());
        objective = next_objective;
        if unchanged || change <= config.mm_rel_tol * scale {
            break;
        }
    }
    MmOutcome {
        phi,
        steps,
        objective,
    }
}

/// MM update of `phi1` with everything else fixed.
pub fn update_phi1(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    gamma: &[f64],
    tau: &[C64],
    params: &NoiseAndGainParams,
    config: &OptimizerConfig,
) -> Result<MmOutcome> {
    let problem = mm_phase_data_phi1(channels, reflection, beamformers, gamma, tau, params)?;
    Ok(mm_minimize(&problem, &reflection.phi1, reflection.resolution, config))
}

/// MM update of `phi2` with everything else fixed.
pub fn update_phi2(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    gamma: &[f64],
    tau: &[C64],
    params: &NoiseAndGainParams,
    config: &OptimizerConfig,
) -> Result<MmOutcome> {
    let problem = mm_phase_data_phi2(channels, reflection, beamformers, gamma, tau, params)?;
    Ok(mm_minimize(&problem, &reflection.phi2, reflection.resolution, config))
}
