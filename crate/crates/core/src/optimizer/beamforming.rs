//! Transmit beamforming block: closed form `w_k = (A + mu I)^-1 sqrt(1+gamma_k) h~_k`
//! with the multiplier `mu` found by bisection on the power budget.

use nalgebra::DVector;

use super::OptimizerConfig;
use crate::channel::ChannelSet;
use crate::linalg::{gram, hermitian_eigen};
use crate::system::{BeamformerSet, NoiseAndGainParams, ReflectionState, UserLinks};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Conditioning beyond which a ridge is added before accepting `mu = 0`.
const MAX_CONDITION: f64 = 1e12;
const MAX_BISECTION_STEPS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct EffectiveChannels {
    /// `h~_k`, one `N`-vector per user.
    pub h_tilde: Vec<CVector>,
    /// `A = sum_k h~_k h~_k^H`.
    pub a_matrix: CMatrix,
}

impl EffectiveChannels {
    pub fn from_vectors(h_tilde: Vec<CVector>) -> Result<Self> {
        let n = h_tilde.first().map(|h| h.len()).unwrap_or(0);
        if h_tilde.iter().any(|h| h.len() != n) {
            return Err(Error::Dimension("effective channels of unequal length".into()));
        }
        let a_matrix = gram(&h_tilde, n);
        Ok(Self { h_tilde, a_matrix })
    }
}

/// `h~_k = sqrt(g_k) tau_k e_k`, where `e_k` is the user's end-to-end channel.
pub fn effective_channels(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    tau: &[C64],
    params: &NoiseAndGainParams,
) -> Result<EffectiveChannels> {
    let links = UserLinks::new(channels, reflection, params)?;
    if tau.len() != links.n_users() {
        return Err(Error::Dimension("tau must have length K".into()));
    }
    EffectiveChannels::from_vectors(
        links
            .effective
            .iter()
            .zip(&links.gain)
            .zip(tau)
            .map(|((e, &g), &t)| e * (t * g.sqrt()))
            .collect(),
    )
}

/// Power profile `P(mu) = sum_n c_n / (lambda_n + mu)^2` in the eigenbasis of `A`.
struct PowerProfile {
    eigenvalues: DVector<f64>,
    basis: CMatrix,
    /// Projections `U^H sqrt(1+gamma_k) h~_k`.
    projections: Vec<CVector>,
    weights: Vec<f64>,
}

impl PowerProfile {
    fn power(&self, shift: f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .map(|(&l, &c)| if c == 0.0 { 0.0 } else { c / (l + shift).powi(2) })
            .sum()
    }

    fn beamformers(&self, shift: f64) -> BeamformerSet {
        let inv = self.eigenvalues.map(|l| C64::new(1.0 / (l + shift), 0.0));
        BeamformerSet {
            w: self
                .projections
                .iter()
                .map(|y| &self.basis * y.component_mul(&inv))
                .collect(),
        }
    }
}

/// Solves the power-constrained beamforming subproblem.
///
/// Returns the beamformers and the multiplier `mu`. Either `mu = 0` and the
/// power is within budget, or the power meets the budget from below with
/// both the gap and `mu` times the gap at most `config.bisection_power_tol * p_t`
/// (or as close as floating point allows).
pub fn update_beamformers(
    effective: &EffectiveChannels,
    gamma: &[f64],
    p_t: f64,
    config: &OptimizerConfig,
) -> Result<(BeamformerSet, f64)> {
    if !(p_t > 0.0 && p_t.is_finite()) {
        return Err(Error::Domain(format!("power budget must be positive, got {p_t}")));
    }
    let k = effective.h_tilde.len();
    if gamma.len() != k {
        return Err(Error::Dimension("gamma must have length K".into()));
    }
    let n = effective.a_matrix.nrows();
    let trace: f64 = (0..n).map(|i| effective.a_matrix[(i, i)].re).sum();
    if !(trace > 0.0) {
        // every h~_k vanishes: any feasible w is optimal
        return Ok((BeamformerSet::zeros(k, n), 0.0));
    }

    let (eigenvalues, basis) = hermitian_eigen(&effective.a_matrix);
    let eigenvalues = eigenvalues.map(|l| l.max(0.0));
    let projections: Vec<CVector> = effective
        .h_tilde
        .iter()
        .zip(gamma)
        .map(|(h, &g)| basis.adjoint() * (h * C64::new((1.0 + g).sqrt(), 0.0)))
        .collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| projections.iter().map(|y| y[i].norm_sqr()).sum())
        .collect();
    let profile = PowerProfile {
        eigenvalues,
        basis,
        projections,
        weights,
    };

    let l_max = profile.eigenvalues.max();
    let l_min = profile.eigenvalues.min();
    let ridge = if l_min * MAX_CONDITION < l_max {
        1e-12 * trace / n as f64
    } else {
        0.0
    };
    if profile.power(ridge) <= p_t {
        return Ok((profile.beamformers(ridge), 0.0));
    }

    // P(mu) <= sum_n c_n / mu^2, so this bracket is always feasible.
    let total_weight: f64 = profile.weights.iter().sum();
    let mut hi = (total_weight / p_t).sqrt();
    let mut grow = 0;
    while profile.power(hi) > p_t {
        hi *= config.bisection_mu_bracket_growth;
        grow += 1;
        if grow > 200 {
            return Err(Error::Bisection {
                iterations: grow,
                mu: hi,
                power: profile.power(hi),
                budget: p_t,
            });
        }
    }
    let mut lo = 0.0;
    let tol = config.bisection_power_tol * p_t;
    for _ in 0..MAX_BISECTION_STEPS {
        // a large multiplier amplifies the gap in mu * (P_T - power)
        let power_hi = profile.power(hi);
        if p_t - power_hi <= tol / hi.max(1.0) {
            return Ok((profile.beamformers(hi), hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted in floating point; hi is the feasible end
            return Ok((profile.beamformers(hi), hi));
        }
        if profile.power(mid) > p_t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Bisection {
        iterations: MAX_BISECTION_STEPS,
        mu: hi,
        power: profile.power(hi),
        budget: p_t,
    })
}

/// Matched-filter beamformers at full power through the given reflection.
pub fn matched_filter(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    params: &NoiseAndGainParams,
) -> Result<BeamformerSet> {
    let links = UserLinks::new(channels, reflection, params)?;
    let k = links.n_users();
    let n = channels.n_antennas();
    let per_user = (params.p_t / k as f64).sqrt();
    Ok(BeamformerSet {
        w: links
            .effective
            .iter()
            .map(|e| {
                let norm = e.norm();
                if norm > 0.0 && norm.is_finite() {
                    e * C64::new(per_user / norm, 0.0)
                } else {
                    CVector::from_element(n, C64::new(per_user / (n as f64).sqrt(), 0.0))
                }
            })
            .collect(),
    })
}
