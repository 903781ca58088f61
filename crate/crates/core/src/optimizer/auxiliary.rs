//! Closed-form updates of the auxiliary variables `gamma` and `tau`.

use crate::channel::ChannelSet;
use crate::system::{BeamformerSet, NoiseAndGainParams, ReflectionState, UserLinks};
use crate::{Error, Result, C64};

/// `gamma_k = SINR_k`, the maximizer of `f_R` along each `gamma_k`.
pub fn update_gamma(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    params: &NoiseAndGainParams,
) -> Result<Vec<f64>> {
    crate::system::sinrs(channels, reflection, beamformers, params)
}

/// `tau_k = sqrt(g_k (1 + gamma_k)) e_k^H w_k / (g_k sum_i |e_k^H w_i|^2 + n_k)`.
///
/// The denominator runs over every beam including `i = k`.
pub fn update_tau(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    gamma: &[f64],
    params: &NoiseAndGainParams,
) -> Result<Vec<C64>> {
    if gamma.len() != channels.n_users() {
        return Err(Error::Dimension("gamma must have length K".into()));
    }
    if gamma.iter().any(|&g| !(g >= 0.0)) {
        return Err(Error::Domain("gamma must be nonnegative".into()));
    }
    let links = UserLinks::new(channels, reflection, params)?;
    let amp = links.amplitudes(beamformers);
    Ok(tau_from_links(&links, &amp, gamma))
}

pub(crate) fn tau_from_links(links: &UserLinks, amp: &[Vec<C64>], gamma: &[f64]) -> Vec<C64> {
    gamma
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            amp[k][k] * ((links.gain[k] * (1.0 + g)).sqrt() / links.total_received(amp, k))
        })
        .collect()
}
