//! Physical-layer evaluation: SINRs, sum rate, transmit power and the two
//! fractional-programming surrogates of the sum rate.
//!
//! Every user sees the beamformers through one effective channel `e_k` in
//! `C^N`, a power gain `g_k` and an effective noise power `n_k`:
//!
//! - reflect users `k < K-1`: `e_k^H = h_k^H Phi1 G`, `g_k = 1`, `n_k = sigma_k^2`;
//! - relay user `K-1`: `e^H = (h^H Phi2 g_r) g_t^H Phi1 G`, `g = beta`,
//!   `n = beta sigma_0^2 |h^H Phi2 g_r|^2 + sigma^2`.
//!
//! The surrogates are reported in bits. Internally they are the natural-log
//! Lagrangian-dual and quadratic transforms scaled by `1/ln 2`, so that the
//! auxiliary update `gamma_k = SINR_k` is their exact maximizer and their
//! optimal value is the sum rate in bits/s/Hz.

use std::f64::consts::LN_2;

use crate::channel::ChannelSet;
use crate::{CVector, Error, Result, C64};

/// Phase resolution of the RIS phase shifters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resolution {
    #[default]
    Continuous,
    /// `b`-bit phase shifters: phases are multiples of `2 pi / 2^b`.
    Bits(u32),
}

impl Resolution {
    pub fn step(&self) -> Option<f64> {
        match *self {
            Resolution::Continuous => None,
            Resolution::Bits(b) => Some(2.0 * std::f64::consts::PI / 2f64.powi(b as i32)),
        }
    }
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Resolution::Continuous => write!(f, "inf"),
            Resolution::Bits(b) => write!(f, "{b}"),
        }
    }
}

/// Reflection coefficients of both faces.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionState {
    pub phi1: CVector,
    pub phi2: CVector,
    pub resolution: Resolution,
}

impl ReflectionState {
    pub fn new(phi1: CVector, phi2: CVector, resolution: Resolution) -> Self {
        Self {
            phi1,
            phi2,
            resolution,
        }
    }

    /// All-ones reflection (every phase zero).
    pub fn identity(m: usize, resolution: Resolution) -> Self {
        let ones = CVector::from_element(m, C64::new(1.0, 0.0));
        Self::new(ones.clone(), ones, resolution)
    }

    pub fn n_elements(&self) -> usize {
        self.phi1.len()
    }

    /// Largest deviation of any coefficient from unit modulus.
    pub fn max_modulus_error(&self) -> f64 {
        self.phi1
            .iter()
            .chain(self.phi2.iter())
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest distance of any phase from the quantization grid (0 when continuous).
    pub fn max_grid_error(&self) -> f64 {
        let Some(step) = self.resolution.step() else {
            return 0.0;
        };
        self.phi1
            .iter()
            .chain(self.phi2.iter())
            .map(|z| {
                let x = crate::linalg::phase_angle(*z) / step;
                (x - x.round()).abs() * step
            })
            .fold(0.0, f64::max)
    }
}

/// Transmit beamformers, one `N`-vector per user.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<CVector>,
}

impl BeamformerSet {
    pub fn zeros(n_users: usize, n_antennas: usize) -> Self {
        Self {
            w: vec![CVector::zeros(n_antennas); n_users],
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w: self.w.iter().map(|w| w * C64::new(c, 0.0)).collect(),
        }
    }
}

/// Noise powers, amplifier gain and power budget, all linear.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseAndGainParams {
    /// Receiver noise power per user, W.
    pub sigma_k_sq: Vec<f64>,
    /// Amplifier thermal noise power, W.
    pub sigma0_sq: f64,
    /// Amplifier power gain.
    pub beta: f64,
    /// Transmit power budget, W.
    pub p_t: f64,
}

impl NoiseAndGainParams {
    pub fn new(sigma_k_sq: Vec<f64>, sigma0_sq: f64, beta: f64, p_t: f64) -> Result<Self> {
        let p = Self {
            sigma_k_sq,
            sigma0_sq,
            beta,
            p_t,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same receiver noise at every user.
    pub fn uniform(n_users: usize, sigma_sq: f64, sigma0_sq: f64, beta: f64, p_t: f64) -> Result<Self> {
        Self::new(vec![sigma_sq; n_users], sigma0_sq, beta, p_t)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if self.sigma_k_sq.is_empty() || !self.sigma_k_sq.iter().all(|&s| pos(s)) {
            return Err(Error::Domain("receiver noise powers must be positive".into()));
        }
        if !pos(self.sigma0_sq) {
            return Err(Error::Domain("amplifier noise power must be positive".into()));
        }
        if !pos(self.beta) {
            return Err(Error::Domain("amplifier gain must be positive".into()));
        }
        if !pos(self.p_t) {
            return Err(Error::Domain(format!(
                "transmit power budget must be positive, got {}",
                self.p_t
            )));
        }
        Ok(())
    }
}

/// Fractional-programming auxiliary variables.
///
/// Transmitted symbols are assumed unit power, so they never appear as values.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryState {
    pub gamma: Vec<f64>,
    pub tau: Vec<C64>,
}

impl AuxiliaryState {
    pub fn zeros(n_users: usize) -> Self {
        Self {
            gamma: vec![0.0; n_users],
            tau: vec![C64::new(0.0, 0.0); n_users],
        }
    }
}

/// Per-user effective channels, gains and noise for fixed reflection.
#[derive(Debug, Clone)]
pub struct UserLinks {
    pub effective: Vec<CVector>,
    pub gain: Vec<f64>,
    pub noise: Vec<f64>,
    /// `h_K^H Phi2 g_r`, the face-2 combining scalar of the relay user.
    pub relay_coupling: C64,
}

impl UserLinks {
    pub fn new(
        channels: &ChannelSet,
        reflection: &ReflectionState,
        params: &NoiseAndGainParams,
    ) -> Result<Self> {
        check_dims(channels, reflection, params)?;
        let k_total = channels.n_users();
        let gh = channels.g_bs_ris.adjoint();
        let phi1_conj = reflection.phi1.map(|z| z.conj());

        let mut effective = Vec::with_capacity(k_total);
        let mut gain = Vec::with_capacity(k_total);
        let mut noise = Vec::with_capacity(k_total);
        for k in 0..k_total - 1 {
            // e_k = G^H Phi1^H h_k
            effective.push(&gh * phi1_conj.component_mul(&channels.h_users[k]));
            gain.push(1.0);
            noise.push(params.sigma_k_sq[k]);
        }
        let h_relay = &channels.h_users[k_total - 1];
        let coupling = h_relay.dotc(&reflection.phi2.component_mul(&channels.g_r));
        let through_horn = &gh * phi1_conj.component_mul(&channels.g_t);
        effective.push(through_horn * coupling.conj());
        gain.push(params.beta);
        noise.push(params.beta * params.sigma0_sq * coupling.norm_sqr() + params.sigma_k_sq[k_total - 1]);

        Ok(Self {
            effective,
            gain,
            noise,
            relay_coupling: coupling,
        })
    }

    pub fn n_users(&self) -> usize {
        self.effective.len()
    }

    /// `amp[k][i] = e_k^H w_i`, excluding the gain.
    pub fn amplitudes(&self, beamformers: &BeamformerSet) -> Vec<Vec<C64>> {
        self.effective
            .iter()
            .map(|e| beamformers.w.iter().map(|w| e.dotc(w)).collect())
            .collect()
    }

    /// `(signal, interference + noise)` of user `k`, with `interference`
    /// over `i != k`.
    fn signal_and_disturbance(&self, amp: &[Vec<C64>], k: usize) -> (f64, f64) {
        let g = self.gain[k];
        let signal = g * amp[k][k].norm_sqr();
        let interference: f64 = amp[k]
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        (signal, g * interference + self.noise[k])
    }

    pub fn sinr(&self, amp: &[Vec<C64>], k: usize) -> f64 {
        let (s, d) = self.signal_and_disturbance(amp, k);
        s / d
    }

    /// Denominator of the FP fractions: all beams including `i = k`, plus noise.
    pub fn total_received(&self, amp: &[Vec<C64>], k: usize) -> f64 {
        let (s, d) = self.signal_and_disturbance(amp, k);
        s + d
    }
}

fn check_dims(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    params: &NoiseAndGainParams,
) -> Result<()> {
    channels.validate()?;
    let m = channels.n_elements();
    if reflection.phi1.len() != m || reflection.phi2.len() != m {
        return Err(Error::Dimension(format!(
            "reflection vectors must have length M = {m}"
        )));
    }
    if params.sigma_k_sq.len() != channels.n_users() {
        return Err(Error::Dimension(format!(
            "{} noise powers for {} users",
            params.sigma_k_sq.len(),
            channels.n_users()
        )));
    }
    Ok(())
}

fn check_beamformers(channels: &ChannelSet, beamformers: &BeamformerSet) -> Result<()> {
    let (k, n) = (channels.n_users(), channels.n_antennas());
    if beamformers.w.len() != k || beamformers.w.iter().any(|w| w.len() != n) {
        return Err(Error::Dimension(format!(
            "expected {k} beamformers of length N = {n}"
        )));
    }
    Ok(())
}

fn check_aux(channels: &ChannelSet, gamma: &[f64], tau: Option<&[C64]>) -> Result<()> {
    let k = channels.n_users();
    if gamma.len() != k || tau.is_some_and(|t| t.len() != k) {
        return Err(Error::Dimension(format!("auxiliary vectors must have length K = {k}")));
    }
    if gamma.iter().any(|&g| !(g >= 0.0)) {
        return Err(Error::Domain("gamma must be nonnegative".into()));
    }
    Ok(())
}

/// SINR of reflect-served user `k` (0-based, `k < K - 1`).
pub fn sinr_reflect_user(
    k: usize,
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    params: &NoiseAndGainParams,
) -> Result<f64> {
    let reflect_users = channels.n_users().saturating_sub(1);
    if k >= reflect_users {
        return Err(Error::UserIndex {
            index: k,
            valid: format!("0..{reflect_users}"),
        });
    }
    check_beamformers(channels, beamformers)?;
    let links = UserLinks::new(channels, reflection, params)?;
    let amp = links.amplitudes(beamformers);
    Ok(links.sinr(&amp, k))
}

/// SINR of the relay-served (last) user.
pub fn sinr_relay_user(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    params: &NoiseAndGainParams,
) -> Result<f64> {
    check_beamformers(channels, beamformers)?;
    let links = UserLinks::new(channels, reflection, params)?;
    let amp = links.amplitudes(beamformers);
    Ok(links.sinr(&amp, links.n_users() - 1))
}

/// SINR of every user, relay user last.
pub fn sinrs(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    params: &NoiseAndGainParams,
) -> Result<Vec<f64>> {
    check_beamformers(channels, beamformers)?;
    let links = UserLinks::new(channels, reflection, params)?;
    let amp = links.amplitudes(beamformers);
    Ok((0..links.n_users()).map(|k| links.sinr(&amp, k)).collect())
}

/// Sum rate in bits/s/Hz.
pub fn sum_rate(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    params: &NoiseAndGainParams,
) -> Result<f64> {
    Ok(sinrs(channels, reflection, beamformers, params)?
        .iter()
        .map(|s| s.ln_1p())
        .sum::<f64>()
        / LN_2)
}

pub fn transmit_power(beamformers: &BeamformerSet) -> f64 {
    beamformers.w.iter().map(|w| w.norm_squared()).sum()
}

/// Lagrangian-dual surrogate `f_R`, in bits.
///
/// Equals the sum rate at `gamma = SINR` and is strictly concave in each
/// `gamma_k`.
pub fn f_r_surrogate(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    gamma: &[f64],
    params: &NoiseAndGainParams,
) -> Result<f64> {
    check_beamformers(channels, beamformers)?;
    check_aux(channels, gamma, None)?;
    let links = UserLinks::new(channels, reflection, params)?;
    let amp = links.amplitudes(beamformers);
    let mut nats = 0.0;
    for (k, &g) in gamma.iter().enumerate() {
        let signal = links.gain[k] * amp[k][k].norm_sqr();
        nats += g.ln_1p() - g + (1.0 + g) * signal / links.total_received(&amp, k);
    }
    Ok(nats / LN_2)
}

/// Quadratic-transform surrogate `g_R`, in bits.
pub fn g_r_surrogate(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    gamma: &[f64],
    tau: &[C64],
    params: &NoiseAndGainParams,
) -> Result<f64> {
    check_beamformers(channels, beamformers)?;
    check_aux(channels, gamma, Some(tau))?;
    let links = UserLinks::new(channels, reflection, params)?;
    let amp = links.amplitudes(beamformers);
    Ok(g_r_from_links(&links, &amp, gamma, tau) / LN_2)
}

/// `g_R` in nats from precomputed links.
pub(crate) fn g_r_from_links(links: &UserLinks, amp: &[Vec<C64>], gamma: &[f64], tau: &[C64]) -> f64 {
    let mut nats = 0.0;
    for (k, (&g, &t)) in gamma.iter().zip(tau).enumerate() {
        let cross = 2.0 * (links.gain[k] * (1.0 + g)).sqrt() * (t.conj() * amp[k][k]).re;
        nats += g.ln_1p() - g + cross - t.norm_sqr() * links.total_received(amp, k);
    }
    nats
}
