#![allow(dead_code)]

use dfris_core::channel::{generate_channels, ChannelSet, LinkPathLoss, ScenarioGeometry};
use dfris_core::optimizer::{update_gamma, update_tau};
use dfris_core::system::{BeamformerSet, NoiseAndGainParams, ReflectionState, Resolution};
use dfris_core::{CVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct State {
    pub channels: ChannelSet,
    pub reflection: ReflectionState,
    pub beamformers: BeamformerSet,
    pub params: NoiseAndGainParams,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_phases<R: Rng>(m: usize, rng: &mut R) -> CVector {
    CVector::from_fn(m, |_, _| C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU))
}

pub fn gaussian_vector<R: Rng>(n: usize, scale: f64, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * scale
    })
}

/// Reference-layout channels with random phases and random beams at about
/// `p_t` total power.
pub fn random_state(n: usize, k: usize, m: usize, seed: u64) -> State {
    let geom = ScenarioGeometry::default_layout(n, m, k);
    let channels = generate_channels(&geom, &LinkPathLoss::default(), seed).unwrap();
    let mut r = rng(seed.wrapping_mul(7919).wrapping_add(17));
    let reflection = ReflectionState::new(random_phases(m, &mut r), random_phases(m, &mut r), Resolution::Continuous);
    let p_t = 10.0;
    let scale = (p_t / (2.0 * (n * k) as f64)).sqrt();
    let beamformers = BeamformerSet {
        w: (0..k).map(|_| gaussian_vector(n, scale, &mut r)).collect(),
    };
    let beta = 10f64.powf(r.random_range(0.0..4.0));
    let params = NoiseAndGainParams::uniform(k, 1e-11, 1e-10, beta, p_t).unwrap();
    State {
        channels,
        reflection,
        beamformers,
        params,
    }
}

impl State {
    pub fn gamma_tau(&self) -> (Vec<f64>, Vec<C64>) {
        let gamma = update_gamma(&self.channels, &self.reflection, &self.beamformers, &self.params).unwrap();
        let tau = update_tau(&self.channels, &self.reflection, &self.beamformers, &gamma, &self.params).unwrap();
        (gamma, tau)
    }
}

/// `a[k][i]`: user `k`'s received amplitude from beam `i` before the
/// amplifier gain, written out element by element.
pub fn loop_amplitudes(ch: &ChannelSet, refl: &ReflectionState, bf: &BeamformerSet) -> Vec<Vec<C64>> {
    let (m, n, k) = (ch.n_elements(), ch.n_antennas(), ch.n_users());
    let zero = C64::new(0.0, 0.0);
    let mut at_face = vec![vec![zero; m]; k];
    for i in 0..k {
        for e in 0..m {
            let mut s = zero;
            for a in 0..n {
                s += ch.g_bs_ris[(e, a)] * bf.w[i][a];
            }
            at_face[i][e] = refl.phi1[e] * s;
        }
    }
    let mut coupling = zero;
    for e in 0..m {
        coupling += ch.h_users[k - 1][e].conj() * refl.phi2[e] * ch.g_r[e];
    }
    (0..k)
        .map(|u| {
            (0..k)
                .map(|i| {
                    let mut s = zero;
                    for e in 0..m {
                        let front = if u + 1 < k { ch.h_users[u][e] } else { ch.g_t[e] };
                        s += front.conj() * at_face[i][e];
                    }
                    if u + 1 < k {
                        s
                    } else {
                        s * coupling
                    }
                })
                .collect()
        })
        .collect()
}

/// `h_K^H Phi2 g_r` by explicit summation.
pub fn loop_coupling(ch: &ChannelSet, refl: &ReflectionState) -> C64 {
    let k = ch.n_users();
    (0..ch.n_elements())
        .map(|e| ch.h_users[k - 1][e].conj() * refl.phi2[e] * ch.g_r[e])
        .sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
