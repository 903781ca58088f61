//! Slow reference computations for verification.
//!
//! Nothing here calls the vectorised evaluation paths of [`crate::system`] or
//! [`crate::optimizer`]; model quantities are recomputed with scalar loops
//! straight from the received-signal expressions.

use std::f64::consts::{LN_2, TAU};

use crate::channel::ChannelSet;
use crate::system::{BeamformerSet, NoiseAndGainParams, ReflectionState, Resolution};
use crate::{CVector, Error, Result, C64};

/// Upper bound on enumerated phase combinations.
pub const GRID_LIMIT: f64 = 1e6;

/// Discrete phase grid shared by both faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub phase_points_per_element: usize,
    /// Elements per face (`M`).
    pub elements: usize,
    pub bits: Option<u32>,
}

impl GridSpec {
    pub fn from_bits(elements: usize, bits: u32) -> Self {
        Self {
            phase_points_per_element: 1usize << bits,
            elements,
            bits: Some(bits),
        }
    }

    /// Joint number of `(phi1, phi2)` combinations.
    pub fn size(&self) -> f64 {
        (self.phase_points_per_element as f64).powi(2 * self.elements as i32)
    }

    fn resolution(&self) -> Resolution {
        self.bits.map_or(Resolution::Continuous, Resolution::Bits)
    }
}

/// SINRs (relay user last) and sum rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEval {
    pub sinr: Vec<f64>,
    pub sum_rate: f64,
}

/// Evaluates the received-signal model with explicit loops.
pub fn loop_model_eval(
    channels: &ChannelSet,
    reflection: &ReflectionState,
    beamformers: &BeamformerSet,
    params: &NoiseAndGainParams,
) -> ModelEval {
    let g = &channels.g_bs_ris;
    let (m_total, n_total) = (g.nrows(), g.ncols());
    let k_total = channels.h_users.len();
    let zero = C64::new(0.0, 0.0);

    // (Phi1 G w_i)[m] for every beam
    let mut at_face1 = vec![vec![zero; m_total]; k_total];
    for i in 0..k_total {
        for m in 0..m_total {
            let mut acc = zero;
            for n in 0..n_total {
                acc += g[(m, n)] * beamformers.w[i][n];
            }
            at_face1[i][m] = reflection.phi1[m] * acc;
        }
    }

    let mut sinr = Vec::with_capacity(k_total);
    for k in 0..k_total - 1 {
        let h = &channels.h_users[k];
        let mut powers = vec![0.0; k_total];
        for i in 0..k_total {
            let mut y = zero;
            for m in 0..m_total {
                y += h[m].conj() * at_face1[i][m];
            }
            powers[i] = y.norm_sqr();
        }
        let interference: f64 = (0..k_total).filter(|&i| i != k).map(|i| powers[i]).sum();
        sinr.push(powers[k] / (interference + params.sigma_k_sq[k]));
    }

    // relay path: horn 1 -> amplifier -> horn 2 -> face 2 -> user K
    let relay = k_total - 1;
    let h = &channels.h_users[relay];
    let mut coupling = zero;
    for m in 0..m_total {
        coupling += h[m].conj() * reflection.phi2[m] * channels.g_r[m];
    }
    let mut powers = vec![0.0; k_total];
    for i in 0..k_total {
        let mut at_amp = zero;
        for m in 0..m_total {
            at_amp += channels.g_t[m].conj() * at_face1[i][m];
        }
        powers[i] = params.beta * (coupling * at_amp).norm_sqr();
    }
    let interference: f64 = (0..relay).map(|i| powers[i]).sum();
    let noise = params.beta * params.sigma0_sq * coupling.norm_sqr() + params.sigma_k_sq[relay];
    sinr.push(powers[relay] / (interference + noise));

    let sum_rate = sinr.iter().map(|s| (1.0 + s).ln()).sum::<f64>() / LN_2;
    ModelEval { sinr, sum_rate }
}

/// Best discrete reflection found by exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct ExhaustiveResult {
    pub phi1: CVector,
    pub phi2: CVector,
    pub beamformers: BeamformerSet,
    pub sum_rate: f64,
    pub evaluated: usize,
}

/// Enumerates every `(phi1, phi2)` on the grid, designs beamformers with
/// `beamformer_rule` and keeps the highest sum rate. Ties go to the
/// lexicographically first phase-index tuple (`phi1` indices, then `phi2`).
pub fn exhaustive_phase_search<F>(
    channels: &ChannelSet,
    beamformer_rule: F,
    grid: GridSpec,
    params: &NoiseAndGainParams,
) -> Result<ExhaustiveResult>
where
    F: Fn(&ChannelSet, &ReflectionState) -> Result<BeamformerSet>,
{
    let size = grid.size();
    if size > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            size,
            limit: GRID_LIMIT,
        });
    }
    if grid.elements != channels.g_bs_ris.nrows() || grid.phase_points_per_element == 0 {
        return Err(Error::Dimension("grid does not match the channel set".into()));
    }
    let m = grid.elements;
    let p = grid.phase_points_per_element;
    let phase = |idx: usize| C64::from_polar(1.0, TAU * idx as f64 / p as f64);

    let mut indices = vec![0usize; 2 * m];
    let mut best: Option<ExhaustiveResult> = None;
    let mut evaluated = 0;
    loop {
        let phi1 = CVector::from_fn(m, |i, _| phase(indices[i]));
        let phi2 = CVector::from_fn(m, |i, _| phase(indices[m + i]));
        let reflection = ReflectionState::new(phi1, phi2, grid.resolution());
        let beamformers = beamformer_rule(channels, &reflection)?;
        let rate = loop_model_eval(channels, &reflection, &beamformers, params).sum_rate;
        evaluated += 1;
        if best.as_ref().is_none_or(|b| rate > b.sum_rate) {
            best = Some(ExhaustiveResult {
                phi1: reflection.phi1,
                phi2: reflection.phi2,
                beamformers,
                sum_rate: rate,
                evaluated: 0,
            });
        }
        // odometer increment, last index fastest
        let mut pos = indices.len();
        loop {
            if pos == 0 {
                let mut out = best.expect("at least one combination");
                out.evaluated = evaluated;
                return Ok(out);
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < p {
                break;
            }
            indices[pos] = 0;
        }
    }
}

/// Central-difference gradient of a real field of real coordinates.
pub fn finite_difference_gradient<F: Fn(&[f64]) -> f64>(field: F, point: &[f64], step: f64) -> Vec<f64> {
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut x = point.to_vec();
    (0..point.len())
        .map(|i| {
            x[i] = point[i] + step;
            let up = field(&x);
            x[i] = point[i] - step;
            let down = field(&x);
            x[i] = point[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Splits complex coordinates into `[re0, im0, re1, im1, ...]`.
pub fn complex_to_real(z: &[C64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn real_to_complex(x: &[f64]) -> Vec<C64> {
    x.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while (hi - lo) > tol * (1.0 + lo.abs().max(hi.abs())) {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}
