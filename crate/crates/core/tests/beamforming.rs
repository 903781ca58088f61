mod common;

use common::{gaussian_vector, random_state, rng};
use dfris_core::linalg::{hermitian_eigen, smallest_eigenvalue};
use dfris_core::optimizer::{effective_channels, update_beamformers, EffectiveChannels, OptimizerConfig};
use dfris_core::oracle::{complex_to_real, finite_difference_gradient, real_to_complex};
use dfris_core::system::transmit_power;
use dfris_core::{CMatrix, CVector, C64};
use rand::Rng;

/// Lagrangian of the beamforming subproblem over stacked real coordinates of all beams.
fn lagrangian(eff: &EffectiveChannels, gamma: &[f64], p_t: f64, mu: f64, x: &[f64]) -> f64 {
    let k = eff.h_tilde.len();
    let n = eff.a_matrix.nrows();
    let z = real_to_complex(x);
    let w: Vec<CVector> = (0..k).map(|i| CVector::from_column_slice(&z[i * n..(i + 1) * n])).collect();
    let mut value = 0.0;
    for (u, h) in eff.h_tilde.iter().enumerate() {
        value += 2.0 * (1.0 + gamma[u]).sqrt() * h.dotc(&w[u]).re;
        for wi in &w {
            value -= h.dotc(wi).norm_sqr();
        }
    }
    let power: f64 = w.iter().map(|v| v.norm_squared()).sum();
    value - mu * (power - p_t)
}

#[test]
fn beamformers_satisfy_kkt_conditions() {
    let config = OptimizerConfig::default();
    let mut r = rng(77);
    for case in 0..100 {
        let n = r.random_range(2..6);
        let k = r.random_range(1..6);
        let scale = 10f64.powf(r.random_range(-3.0..3.0));
        let h: Vec<CVector> = (0..k).map(|_| gaussian_vector(n, scale, &mut r)).collect();
        let gamma: Vec<f64> = (0..k).map(|_| 10f64.powf(r.random_range(-2.0..3.0))).collect();
        let p_t = 10f64.powf(r.random_range(-3.0..3.0));
        let eff = EffectiveChannels::from_vectors(h).unwrap();
        let (bf, mu) = update_beamformers(&eff, &gamma, p_t, &config).unwrap();

        let power = transmit_power(&bf);
        assert!(power <= p_t * (1.0 + 1e-9), "case {case}: power {power} > {p_t}");
        assert!(mu >= 0.0);
        assert!((mu * (p_t - power)).abs() <= 1e-6 * p_t, "case {case}: slackness {}", mu * (p_t - power));

        let stacked: Vec<C64> = bf.w.iter().flat_map(|w| w.iter().copied()).collect();
        let x = complex_to_real(&stacked);
        let step = 1e-5 * x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        let grad = finite_difference_gradient(|x| lagrangian(&eff, &gamma, p_t, mu, x), &x, step);
        let residual = grad.iter().map(|d| d * d).sum::<f64>().sqrt();
        let reference: f64 = eff
            .h_tilde
            .iter()
            .zip(&gamma)
            .map(|(h, g)| 2.0 * (1.0 + g).sqrt() * h.norm())
            .sum();
        assert!(residual <= 1e-6 * reference, "case {case}: residual {residual} vs {reference}");
    }
}

#[test]
fn a_matrix_matches_loop_gram_and_has_rank_at_most_k() {
    for seed in 0..20 {
        let s = random_state(6, 3, 16, 900 + seed);
        let (_, tau) = s.gamma_tau();
        let eff = effective_channels(&s.channels, &s.reflection, &tau, &s.params).unwrap();
        let n = 6;
        let mut a = CMatrix::zeros(n, n);
        for h in &eff.h_tilde {
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] += h[i] * h[j].conj();
                }
            }
        }
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(eff.a_matrix.iter()) {
            assert!((x - y).norm() <= 1e-12 * scale);
        }
        let (values, _) = hermitian_eigen(&eff.a_matrix);
        let largest = values.max();
        assert!(smallest_eigenvalue(&eff.a_matrix) >= -1e-10 * largest);
        let significant = values.iter().filter(|&&l| l > 1e-10 * largest).count();
        assert!(significant <= 3, "rank {significant}");
    }
}

#[test]
fn effective_channels_follow_the_loop_model() {
    let s = random_state(4, 3, 8, 5);
    let (_, tau) = s.gamma_tau();
    let eff = effective_channels(&s.channels, &s.reflection, &tau, &s.params).unwrap();
    let a = common::loop_amplitudes(&s.channels, &s.reflection, &s.beamformers);
    for k in 0..3 {
        let gain = if k == 2 { s.params.beta } else { 1.0 };
        for i in 0..3 {
            // h~_k^H w_i = sqrt(g_k) tau_k^* a[k][i]
            let expected = tau[k].conj() * a[k][i] * gain.sqrt();
            let got = eff.h_tilde[k].dotc(&s.beamformers.w[i]);
            assert!((got - expected).norm() <= 1e-12 * expected.norm().max(1e-300));
        }
    }
}

#[test]
fn zero_tau_gives_zero_a_matrix() {
    let s = random_state(4, 3, 8, 6);
    let zero = [C64::new(0.0, 0.0); 3];
    let eff = effective_channels(&s.channels, &s.reflection, &zero, &s.params).unwrap();
    assert!(eff.a_matrix.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn tiny_budget_meets_power_with_large_multiplier() {
    let mut r = rng(3);
    let h: Vec<CVector> = (0..2).map(|_| gaussian_vector(4, 1.0, &mut r)).collect();
    let eff = EffectiveChannels::from_vectors(h).unwrap();
    let (bf, mu) = update_beamformers(&eff, &[1.0, 1.0], 1e-8, &OptimizerConfig::default()).unwrap();
    assert!((transmit_power(&bf) - 1e-8).abs() <= 1e-9 * 1e-8);
    assert!(mu > 1e3);
}
