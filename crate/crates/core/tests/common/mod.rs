//! Shared fixtures and closed-form oracles for the integration tests.
#![allow(dead_code)]

use hphi_core::{CMat, PhaseMatrices, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RANDOM_PHASE_SEED: u64 = 20_240_611;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A seeded admissible phase: `C_I = I + SSᵀ/4`, `B` a perturbed identity.
pub fn random_phase(n: usize, seed: u64) -> PhaseMatrices {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = |s: f64| c(rng.gen_range(-s..s), rng.gen_range(-s..s));
    let mut a = CMat::from_fn(n, n, |_, _| g(0.4));
    a = (&a + a.transpose()) * c(0.5, 0.0);
    let b = CMat::identity(n, n) + CMat::from_fn(n, n, |_, _| g(0.3));
    let s = CMat::from_fn(n, n, |_, _| c(g(1.0).re, 0.0));
    let mut cm = CMat::from_fn(n, n, |_, _| c(g(0.5).re, 0.0));
    cm = (&cm + cm.transpose()) * c(0.5, 0.0);
    let ci = CMat::identity(n, n) + &s * s.transpose() * c(0.25, 0.0);
    let cfull = cm + ci * c(0.0, 1.0);
    PhaseMatrices::new(a, b, cfull).expect("admissible by construction")
}

pub fn scalar_phase(a: C64, b: C64, cc: C64) -> PhaseMatrices {
    let m = |z: C64| CMat::from_element(1, 1, z);
    PhaseMatrices::new(m(a), m(b), m(cc)).unwrap()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Generalized Laguerre `L_k^{(a)}(x)` by the three-term recurrence.
pub fn laguerre(k: usize, a: f64, x: f64) -> f64 {
    let (mut l0, mut l1) = (1.0, 1.0 + a - x);
    if k == 0 {
        return l0;
    }
    for j in 1..k {
        let jf = j as f64;
        let l2 = ((2.0 * jf + 1.0 + a - x) * l1 - (jf + a) * l0) / (jf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// `⟨m| e^{νa† − ν̄a} |k⟩` in the one-mode Fock basis.
pub fn displacement(nu: C64, m: usize, k: usize) -> C64 {
    let x = nu.norm_sqr();
    let g = (-x / 2.0).exp();
    if m >= k {
        (factorial(k) / factorial(m)).sqrt() * nu.powu((m - k) as u32) * g * laguerre(k, (m - k) as f64, x)
    } else {
        (factorial(m) / factorial(k)).sqrt() * (-nu.conj()).powu((k - m) as u32) * g * laguerre(m, (k - m) as f64, x)
    }
}

/// One-mode Toeplitz matrix of `e^{i Re(Zμ)}` in the normalized monomials:
/// anti-normal ordering `e^{−|μ|²/4} e^{(iμ/2)a†} e^{(iμ̄/2)a}`, a finite sum per entry.
pub fn toeplitz_plane_wave_1d(mu: C64, deg: usize) -> CMat {
    let r = c(0.0, 0.5) * mu;
    let s = c(0.0, 0.5) * mu.conj();
    let e = CMat::from_fn(deg + 1, deg + 1, |b, g| {
        if g > b {
            c(0.0, 0.0)
        } else {
            r.powu((b - g) as u32) * (factorial(b) / factorial(g)).sqrt() / factorial(b - g)
        }
    });
    let f = CMat::from_fn(deg + 1, deg + 1, |g, a| {
        if g > a {
            c(0.0, 0.0)
        } else {
            s.powu((a - g) as u32) * (factorial(a) / factorial(g)).sqrt() / factorial(a - g)
        }
    });
    (e * f) * c((-mu.norm_sqr() / 4.0).exp(), 0.0)
}

/// `R = C_I^{−1/2} ᵀB/2` for a scalar phase.
pub fn scalar_r(p: &PhaseMatrices) -> C64 {
    p.b()[(0, 0)] / (2.0 * p.c()[(0, 0)].im.sqrt())
}

pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
