//! Shared oracles for the acceptance suite. Everything here is independent
//! of the library's solution paths: exact rational arithmetic for the rate
//! formulas, a finite-difference space-time solver for the backward
//! equation, and direct trigonometric evaluation of lacunary block norms.

use mollified_em::besov::{GridFunction, SpectralGrid};
use mollified_em::rng;
use num::{BigRational, FromPrimitive, ToPrimitive};
use std::sync::Arc;

/// Lacunary sum with one mode per dyadic block, block amplitudes `2^{-j s}`.
pub fn lacunary(g: &Arc<SpectralGrid>, s: f64, top: i32, seed: u64) -> GridFunction {
    let mut f = GridFunction::zero(g);
    for j in 0..=top {
        let k = g.nearest_mode(f64::powi(2.0, j));
        let phase = 2.0 * std::f64::consts::PI * rng::uniform_draw(seed, j as u64, 0);
        let amp = f64::powf(2.0, -f64::from(j) * s);
        f = f.add(&GridFunction::mode(g, k, amp, phase));
    }
    f
}

/// Random function with energy spread over blocks up to `top`.
pub fn band_limited(g: &Arc<SpectralGrid>, top: i32, seed: u64) -> GridFunction {
    let mut f = GridFunction::zero(g);
    for j in 0..=top {
        let base = f64::powi(2.0, j);
        for (idx, frac) in [(0u64, 0.85), (1, 1.0), (2, 1.2)] {
            let k = g.nearest_mode(base * frac);
            let amp = rng::normal_draw(seed, j as u64, idx);
            let phase = 2.0 * std::f64::consts::PI * rng::uniform_draw(seed, j as u64, idx + 10);
            f = f.add(&GridFunction::mode(g, k, 0.3 * amp, phase));
        }
    }
    f
}

/// `r(beta, epsilon)` in exact rational arithmetic.
pub fn rate_r_exact(beta: &BigRational, epsilon: &BigRational) -> BigRational {
    let half = BigRational::from_f64(0.5).unwrap();
    let one = BigRational::from_integer(1.into());
    let two = BigRational::from_integer(2.into());
    let q = &half - beta - epsilon;
    let q_sq = &q * &q;
    q_sq.clone() / (one + beta + epsilon + two * q_sq)
}

/// `eta(beta_hat, epsilon)` in exact rational arithmetic.
pub fn eta_exact(beta_hat: &BigRational, epsilon: &BigRational) -> BigRational {
    let half = BigRational::from_f64(0.5).unwrap();
    let one = BigRational::from_integer(1.into());
    let two = BigRational::from_integer(2.into());
    let q = &half - beta_hat - epsilon;
    let bracket = (epsilon + beta_hat + &one) / &two + &q * &q;
    one / (two * bracket)
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// Finite-difference solution of the backward equation
/// `u_t + u_xx/2 + b u_x = lambda u - b`, `u(T, .) = 0`, with a
/// time-constant drift profile on a periodic grid. Marches the
/// time-reversed (forward parabolic) equation with Heun steps and centered
/// differences; completely independent of the spectral mild solver.
///
/// Returns `u(0, .)` on the same grid as `profile`.
pub fn fd_backward_solution(
    profile: &[f64],
    half_length: f64,
    lambda: f64,
    t_horizon: f64,
) -> Vec<f64> {
    let n = profile.len();
    let dx = 2.0 * half_length / n as f64;
    let dtau = 0.25 * dx * dx; // explicit diffusion stability with margin
    let steps = (t_horizon / dtau).ceil() as usize;
    let dtau = t_horizon / steps as f64;

    let rhs = |v: &[f64], out: &mut Vec<f64>| {
        out.clear();
        for i in 0..n {
            let up = v[(i + 1) % n];
            let dn = v[(i + n - 1) % n];
            let vxx = (up - 2.0 * v[i] + dn) / (dx * dx);
            let vx = (up - dn) / (2.0 * dx);
            out.push(0.5 * vxx + profile[i] * vx - lambda * v[i] + profile[i]);
        }
    };

    let mut v = vec![0.0; n];
    let mut k1 = Vec::with_capacity(n);
    let mut k2 = Vec::with_capacity(n);
    let mut mid = vec![0.0; n];
    for _ in 0..steps {
        rhs(&v, &mut k1);
        for i in 0..n {
            mid[i] = v[i] + dtau * k1[i];
        }
        rhs(&mid, &mut k2);
        for i in 0..n {
            v[i] += 0.5 * dtau * (k1[i] + k2[i]);
        }
    }
    v
}

/// Direct (FFT-free) evaluation of the block suprema of the lacunary
/// mollification gap `b - P_{1/m} b`, where `b` has exactly one mode per
/// block: mode `k_j` with amplitude `a_j` and phase `theta_j`. The block
/// supremum is the grid maximum of the sampled sinusoid times the heat
/// damping gap, and the norm is the weighted maximum over blocks.
pub struct LacunaryMode {
    pub wavenumber: i64,
    pub amplitude: f64,
    pub phase: f64,
    pub block: i32,
}

pub fn lacunary_gap_norm(
    modes: &[LacunaryMode],
    half_length: f64,
    num_points: usize,
    m: usize,
    gamma: f64,
) -> f64 {
    let mut norm: f64 = 0.0;
    for mode in modes {
        let xi = std::f64::consts::PI * mode.wavenumber as f64 / half_length;
        let damp = 1.0 - (-xi * xi / (2.0 * m as f64)).exp();
        let mut grid_max: f64 = 0.0;
        for i in 0..num_points {
            let x = -half_length + 2.0 * half_length * i as f64 / num_points as f64;
            grid_max = grid_max.max((xi * x + mode.phase).sin().abs());
        }
        let weighted =
            f64::powf(2.0, f64::from(mode.block) * gamma) * mode.amplitude * damp * grid_max;
        norm = norm.max(weighted);
    }
    norm
}
