//! Periodic spectral representation.
//!
//! Functions (and distributions, represented through their coefficient
//! sequences) live on the circle of circumference `2L`, identified with
//! `[-L, L)` and sampled at `N` equispaced points. The spectral basis is
//! `exp(i xi_k x)` with `xi_k = pi k / L`, `k = -N/2 .. N/2 - 1`, so the
//! resolved frequencies reach the Nyquist value `pi N / (2L)`.

use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Spectral grid on the torus `[-L, L)`.
///
/// `max_block` is the highest dyadic frequency block fully resolved by the
/// grid: the largest `j` with `2^{j+1}` strictly below the Nyquist frequency.
pub struct SpectralGrid {
    half_length: f64,
    num_points: usize,
    max_block: i32,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("half_length", &self.half_length)
            .field("num_points", &self.num_points)
            .field("max_block", &self.max_block)
            .finish()
    }
}

/// Default half-length of the torus; paths over [0, 1] stay several
/// standard deviations away from wrap-around.
pub const DEFAULT_HALF_LENGTH: f64 = 16.0;

impl SpectralGrid {
    pub fn new(half_length: f64, num_points: usize) -> Result<Arc<Self>> {
        if !(half_length > 0.0) {
            return Err(Error::invalid("half_length", "must be positive"));
        }
        if num_points < 64 || !num_points.is_power_of_two() {
            return Err(Error::invalid(
                "num_points",
                format!("must be a power of two >= 64, got {num_points}"),
            ));
        }
        let nyquist = PI * num_points as f64 / (2.0 * half_length);
        // largest j with 2^{j+1} < nyquist
        let mut max_block = -1i32;
        while f64::powi(2.0, max_block + 2) < nyquist {
            max_block += 1;
        }
        if max_block < 1 {
            return Err(Error::invalid(
                "num_points",
                format!(
                    "grid resolves only {max_block} dyadic blocks; \
                     increase num_points or reduce half_length"
                ),
            ));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(SpectralGrid {
            half_length,
            num_points,
            max_block,
            fwd: planner.plan_fft_forward(num_points),
            inv: planner.plan_fft_inverse(num_points),
        }))
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn max_block(&self) -> i32 {
        self.max_block
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.num_points as f64 / (2.0 * self.half_length)
    }

    /// Sample point `x_i = -L + 2L i / N`.
    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + 2.0 * self.half_length * i as f64 / self.num_points as f64
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.num_points as f64
    }

    /// Signed wavenumber for FFT bin `p` (bin `N/2` maps to `+N/2`).
    pub fn wavenumber(&self, p: usize) -> i64 {
        if p <= self.num_points / 2 {
            p as i64
        } else {
            p as i64 - self.num_points as i64
        }
    }

    /// Physical frequency of FFT bin `p`.
    pub fn frequency(&self, p: usize) -> f64 {
        PI * self.wavenumber(p) as f64 / self.half_length
    }

    /// Wavenumber of the representable mode closest to the target frequency.
    pub fn nearest_mode(&self, target_frequency: f64) -> i64 {
        let k = (target_frequency * self.half_length / PI).round() as i64;
        k.clamp(1, self.num_points as i64 / 2 - 1)
    }

    fn same_as(&self, other: &SpectralGrid) -> bool {
        self.half_length == other.half_length && self.num_points == other.num_points
    }
}

/// Band-limited function on a [`SpectralGrid`], held in both representations.
///
/// `values[i] = f(x_i)` and `coeffs[p]` is the coefficient of
/// `exp(i xi_k x)` for `k = wavenumber(p)`. The two representations are kept
/// synchronized by construction; after that the object is immutable and safe
/// to share across workers.
#[derive(Clone)]
pub struct GridFunction {
    grid: Arc<SpectralGrid>,
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl GridFunction {
    pub fn zero(grid: &Arc<SpectralGrid>) -> Self {
        GridFunction {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.num_points],
            coeffs: vec![Complex64::new(0.0, 0.0); grid.num_points],
        }
    }

    pub fn from_values(grid: &Arc<SpectralGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.num_points, "sample count must match grid");
        let coeffs = values_to_coeffs(grid, &values);
        GridFunction {
            grid: Arc::clone(grid),
            values,
            coeffs,
        }
    }

    pub fn from_fn(grid: &Arc<SpectralGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.num_points).map(|i| f(grid.x(i))).collect();
        Self::from_values(grid, values)
    }

    pub fn from_coeffs(grid: &Arc<SpectralGrid>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.num_points, "coefficient count must match grid");
        let values = coeffs_to_values(grid, &coeffs);
        GridFunction {
            grid: Arc::clone(grid),
            values,
            coeffs,
        }
    }

    /// Single real mode `amplitude * cos(xi_k x + phase)`; `k = 0` gives the
    /// constant `amplitude * cos(phase)`.
    pub fn mode(grid: &Arc<SpectralGrid>, k: i64, amplitude: f64, phase: f64) -> Self {
        assert!(
            k.unsigned_abs() < grid.num_points as u64 / 2,
            "mode beyond Nyquist"
        );
        let n = grid.num_points;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        if k == 0 {
            coeffs[0] = Complex64::new(amplitude * phase.cos(), 0.0);
        } else {
            let half = 0.5 * amplitude * Complex64::new(0.0, phase).exp();
            let p_pos = k.rem_euclid(n as i64) as usize;
            let p_neg = (-k).rem_euclid(n as i64) as usize;
            coeffs[p_pos] = half;
            coeffs[p_neg] = half.conj();
        }
        Self::from_coeffs(grid, coeffs)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of the signed wavenumber `k`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.grid.num_points as i64;
        self.coeffs[k.rem_euclid(n) as usize]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// New function with coefficients multiplied by `m(xi)`.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> Complex64) -> GridFunction {
        let coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(p, c)| c * m(self.grid.frequency(p)))
            .collect();
        GridFunction::from_coeffs(&self.grid, coeffs)
    }

    /// Spectral derivative. The Nyquist bin is zeroed: the odd multiplier
    /// `i xi` has no real-valued representative there.
    pub fn derivative(&self) -> GridFunction {
        let n = self.grid.num_points;
        let coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(p, c)| {
                if p == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, self.grid.frequency(p))
                }
            })
            .collect();
        GridFunction::from_coeffs(&self.grid, coeffs)
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| c * v).collect(),
            coeffs: self.coeffs.iter().map(|z| c * z).collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        assert!(self.grid.same_as(&other.grid), "grid mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        GridFunction {
            grid: Arc::clone(&self.grid),
            values,
            coeffs,
        }
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.add(&other.scaled(-1.0))
    }

    /// Samples on a `factor`-times finer grid via zero-padded synthesis.
    /// Reproduces the original samples exactly at the original points.
    pub fn oversampled_values(&self, factor: usize) -> Vec<f64> {
        assert!(factor.is_power_of_two() && factor >= 2);
        let n = self.grid.num_points;
        let big_n = n * factor;
        let mut planner = FftPlanner::new();
        let inv = planner.plan_fft_inverse(big_n);
        let mut buf = vec![Complex64::new(0.0, 0.0); big_n];
        for p in 0..n {
            let k = self.grid.wavenumber(p);
            if k.unsigned_abs() as usize == n / 2 {
                continue; // drop the Nyquist bin
            }
            let twist = if k & 1 == 0 { 1.0 } else { -1.0 };
            buf[k.rem_euclid(big_n as i64) as usize] = self.coeffs[p] * twist;
        }
        inv.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Transfers the function to a finer grid with the same half-length by
    /// coefficient injection (band-limited prolongation; exact).
    pub fn prolonged_to(&self, fine: &Arc<SpectralGrid>) -> GridFunction {
        assert_eq!(self.grid.half_length, fine.half_length, "half-length mismatch");
        assert!(fine.num_points >= self.grid.num_points, "target grid is coarser");
        let n = self.grid.num_points;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); fine.num_points];
        for p in 0..n {
            let k = self.grid.wavenumber(p);
            if k.unsigned_abs() as usize == n / 2 {
                continue;
            }
            coeffs[k.rem_euclid(fine.num_points as i64) as usize] = self.coeffs[p];
        }
        GridFunction::from_coeffs(fine, coeffs)
    }

    /// Projects onto a coarser grid with the same half-length by truncating
    /// coefficients beyond the coarse Nyquist frequency.
    pub fn restricted_to(&self, coarse: &Arc<SpectralGrid>) -> GridFunction {
        assert_eq!(self.grid.half_length, coarse.half_length, "half-length mismatch");
        assert!(coarse.num_points <= self.grid.num_points, "target grid is finer");
        let nc = coarse.num_points;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); nc];
        for (p, c) in coeffs.iter_mut().enumerate() {
            let k = coarse.wavenumber(p);
            if k.unsigned_abs() as usize == nc / 2 {
                continue;
            }
            *c = self.coeff(k);
        }
        GridFunction::from_coeffs(coarse, coeffs)
    }

    /// Largest relative deviation from Hermitian symmetry of the
    /// coefficients; zero for genuinely real-valued data.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.num_points;
        let scale = self
            .coeffs
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
            .max(1e-300);
        let mut worst = 0.0f64;
        for p in 1..n {
            let d = (self.coeffs[p] - self.coeffs[n - p].conj()).norm();
            worst = worst.max(d);
        }
        worst = worst.max(self.coeffs[0].im.abs());
        worst / scale
    }

    /// Round-trip defect between the two stored representations.
    pub fn sync_defect(&self) -> f64 {
        let back = coeffs_to_values(&self.grid, &self.coeffs);
        let scale = self.sup_norm().max(1e-300);
        self.values
            .iter()
            .zip(&back)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale
    }
}

/// Forward transform with the `(-1)^k` twist that re-centers the grid at `-L`.
fn values_to_coeffs(grid: &SpectralGrid, values: &[f64]) -> Vec<Complex64> {
    let n = grid.num_points;
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fwd.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter()
        .enumerate()
        .map(|(p, z)| {
            let twist = if p & 1 == 0 { scale } else { -scale };
            z * twist
        })
        .collect()
}

fn coeffs_to_values(grid: &SpectralGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(p, z)| if p & 1 == 0 { *z } else { -z })
        .collect();
    grid.inv.process(&mut buf);
    buf.iter().map(|z| z.re).collect()
}
