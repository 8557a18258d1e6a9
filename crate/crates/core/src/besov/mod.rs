//! Littlewood-Paley analysis on the periodic grid.
//!
//! The dyadic partition of unity is built by telescoping a single smooth
//! low-pass profile `chi`: block `-1` is `chi(2|xi|)` and block `j >= 0` is
//! `chi(|xi|/2^j) - chi(|xi|/2^{j-1})`. With the plateau/support radii used
//! here, block `j` equals one on `[0.8, 1.25] * 2^j` and vanishes outside
//! `[5/8, 8/5] * 2^j`, which sits inside the dyadic annulus
//! `[2^{j-1}, 2^{j+1}]`. Norms built from any such partition agree up to
//! constants, so every property check in this module is stated either up to
//! fitted constants or as a slope.
//!
//! The Holder-Zygmund norm of regularity `gamma` is
//! `sup_j 2^{j gamma} || block_j f ||_sup`, with the block supremum taken
//! over the sample grid; the sup over blocks is truncated at the grid's
//! `max_block`, so inputs are expected to be band-limited (or to have
//! certified block decay) below that scale.

mod grid;

pub use grid::{GridFunction, SpectralGrid, DEFAULT_HALF_LENGTH};

use crate::fit::{fit_loglog, LogLogFit};
use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use std::sync::Arc;

/// Inner radius of the low-pass plateau (`chi = 1` for `r <= PLATEAU`).
const PLATEAU: f64 = 1.25;
/// Outer support radius (`chi = 0` for `r >= SUPPORT`).
const SUPPORT: f64 = 1.6;

/// Supported regularity range of [`besov_norm`].
pub const GAMMA_RANGE: (f64, f64) = (-2.0, 3.0);

fn bump(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

/// Smooth low-pass profile: 1 on `[0, PLATEAU]`, 0 beyond `SUPPORT`.
fn chi(r: f64) -> f64 {
    if r <= PLATEAU {
        1.0
    } else if r >= SUPPORT {
        0.0
    } else {
        let s = (r - PLATEAU) / (SUPPORT - PLATEAU);
        bump(1.0 - s) / (bump(s) + bump(1.0 - s))
    }
}

/// Dyadic partition of unity in frequency, blocks `j = -1, 0, ..., max_block`.
pub struct DyadicPartition {
    grid: Arc<SpectralGrid>,
    /// `weights[j + 1][p]` is the window of block `j` at FFT bin `p`.
    weights: Vec<Vec<f64>>,
}

impl DyadicPartition {
    pub fn new(grid: &Arc<SpectralGrid>) -> Self {
        let n = grid.num_points();
        let jmax = grid.max_block();
        let mut low_pass = Vec::with_capacity((jmax + 2) as usize);
        for j in -1..=jmax {
            let scale = f64::powi(2.0, j);
            let row: Vec<f64> = (0..n).map(|p| chi(grid.frequency(p).abs() / scale)).collect();
            low_pass.push(row);
        }
        let mut weights = Vec::with_capacity(low_pass.len());
        weights.push(low_pass[0].clone()); // block -1
        for j in 1..low_pass.len() {
            let row: Vec<f64> = (0..n).map(|p| low_pass[j][p] - low_pass[j - 1][p]).collect();
            weights.push(row);
        }
        DyadicPartition {
            grid: Arc::clone(grid),
            weights,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn min_block(&self) -> i32 {
        -1
    }

    pub fn max_block(&self) -> i32 {
        self.grid.max_block()
    }

    /// Window weight of block `j` at FFT bin `p`.
    pub fn weight(&self, j: i32, p: usize) -> f64 {
        self.weights[(j + 1) as usize][p]
    }

    /// Sum of all block weights at bin `p`; equals 1 for every resolved
    /// frequency `|xi| <= 2^max_block`.
    pub fn weight_sum(&self, p: usize) -> f64 {
        self.weights.iter().map(|row| row[p]).sum()
    }

    fn check_block(&self, j: i32) -> Result<()> {
        if j < -1 || j > self.max_block() {
            return Err(Error::invalid(
                "block",
                format!("index {j} outside [-1, {}]", self.max_block()),
            ));
        }
        Ok(())
    }

    /// Littlewood-Paley block: inverse transform of the windowed coefficients.
    pub fn lp_block(&self, f: &GridFunction, j: i32) -> Result<GridFunction> {
        self.check_block(j)?;
        let row = &self.weights[(j + 1) as usize];
        let coeffs: Vec<Complex64> = f
            .coeffs()
            .iter()
            .zip(row)
            .map(|(c, &w)| c * w)
            .collect();
        Ok(GridFunction::from_coeffs(f.grid(), coeffs))
    }

    /// Holder-Zygmund norm `sup_j 2^{j gamma} || block_j f ||_sup`.
    pub fn besov_norm(&self, f: &GridFunction, gamma: f64) -> Result<f64> {
        if !(GAMMA_RANGE.0..=GAMMA_RANGE.1).contains(&gamma) {
            return Err(Error::invalid(
                "gamma",
                format!("{gamma} outside supported range [{}, {}]", GAMMA_RANGE.0, GAMMA_RANGE.1),
            ));
        }
        let mut norm = 0.0f64;
        for j in -1..=self.max_block() {
            let block = self.lp_block(f, j)?;
            norm = norm.max(f64::powf(2.0, f64::from(j) * gamma) * block.sup_norm());
        }
        Ok(norm)
    }

    /// Per-block suprema together with their `2^{j gamma}` weights,
    /// the rows of the diagnostic block-norm table.
    pub fn block_table(&self, f: &GridFunction, gamma: f64) -> Result<Vec<BlockRow>> {
        let mut rows = Vec::new();
        for j in -1..=self.max_block() {
            let sup = self.lp_block(f, j)?.sup_norm();
            rows.push(BlockRow {
                block: j,
                block_sup: sup,
                weighted: f64::powf(2.0, f64::from(j) * gamma) * sup,
            });
        }
        Ok(rows)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BlockRow {
    pub block: i32,
    pub block_sup: f64,
    pub weighted: f64,
}

/// Convenience wrapper building a fresh partition.
pub fn besov_norm(f: &GridFunction, gamma: f64) -> Result<f64> {
    DyadicPartition::new(f.grid()).besov_norm(f, gamma)
}

/// Heat semigroup `P_t = exp(t/2 * d^2/dx^2)`: multiplies the coefficient of
/// frequency `xi` by `exp(-xi^2 t / 2)`.
pub fn heat_semigroup(f: &GridFunction, t: f64) -> Result<GridFunction> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("negative time {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_multiplier(|xi| Complex64::new((-0.5 * xi * xi * t).exp(), 0.0)))
}

/// Classical Holder norm via the difference-quotient characterization.
///
/// For `gamma` in (0, 1): `||f||_sup + sup |f(x)-f(y)| / |x-y|^gamma` over
/// grid pairs with `0 < |x-y| < 1`. For `gamma` in (1, 2) the derivative
/// seminorm at exponent `gamma - 1` is added together with `||f'||_sup`.
/// The pair supremum scans sample pairs only, so it is a lower bound of the
/// continuum norm; sufficient for the equivalence-constant fits it backs.
pub fn holder_norm(f: &GridFunction, gamma: f64) -> Result<f64> {
    if !(0.0 < gamma && gamma < 2.0) || gamma == 1.0 {
        return Err(Error::invalid(
            "gamma",
            format!("{gamma} outside (0,1) or (1,2)"),
        ));
    }
    if gamma < 1.0 {
        Ok(f.sup_norm() + pair_seminorm(f, gamma))
    } else {
        let df = f.derivative();
        Ok(f.sup_norm() + df.sup_norm() + pair_seminorm(&df, gamma - 1.0))
    }
}

fn pair_seminorm(f: &GridFunction, exponent: f64) -> f64 {
    let grid = f.grid();
    let n = grid.num_points();
    let dx = grid.spacing();
    let reach = ((1.0 / dx).ceil() as usize).min(n - 1);
    let values = f.values();
    let mut sup = 0.0f64;
    for offset in 1..=reach {
        let h = offset as f64 * dx;
        if h >= 1.0 {
            break;
        }
        let w = h.powf(-exponent);
        for i in 0..n {
            let j = (i + offset) % n; // periodic neighbour at distance h
            let d = (values[i] - values[j]).abs() * w;
            if d > sup {
                sup = d;
            }
        }
    }
    sup
}

/// Differentiation-versus-regularity ratio
/// `besov_norm(f', gamma) / besov_norm(f, gamma + 1)`; zero for `f = 0`.
pub fn check_bernstein(part: &DyadicPartition, f: &GridFunction, gamma: f64) -> Result<f64> {
    let denom = part.besov_norm(f, gamma + 1.0)?;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(part.besov_norm(&f.derivative(), gamma)? / denom)
}

/// Fitted smoothing/approximation slopes of the heat semigroup.
#[derive(Debug, Clone, Copy)]
pub struct SchauderReport {
    /// Slope of `t -> || P_t f ||_{gamma + 2 theta}`; bounded below by
    /// `-theta` for `f` of regularity `gamma`.
    pub growth_slope: f64,
    /// Slope of `t -> || P_t f - f ||_gamma`; approximately `+theta` for `f`
    /// of regularity exactly `gamma + 2 theta`.
    pub decay_slope: f64,
    pub growth_fit: LogLogFit,
    pub decay_fit: LogLogFit,
}

/// Measures both Schauder slopes over the supplied time samples
/// (dyadic grids work best). Requires at least 3 samples and nonzero `f`.
pub fn check_schauder(
    part: &DyadicPartition,
    f: &GridFunction,
    gamma: f64,
    theta: f64,
    times: &[f64],
) -> Result<SchauderReport> {
    if times.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "schauder slope needs >= 3 time samples, got {}",
            times.len()
        )));
    }
    if f.sup_norm() == 0.0 {
        return Err(Error::invalid("f", "zero function has no slope"));
    }
    let mut growth = Vec::with_capacity(times.len());
    let mut decay = Vec::with_capacity(times.len());
    for &t in times {
        let pt = heat_semigroup(f, t)?;
        growth.push(part.besov_norm(&pt, gamma + 2.0 * theta)?);
        decay.push(part.besov_norm(&pt.sub(f), gamma)?);
    }
    let growth_fit = fit_loglog(times, &growth)?;
    let decay_fit = fit_loglog(times, &decay)?;
    Ok(SchauderReport {
        growth_slope: growth_fit.slope,
        decay_slope: decay_fit.slope,
        growth_fit,
        decay_fit,
    })
}
