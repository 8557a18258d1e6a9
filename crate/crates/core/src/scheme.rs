//! Euler-Maruyama paths, coupled references, and strong-error statistics.
//!
//! A single `(master_seed, path_index)` pair determines one Brownian driver
//! at the finest resolution `n_fine`; coarser schemes consume block sums of
//! the same increments, so every resolution sees the same noise realization
//! and strong errors are measured under a genuine coupling.
//!
//! Ensembles are embarrassingly parallel: each path is a pure function of
//! its index and immutable drift/transform objects. Reduction happens in
//! fixed-size chunks summed in ascending index order, so the result is
//! bit-identical whether the chunk loop runs sequentially or on a rayon
//! pool of any width.

use crate::drift::DriftField;
use crate::rng;
use crate::zvonkin::ZvonkinPair;
use crate::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Paths per reduction chunk; fixed so that the reduction tree does not
/// depend on the worker count.
const CHUNK: usize = 256;

/// One Brownian driver at the finest grid.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    t_horizon: f64,
    n_fine: usize,
    increments: Vec<f64>,
    seed: u64,
    path_index: u64,
}

/// Generates the increments of path `path_index`: i.i.d. centered Gaussians
/// of variance `t_horizon / n_fine`, each a pure function of
/// `(seed, path_index, step)`.
pub fn generate_path(seed: u64, path_index: u64, t_horizon: f64, n_fine: usize) -> Result<BrownianPath> {
    if !n_fine.is_power_of_two() {
        return Err(Error::invalid(
            "n_fine",
            format!("{n_fine} is not a power of two"),
        ));
    }
    if !(t_horizon > 0.0) {
        return Err(Error::invalid("t_horizon", "must be positive"));
    }
    let std = (t_horizon / n_fine as f64).sqrt();
    let increments = (0..n_fine)
        .map(|k| std * rng::normal_draw(seed, path_index, k as u64))
        .collect();
    Ok(BrownianPath {
        t_horizon,
        n_fine,
        increments,
        seed,
        path_index,
    })
}

impl BrownianPath {
    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }

    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// Increments at a coarser resolution `n | n_fine`: consecutive block
    /// sums of the fine increments, summed left to right.
    pub fn coarse_increments(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 || !self.n_fine.is_multiple_of(n) {
            return Err(Error::GridMismatch(format!(
                "{n} steps do not divide n_fine = {}",
                self.n_fine
            )));
        }
        let block = self.n_fine / n;
        Ok(self
            .increments
            .chunks_exact(block)
            .map(|c| c.iter().sum())
            .collect())
    }
}

/// Discrete path of a (drift, resolution) pair on the shared time grid.
#[derive(Debug, Clone)]
pub struct SchemePath {
    pub n: usize,
    /// Mollification level of the drift that produced the path (0 for
    /// analytic benchmark drifts).
    pub m: usize,
    pub values: Vec<f64>,
    pub drift_eval_count: usize,
}

impl SchemePath {
    pub fn step(&self, t_horizon: f64) -> f64 {
        t_horizon / self.n as f64
    }
}

/// Euler-Maruyama on `n` steps: freeze the drift at the left node,
/// `X_{k+1} = X_k + b(t_k, X_k) h + dW_k`.
pub fn euler_maruyama(
    drift: &dyn DriftField,
    w: &BrownianPath,
    n: usize,
    x0: f64,
) -> Result<SchemePath> {
    let dw = w.coarse_increments(n)?;
    let h = w.t_horizon / n as f64;
    let mut values = Vec::with_capacity(n + 1);
    let mut x = x0;
    values.push(x);
    for (k, &inc) in dw.iter().enumerate() {
        x += drift.eval(k as f64 * h, x) * h + inc;
        values.push(x);
    }
    Ok(SchemePath {
        n,
        m: drift.level(),
        values,
        drift_eval_count: n,
    })
}

/// Finest-grid Euler path under the reference drift; the coupling proxy for
/// the unknown exact solution. Its own error is tracked by self-refinement
/// checks rather than assumed away.
pub fn reference_solution(
    drift_ref: &dyn DriftField,
    w: &BrownianPath,
    x0: f64,
) -> Result<SchemePath> {
    euler_maruyama(drift_ref, w, w.n_fine, x0)
}

/// Ornstein-Uhlenbeck solution of `dX = -rate X dt + dW` on the fine grid:
/// exact one-step decay `exp(-rate h)` with the increment rescaled so the
/// conditional variance is exact. Used as a closed-form oracle for the
/// strong order of the scheme under smooth drift.
pub fn ou_exact_path(rate: f64, w: &BrownianPath, x0: f64) -> SchemePath {
    let n = w.n_fine;
    let h = w.t_horizon / n as f64;
    let a = (-rate * h).exp();
    let sigma = ((1.0 - (-2.0 * rate * h).exp()) / (2.0 * rate * h)).sqrt();
    let mut values = Vec::with_capacity(n + 1);
    let mut x = x0;
    values.push(x);
    for &inc in &w.increments {
        x = a * x + sigma * inc;
        values.push(x);
    }
    SchemePath {
        n,
        m: 0,
        values,
        drift_eval_count: 0,
    }
}

/// Per-path strong-error summary of one (reference, approximation) pair.
#[derive(Debug, Clone)]
pub struct PathError {
    /// `sup_k |ref - approx|` over the coarse grid times.
    pub sup_abs: f64,
    /// `sup_k |ref - approx|^p`.
    pub sup_abs_pow: f64,
    /// `|ref - approx|` at every coarse node, for the sup-of-mean metric.
    pub pointwise_abs: Vec<f64>,
}

/// Compares two coupled paths at the coarse grid times (the approximation's
/// grid must be a subset of the reference's).
pub fn measure_error(reference: &SchemePath, approx: &SchemePath, p: f64) -> Result<PathError> {
    if approx.n == 0 || !reference.n.is_multiple_of(approx.n) {
        return Err(Error::GridMismatch(format!(
            "approximation grid ({}) is not a subset of the reference grid ({})",
            approx.n, reference.n
        )));
    }
    let stride = reference.n / approx.n;
    let mut sup = 0.0f64;
    let mut pointwise = Vec::with_capacity(approx.n + 1);
    for (k, &xa) in approx.values.iter().enumerate() {
        let d = (reference.values[k * stride] - xa).abs();
        pointwise.push(d);
        sup = sup.max(d);
    }
    Ok(PathError {
        sup_abs: sup,
        sup_abs_pow: sup.powf(p),
        pointwise_abs: pointwise,
    })
}

/// Euler scheme on the transformed dynamics
/// `dY = lambda u(s, psi(s, Y)) ds + (1 + u_x(s, psi(s, Y))) dW`,
/// the Lipschitz-coefficient companion of the drifted scheme.
pub fn simulate_transformed(
    zp: &ZvonkinPair,
    w: &BrownianPath,
    n: usize,
    y0: f64,
) -> Result<SchemePath> {
    let dw = w.coarse_increments(n)?;
    let h = w.t_horizon / n as f64;
    let lambda = zp.lambda();
    let mut values = Vec::with_capacity(n + 1);
    let mut y = y0;
    values.push(y);
    for (k, &inc) in dw.iter().enumerate() {
        let t = k as f64 * h;
        let x = zp.psi(t, y);
        y += lambda * zp.u_at(t, x) * h + (1.0 + zp.ux_at(t, x)) * inc;
        values.push(y);
    }
    Ok(SchemePath {
        n,
        m: 0,
        values,
        drift_eval_count: 0,
    })
}

/// Reference process an ensemble measures against.
pub enum ReferenceScheme<'a> {
    /// Euler at the finest grid under the given (well-resolved) drift.
    Euler { drift: &'a dyn DriftField },
    /// Closed-form Ornstein-Uhlenbeck oracle `dX = -rate X dt + dW`.
    ExactOrnsteinUhlenbeck { rate: f64 },
}

/// One approximation column of an error sweep.
pub struct SweepEntry<'a> {
    pub steps: usize,
    pub drift: &'a dyn DriftField,
}

#[derive(Debug, Clone, Copy)]
pub struct EnsembleConfig {
    pub t_horizon: f64,
    pub n_fine: usize,
    pub num_paths: usize,
    pub master_seed: u64,
    pub x0: f64,
    /// Moment exponent for the `sup^p` statistic.
    pub p_moment: f64,
}

/// Monte Carlo strong-error statistics of one sweep entry.
#[derive(Debug, Clone, Copy)]
pub struct ErrorStats {
    pub num_paths: usize,
    pub steps: usize,
    pub level: usize,
    /// Mean over paths of `sup_k |diff|`.
    pub l1_sup: f64,
    /// Mean over paths of `sup_k |diff|^p` (root taken at report time).
    pub lp_sup_mean: f64,
    pub p_moment: f64,
    /// Standard error of the `l1_sup` mean.
    pub std_error: f64,
    /// `max_k mean_paths |diff_k|`: expectation inside, supremum outside.
    pub sup_pointwise_l1: f64,
}

impl ErrorStats {
    /// `E[sup^p]^{1/p}`, the rooted moment reported in CSV output.
    pub fn lp_sup_root(&self) -> f64 {
        self.lp_sup_mean.powf(1.0 / self.p_moment)
    }
}

/// Per-chunk partial sums, one slot per sweep entry.
struct ChunkPartial {
    sum_sup: Vec<f64>,
    sum_sup_sq: Vec<f64>,
    sum_sup_pow: Vec<f64>,
    pointwise: Vec<Vec<f64>>,
}

impl ChunkPartial {
    fn new(sweep: &[SweepEntry]) -> Self {
        ChunkPartial {
            sum_sup: vec![0.0; sweep.len()],
            sum_sup_sq: vec![0.0; sweep.len()],
            sum_sup_pow: vec![0.0; sweep.len()],
            pointwise: sweep.iter().map(|e| vec![0.0; e.steps + 1]).collect(),
        }
    }
}

fn run_chunk(
    chunk_index: usize,
    reference: &ReferenceScheme,
    sweep: &[SweepEntry],
    cfg: &EnsembleConfig,
) -> Result<ChunkPartial> {
    let mut partial = ChunkPartial::new(sweep);
    let lo = chunk_index * CHUNK;
    let hi = (lo + CHUNK).min(cfg.num_paths);
    for path_index in lo..hi {
        let w = generate_path(cfg.master_seed, path_index as u64, cfg.t_horizon, cfg.n_fine)?;
        let ref_path = match reference {
            ReferenceScheme::Euler { drift } => reference_solution(*drift, &w, cfg.x0)?,
            ReferenceScheme::ExactOrnsteinUhlenbeck { rate } => ou_exact_path(*rate, &w, cfg.x0),
        };
        for (slot, entry) in sweep.iter().enumerate() {
            let approx = euler_maruyama(entry.drift, &w, entry.steps, cfg.x0)?;
            let err = measure_error(&ref_path, &approx, cfg.p_moment)?;
            partial.sum_sup[slot] += err.sup_abs;
            partial.sum_sup_sq[slot] += err.sup_abs * err.sup_abs;
            partial.sum_sup_pow[slot] += err.sup_abs_pow;
            for (acc, d) in partial.pointwise[slot].iter_mut().zip(&err.pointwise_abs) {
                *acc += d;
            }
        }
    }
    Ok(partial)
}

fn reduce(
    partials: Vec<ChunkPartial>,
    sweep: &[SweepEntry],
    cfg: &EnsembleConfig,
) -> Vec<ErrorStats> {
    let n_paths = cfg.num_paths as f64;
    let mut out = Vec::with_capacity(sweep.len());
    for (slot, entry) in sweep.iter().enumerate() {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut sum_pow = 0.0;
        let mut pointwise = vec![0.0; entry.steps + 1];
        // fixed-order reduction over chunks, then nodes
        for part in &partials {
            sum += part.sum_sup[slot];
            sum_sq += part.sum_sup_sq[slot];
            sum_pow += part.sum_sup_pow[slot];
            for (acc, v) in pointwise.iter_mut().zip(&part.pointwise[slot]) {
                *acc += v;
            }
        }
        let mean = sum / n_paths;
        let var = (sum_sq / n_paths - mean * mean).max(0.0);
        let sup_pointwise = pointwise.iter().fold(0.0f64, |m, v| m.max(v / n_paths));
        out.push(ErrorStats {
            num_paths: cfg.num_paths,
            steps: entry.steps,
            level: entry.drift.level(),
            l1_sup: mean,
            lp_sup_mean: sum_pow / n_paths,
            p_moment: cfg.p_moment,
            std_error: (var / n_paths).sqrt(),
            sup_pointwise_l1: sup_pointwise,
        })
    }
    out
}

fn validate_ensemble(sweep: &[SweepEntry], cfg: &EnsembleConfig) -> Result<()> {
    if cfg.num_paths == 0 {
        return Err(Error::invalid("num_paths", "must be positive"));
    }
    for entry in sweep {
        if entry.steps == 0 || !cfg.n_fine.is_multiple_of(entry.steps) {
            return Err(Error::GridMismatch(format!(
                "sweep entry with {} steps does not divide n_fine = {}",
                entry.steps, cfg.n_fine
            )));
        }
    }
    Ok(())
}

/// Strong-error statistics of every sweep entry against the shared
/// reference, using the rayon pool when the `parallel` feature is on.
pub fn ensemble_error_stats(
    reference: &ReferenceScheme,
    sweep: &[SweepEntry],
    cfg: &EnsembleConfig,
) -> Result<Vec<ErrorStats>> {
    validate_ensemble(sweep, cfg)?;
    let chunks = cfg.num_paths.div_ceil(CHUNK);
    #[cfg(feature = "parallel")]
    let partials: Result<Vec<ChunkPartial>> = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(c, reference, sweep, cfg))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Result<Vec<ChunkPartial>> = (0..chunks)
        .map(|c| run_chunk(c, reference, sweep, cfg))
        .collect();
    Ok(reduce(partials?, sweep, cfg))
}

/// Sequential twin of [`ensemble_error_stats`]: same chunking, same
/// reduction order, bit-identical output. Kept unconditionally for
/// benchmarking and determinism checks.
pub fn ensemble_error_stats_sequential(
    reference: &ReferenceScheme,
    sweep: &[SweepEntry],
    cfg: &EnsembleConfig,
) -> Result<Vec<ErrorStats>> {
    validate_ensemble(sweep, cfg)?;
    let chunks = cfg.num_paths.div_ceil(CHUNK);
    let partials: Result<Vec<ChunkPartial>> = (0..chunks)
        .map(|c| run_chunk(c, reference, sweep, cfg))
        .collect();
    Ok(reduce(partials?, sweep, cfg))
}

/// Torus-margin check: the half-length must dominate the start point plus a
/// six-standard-deviation noise excursion plus the drift displacement bound.
pub fn check_torus_margin(
    half_length: f64,
    x0: f64,
    t_horizon: f64,
    drift_sup: f64,
) -> Result<()> {
    let needed = x0.abs() + 6.0 * t_horizon.sqrt() + drift_sup * t_horizon;
    if half_length < needed {
        return Err(Error::invalid(
            "half_length",
            format!("{half_length} below the safety margin {needed:.2} (|x0| + 6 sqrt(T) + T sup|b|)"),
        ));
    }
    Ok(())
}
