//! Mild solution of the backward Kolmogorov equation and the drift-removing
//! transform built from it.
//!
//! For a mollified drift `b` and `lambda > 0`, the equation
//!
//! ```text
//! u_t + u_xx / 2 + b u_x = lambda u - b,    u(T, .) = 0
//! ```
//!
//! is solved in the mild (Duhamel) form
//!
//! ```text
//! u(t) = int_t^T e^{-lambda (s-t)} P_{s-t} [ b(s) u_x(s) + b(s) ] ds
//! ```
//!
//! by Picard iteration on a uniform time grid. Each time panel applies the
//! full linear propagator `e^{-lambda tau} P_tau` exactly in coefficient
//! space (the scalar factor is integrated in closed form over the panel, the
//! heat factor is evaluated at the panel midpoint), while the nonlinear
//! integrand is frozen at the panel midpoint. Folding `lambda` into the
//! propagator keeps the iteration a contraction for every `lambda`;
//! iterating the untilted form would diverge as soon as `lambda T > 1`.
//! Products `b * u_x` are formed on a twice-oversampled grid and projected
//! back, so they are alias-free.
//!
//! Once `|| u_x ||_sup < 1/2` (arranged by `tune_lambda`), the map
//! `phi(t, x) = x + u(t, x)` is a bi-Lipschitz homeomorphism in `x` with
//! constants `1 -+ || u_x ||`; its inverse `psi` is evaluated by monotone
//! bracketing plus secant refinement.

use crate::besov::{GridFunction, SpectralGrid};
use crate::drift::{InterpTable, MollifiedDrift, TABLE_OVERSAMPLE};
use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use std::sync::Arc;

/// Picard sweep cap before the solve is declared non-convergent.
pub const MAX_PICARD_SWEEPS: usize = 200;
/// Largest lambda the geometric search will try.
pub const LAMBDA_CAP: f64 = (1u64 << 20) as f64;
/// Tuning accepts the first lambda with `sup |u_x|` below this margin.
pub const SMALLNESS_TARGET: f64 = 0.45;
/// Residual tolerance of the inverse-transform root solve.
pub const INVERSE_TOL: f64 = 1e-11;

/// Converged mild solution on a uniform time grid.
pub struct MildSolution {
    lambda: f64,
    t_horizon: f64,
    time_grid: Vec<f64>,
    u: Vec<GridFunction>,
    u_x: Vec<GridFunction>,
    sup_ux: f64,
    picard_residual: f64,
    iterations: usize,
    sweep_distances: Vec<f64>,
}

impl MildSolution {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.time_grid
    }

    pub fn u(&self) -> &[GridFunction] {
        &self.u
    }

    pub fn u_x(&self) -> &[GridFunction] {
        &self.u_x
    }

    /// `sup_t sup_x |u_x|`, measured on oversampled node tables.
    pub fn sup_ux(&self) -> f64 {
        self.sup_ux
    }

    /// Final defect of the discrete mild equation.
    pub fn picard_residual(&self) -> f64 {
        self.picard_residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Successive-iterate sup distances, one entry per Picard sweep.
    pub fn sweep_distances(&self) -> &[f64] {
        &self.sweep_distances
    }
}

/// One application of the discrete mild operator: a full backward sweep
/// computing `F(u)` from the previous iterate's midpoint data.
struct MildOperator<'a> {
    bm: &'a MollifiedDrift,
    grid: Arc<SpectralGrid>,
    fine: Arc<SpectralGrid>,
    /// Drift spatial profile prolonged to the dealiasing grid.
    profile_fine: Vec<f64>,
    lambda: f64,
    step: f64,
    times: Vec<f64>,
}

impl<'a> MildOperator<'a> {
    fn new(bm: &'a MollifiedDrift, lambda: f64, t_horizon: f64, nodes: usize) -> Result<Self> {
        let grid = Arc::clone(bm.grid());
        let fine = SpectralGrid::new(grid.half_length(), 2 * grid.num_points())?;
        let profile_fine = bm.space_profile().prolonged_to(&fine).values().to_vec();
        let step = t_horizon / nodes as f64;
        let times = (0..=nodes).map(|i| i as f64 * step).collect();
        Ok(MildOperator {
            bm,
            grid,
            fine,
            profile_fine,
            lambda,
            step,
            times,
        })
    }

    /// Alias-free product `b(t_mid) * (u_x + 1)` projected back to the
    /// solver grid, with `u` taken as the average of the two panel nodes.
    fn panel_integrand(&self, u_lo: &GridFunction, u_hi: &GridFunction, t_mid: f64) -> GridFunction {
        let u_mid_x = u_lo.add(u_hi).scaled(0.5).derivative();
        let ux_fine = u_mid_x.prolonged_to(&self.fine);
        let g = self.bm.spec().modulation(t_mid);
        let values: Vec<f64> = ux_fine
            .values()
            .iter()
            .zip(&self.profile_fine)
            .map(|(ux, b)| g * b * (ux + 1.0))
            .collect();
        GridFunction::from_values(&self.fine, values).restricted_to(&self.grid)
    }

    /// One backward sweep: `out[i] = e^{-lambda h} P_h out[i+1]
    /// + (1 - e^{-lambda h})/lambda * P_{h/2} G_mid(prev)`.
    fn sweep(&self, prev: &[GridFunction]) -> Vec<GridFunction> {
        let nodes = self.times.len() - 1;
        let h = self.step;
        let decay = (-self.lambda * h).exp();
        let panel_weight = (1.0 - decay) / self.lambda;
        let mut out = vec![GridFunction::zero(&self.grid); nodes + 1];
        for i in (0..nodes).rev() {
            let t_mid = 0.5 * (self.times[i] + self.times[i + 1]);
            let integrand = self.panel_integrand(&prev[i], &prev[i + 1], t_mid);
            let propagated = heat_multiplier(&out[i + 1], h).scaled(decay);
            let source = heat_multiplier(&integrand, 0.5 * h).scaled(panel_weight);
            out[i] = propagated.add(&source);
        }
        out
    }
}

fn heat_multiplier(f: &GridFunction, t: f64) -> GridFunction {
    f.apply_multiplier(|xi| Complex64::new((-0.5 * xi * xi * t).exp(), 0.0))
}

fn sup_distance(a: &[GridFunction], b: &[GridFunction]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.sub(y).sup_norm())
        .fold(0.0, f64::max)
}

/// Solves the mild equation by Picard iteration.
///
/// Fails with [`Error::NonConvergence`] when the iteration has not settled
/// below `tol` after [`MAX_PICARD_SWEEPS`] sweeps (or visibly diverges),
/// which signals that `lambda` is too small or the time grid too coarse.
pub fn solve_mild(
    bm: &MollifiedDrift,
    lambda: f64,
    t_horizon: f64,
    time_nodes: usize,
    tol: f64,
) -> Result<MildSolution> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", "must be positive"));
    }
    if time_nodes < 8 {
        return Err(Error::invalid("time_nodes", "need at least 8 panels"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    if !(t_horizon > 0.0) {
        return Err(Error::invalid("t_horizon", "must be positive"));
    }
    let op = MildOperator::new(bm, lambda, t_horizon, time_nodes)?;
    let scale = bm.bounds().sup_norm.max(1.0);
    let mut u: Vec<GridFunction> = vec![GridFunction::zero(bm.grid()); time_nodes + 1];
    let mut distances = Vec::new();
    let mut converged = false;
    for _ in 0..MAX_PICARD_SWEEPS {
        let next = op.sweep(&u);
        let d = sup_distance(&next, &u);
        distances.push(d);
        u = next;
        if !d.is_finite() || d > 1e9 * scale {
            return Err(Error::NonConvergence {
                what: format!("picard iteration (lambda = {lambda})"),
                iterations: distances.len(),
                last: d,
            });
        }
        if d < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: format!("picard iteration (lambda = {lambda})"),
            iterations: distances.len(),
            last: *distances.last().unwrap(),
        });
    }
    // defect of the discrete fixed point, by one extra operator application
    let residual = sup_distance(&op.sweep(&u), &u);
    let u_x: Vec<GridFunction> = u.iter().map(GridFunction::derivative).collect();
    let sup_ux = u_x
        .iter()
        .map(|f| {
            f.oversampled_values(TABLE_OVERSAMPLE)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max);
    Ok(MildSolution {
        lambda,
        t_horizon,
        time_grid: op.times,
        u,
        u_x,
        sup_ux,
        picard_residual: residual,
        iterations: distances.len(),
        sweep_distances: distances,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LambdaAttempt {
    pub lambda: f64,
    /// `sup |u_x|` of the converged solve, `None` when the solve failed.
    pub sup_ux: Option<f64>,
}

pub struct LambdaSearch {
    pub solution: MildSolution,
    pub attempts: Vec<LambdaAttempt>,
}

/// Geometric search `lambda = 1, 2, 4, ...` until `sup |u_x|` drops below
/// [`SMALLNESS_TARGET`]. Non-convergent solves are treated as "lambda too
/// small" and skipped; exceeding [`LAMBDA_CAP`] signals an under-resolved
/// grid.
pub fn tune_lambda(
    bm: &MollifiedDrift,
    t_horizon: f64,
    time_nodes: usize,
    tol: f64,
) -> Result<LambdaSearch> {
    let mut attempts = Vec::new();
    let mut lambda = 1.0;
    while lambda <= LAMBDA_CAP {
        match solve_mild(bm, lambda, t_horizon, time_nodes, tol) {
            Ok(sol) => {
                attempts.push(LambdaAttempt {
                    lambda,
                    sup_ux: Some(sol.sup_ux),
                });
                if sol.sup_ux < SMALLNESS_TARGET {
                    return Ok(LambdaSearch {
                        solution: sol,
                        attempts,
                    });
                }
            }
            Err(Error::NonConvergence { .. }) => {
                attempts.push(LambdaAttempt {
                    lambda,
                    sup_ux: None,
                });
            }
            Err(e) => return Err(e),
        }
        lambda *= 2.0;
    }
    Err(Error::NonConvergence {
        what: format!("lambda search (cap {LAMBDA_CAP})"),
        iterations: attempts.len(),
        last: attempts.last().and_then(|a| a.sup_ux).unwrap_or(f64::NAN),
    })
}

/// The transform `phi(t, x) = x + u(t, x)` and its inverse, with
/// interpolation tables for fast evaluation inside path loops.
///
/// `u` is linear in time between solver nodes and Catmull-Rom in space on
/// oversampled tables.
pub struct ZvonkinPair {
    mild: MildSolution,
    u_tables: Vec<InterpTable>,
    ux_tables: Vec<InterpTable>,
    u_sup: f64,
    lip_lower: f64,
    lip_upper: f64,
}

impl ZvonkinPair {
    pub fn new(mild: MildSolution) -> Self {
        let half = mild.u[0].grid().half_length();
        let u_tables: Vec<InterpTable> = mild
            .u
            .iter()
            .map(|f| InterpTable::new(f.oversampled_values(TABLE_OVERSAMPLE), half))
            .collect();
        let ux_tables: Vec<InterpTable> = mild
            .u_x
            .iter()
            .map(|f| InterpTable::new(f.oversampled_values(TABLE_OVERSAMPLE), half))
            .collect();
        let u_sup = u_tables.iter().map(InterpTable::sup).fold(0.0, f64::max);
        let sup_ux = mild.sup_ux;
        ZvonkinPair {
            mild,
            u_tables,
            ux_tables,
            u_sup,
            lip_lower: 1.0 - sup_ux,
            lip_upper: 1.0 + sup_ux,
        }
    }

    pub fn mild(&self) -> &MildSolution {
        &self.mild
    }

    pub fn lambda(&self) -> f64 {
        self.mild.lambda
    }

    pub fn t_horizon(&self) -> f64 {
        self.mild.t_horizon
    }

    pub fn lip_lower(&self) -> f64 {
        self.lip_lower
    }

    pub fn lip_upper(&self) -> f64 {
        self.lip_upper
    }

    /// Time bracket: clamped node index and linear weight.
    fn locate(&self, t: f64) -> (usize, f64) {
        let nodes = self.mild.time_grid.len() - 1;
        let s = (t / self.mild.t_horizon).clamp(0.0, 1.0) * nodes as f64;
        let i = (s as usize).min(nodes - 1);
        (i, s - i as f64)
    }

    pub fn u_at(&self, t: f64, x: f64) -> f64 {
        let (i, w) = self.locate(t);
        (1.0 - w) * self.u_tables[i].eval(x) + w * self.u_tables[i + 1].eval(x)
    }

    pub fn ux_at(&self, t: f64, x: f64) -> f64 {
        let (i, w) = self.locate(t);
        (1.0 - w) * self.ux_tables[i].eval(x) + w * self.ux_tables[i + 1].eval(x)
    }

    pub fn phi(&self, t: f64, x: f64) -> f64 {
        x + self.u_at(t, x)
    }

    /// Inverse transform: the unique `x` with `phi(t, x) = y`, found by
    /// monotone bracketing followed by secant steps.
    pub fn psi(&self, t: f64, y: f64) -> f64 {
        let pad = self.u_sup + 1e-9;
        let mut a = y - pad;
        let mut b = y + pad;
        let mut fa = self.phi(t, a) - y;
        let mut fb = self.phi(t, b) - y;
        debug_assert!(fa <= 0.0 && fb >= 0.0, "initial bracket invalid");
        // a few bisection steps to shrink the bracket, then secant
        for _ in 0..8 {
            let mid = 0.5 * (a + b);
            let fm = self.phi(t, mid) - y;
            if fm.abs() < INVERSE_TOL {
                return mid;
            }
            if fm < 0.0 {
                a = mid;
                fa = fm;
            } else {
                b = mid;
                fb = fm;
            }
        }
        let mut x = if fb != fa {
            b - fb * (b - a) / (fb - fa)
        } else {
            0.5 * (a + b)
        };
        for _ in 0..60 {
            let fx = self.phi(t, x) - y;
            if fx.abs() < INVERSE_TOL {
                return x;
            }
            if fx < 0.0 {
                a = x;
                fa = fx;
            } else {
                b = x;
                fb = fx;
            }
            let secant = b - fb * (b - a) / (fb - fa);
            x = if secant > a && secant < b {
                secant
            } else {
                0.5 * (a + b)
            };
        }
        x
    }
}
