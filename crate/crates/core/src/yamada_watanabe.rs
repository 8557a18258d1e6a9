//! Smooth approximation of the absolute value in the Yamada-Watanabe style.
//!
//! For `delta > 1` and `kappa` in (0, 1), the density
//! `psi(z) = 1 / (z log delta)` on `[kappa/delta, kappa]` (zero elsewhere)
//! integrates to one, and
//! `phi(x) = int_0^{|x|} int_0^y psi(z) dz dy` is a C^2, convex, even
//! approximation of `|x|` with `|x| - kappa <= phi(x) <= |x|`,
//! `|phi'| <= 1`, and `phi'' = psi(|.|)` bounded by `2 / (|x| log delta)`.
//! This normalized-`1/z` choice admits closed forms for `phi` and `phi'`,
//! so the property checks are exact rather than quadrature-limited; the
//! quadrature below serves as an independent verification route.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct YwParams {
    pub delta: f64,
    pub kappa: f64,
    /// Number of geometric quadrature panels for the verification integral.
    pub quad_points: usize,
}

impl YwParams {
    pub fn new(delta: f64, kappa: f64) -> Result<Self> {
        if !(delta > 1.0) {
            return Err(Error::invalid("delta", format!("{delta} must exceed 1")));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::invalid("kappa", format!("{kappa} outside (0, 1)")));
        }
        Ok(YwParams {
            delta,
            kappa,
            quad_points: 512,
        })
    }
}

/// The pair `(psi, phi)` with tabulated values for plotting.
pub struct YwPair {
    params: YwParams,
    /// Normalizing constant of `z -> c / z`; analytically `1 / log(delta)`.
    normalizer: f64,
    /// Log-spaced abscissae over `(0, 2 kappa]` with `phi, phi', phi''`.
    table: Vec<TableRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct TableRow {
    pub x: f64,
    pub phi: f64,
    pub phi_prime: f64,
    pub phi_second: f64,
}

pub fn build_yw(params: &YwParams) -> Result<YwPair> {
    YwParams::new(params.delta, params.kappa)?;
    let normalizer = 1.0 / params.delta.ln();
    let mut pair = YwPair {
        params: *params,
        normalizer,
        table: Vec::new(),
    };
    let rows = 256usize;
    let lo = (params.kappa / params.delta) * 1e-2;
    let hi = 2.0 * params.kappa;
    let ratio = (hi / lo).powf(1.0 / (rows - 1) as f64);
    let mut x = lo;
    let mut table = Vec::with_capacity(rows);
    for _ in 0..rows {
        table.push(TableRow {
            x,
            phi: pair.phi(x),
            phi_prime: pair.phi_prime(x),
            phi_second: pair.phi_second(x),
        });
        x *= ratio;
    }
    pair.table = table;
    Ok(pair)
}

impl YwPair {
    pub fn params(&self) -> &YwParams {
        &self.params
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn table(&self) -> &[TableRow] {
        &self.table
    }

    /// Density `psi(z) = c / z` on `[kappa/delta, kappa]`.
    pub fn psi(&self, z: f64) -> f64 {
        let (lo, hi) = (self.params.kappa / self.params.delta, self.params.kappa);
        if z >= lo && z <= hi {
            self.normalizer / z
        } else {
            0.0
        }
    }

    /// `phi'(x) = sign(x) * int_0^{|x|} psi`, in closed form.
    pub fn phi_prime(&self, x: f64) -> f64 {
        let (lo, hi) = (self.params.kappa / self.params.delta, self.params.kappa);
        let y = x.abs();
        let mass = if y <= lo {
            0.0
        } else if y >= hi {
            1.0
        } else {
            (y / lo).ln() * self.normalizer
        };
        mass * x.signum()
    }

    /// `phi(x)`, in closed form.
    pub fn phi(&self, x: f64) -> f64 {
        let (lo, hi) = (self.params.kappa / self.params.delta, self.params.kappa);
        let y = x.abs();
        if y <= lo {
            0.0
        } else if y <= hi {
            // int_lo^y log(z/lo)/log(delta) dz = (y ln(y/lo) - y + lo) / ln(delta)
            (y * (y / lo).ln() - y + lo) * self.normalizer
        } else {
            let at_kappa = (hi * (hi / lo).ln() - hi + lo) * self.normalizer;
            at_kappa + (y - hi)
        }
    }

    pub fn phi_second(&self, x: f64) -> f64 {
        self.psi(x.abs())
    }

    /// `int psi` by composite Simpson on geometric panels; an independent
    /// check of the closed-form normalizer.
    pub fn quadrature_mass(&self) -> f64 {
        let (lo, hi) = (self.params.kappa / self.params.delta, self.params.kappa);
        let panels = self.params.quad_points.max(8);
        let ratio = (hi / lo).powf(1.0 / panels as f64);
        let edge = |i: usize| {
            if i == panels {
                hi // guard against rounding drift past the support
            } else {
                lo * ratio.powi(i as i32)
            }
        };
        let mut total = 0.0;
        for i in 0..panels {
            let (a, b) = (edge(i), edge(i + 1));
            let mid = 0.5 * (a + b);
            total += (b - a) / 6.0 * (self.psi(a) + 4.0 * self.psi(mid) + self.psi(b));
        }
        total
    }
}

/// Maximum pointwise defects of the three defining inequalities over a grid.
#[derive(Debug, Clone, Copy)]
pub struct PhiPropertyReport {
    /// Worst violation of `|x| <= kappa + phi(x)` (positive = violated).
    pub absolute_value_defect: f64,
    /// Worst violation of `0 <= |phi'| <= 1`.
    pub derivative_defect: f64,
    /// Worst violation of `phi''(x) <= 2 / (|x| log delta)` on the support.
    pub curvature_defect: f64,
    pub grid_points: usize,
}

impl PhiPropertyReport {
    pub fn max_defect(&self) -> f64 {
        self.absolute_value_defect
            .max(self.derivative_defect)
            .max(self.curvature_defect)
    }
}

/// Evaluates the defining properties pointwise on the supplied grid.
pub fn check_phi_properties(pair: &YwPair, grid: &[f64]) -> PhiPropertyReport {
    let kappa = pair.params.kappa;
    let log_delta = pair.params.delta.ln();
    let lo = kappa / pair.params.delta;
    let mut a = f64::NEG_INFINITY;
    let mut b = f64::NEG_INFINITY;
    let mut c = f64::NEG_INFINITY;
    for &x in grid {
        let phi = pair.phi(x);
        let dphi = pair.phi_prime(x);
        let ddphi = pair.phi_second(x);
        a = a.max(x.abs() - kappa - phi);
        b = b.max(dphi.abs() - 1.0).max(-dphi.abs());
        if x != 0.0 {
            let bound = if x.abs() >= lo && x.abs() <= kappa {
                2.0 / (x.abs() * log_delta)
            } else {
                0.0
            };
            c = c.max(ddphi - bound);
        }
    }
    PhiPropertyReport {
        absolute_value_defect: a,
        derivative_defect: b,
        curvature_defect: c,
        grid_points: grid.len(),
    }
}

/// Uniform grid over `[-2 kappa, 2 kappa]` used by the property suite.
pub fn property_grid(kappa: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| -2.0 * kappa + 4.0 * kappa * i as f64 / (points - 1) as f64)
        .collect()
}
