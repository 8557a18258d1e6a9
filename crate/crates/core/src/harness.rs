//! Convergence-rate formulas and the Monte Carlo rate study.
//!
//! The strong error of the mollified scheme splits into a stability part,
//! driven by the mollification gap `m^{-(beta_hat - beta)/2}`, and a
//! numerical part whose slowest term scales like
//! `m^{(1 + beta_hat + epsilon)/2} n^{-1/2}`. Balancing the two with
//! `m(n) = n^eta` gives
//!
//! ```text
//! eta = 1 / (2 [ (epsilon + beta_hat + 1)/2 + (1/2 - beta_hat - epsilon)^2 ])
//! ```
//!
//! and the resulting guaranteed decay exponents
//!
//! ```text
//! r(beta, epsilon) = (1/2 - beta - epsilon)^2
//!                    / (1 + beta + epsilon + 2 (1/2 - beta - epsilon)^2)
//! ```
//!
//! with `n^{-r/p}` for the L^p-sup error (p >= 2) and
//! `n^{-r (1/2 - beta - epsilon)}` for the L^1-sup error. These are upper
//! bounds with non-constructive constants, so the empirical harness checks
//! one-sidedly: fitted slopes must be at least as steep as the theory, and
//! errors must decrease monotonically across the sweep.

use crate::besov::SpectralGrid;
use crate::drift::{mollify, DriftSpec, MollifiedDrift};
use crate::fit::{fit_loglog, LogLogFit};
use crate::scheme::{
    check_torus_margin, ensemble_error_stats, EnsembleConfig, ErrorStats, ReferenceScheme,
    SweepEntry,
};
use crate::{Error, Result};
use std::io::Write;

/// Largest-n sweep point is dropped from the fit when its Monte Carlo
/// standard error exceeds this fraction of the error value.
pub const NOISE_FLOOR_FRACTION: f64 = 0.25;
/// Errors below this threshold flag the fit as degenerate.
pub const DEGENERATE_ERROR: f64 = 1e-12;

/// `r(beta, epsilon)`: guaranteed decay exponent of `sup_t E|X - X^{m(n),n}|`
/// before the L^1/L^p weighting.
pub fn rate_r(beta: f64, epsilon: f64) -> Result<f64> {
    check_rate_domain(beta, epsilon)?;
    let q = 0.5 - beta - epsilon;
    Ok(q * q / (1.0 + beta + epsilon + 2.0 * q * q))
}

fn check_rate_domain(beta: f64, epsilon: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::invalid("beta", format!("{beta} outside (0, 1/2)")));
    }
    if !(epsilon > 0.0 && epsilon < 0.5 - beta) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} outside (0, 1/2 - beta)"),
        ));
    }
    Ok(())
}

/// Balancing exponent `eta` of `m(n) = n^eta`.
pub fn eta_opt(beta_hat: f64, epsilon: f64) -> Result<f64> {
    if !(beta_hat > 0.0 && beta_hat < 0.5) {
        return Err(Error::invalid(
            "beta_hat",
            format!("{beta_hat} outside (0, 1/2)"),
        ));
    }
    if !(epsilon > 0.0 && beta_hat + epsilon <= 0.5) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} outside (0, 1/2 - beta_hat]"),
        ));
    }
    let q = 0.5 - beta_hat - epsilon;
    Ok(1.0 / (2.0 * ((epsilon + beta_hat + 1.0) / 2.0 + q * q)))
}

/// Residual of the exponent-balancing identity behind `eta_opt`.
///
/// The closed form for `eta` solves
/// `-eta (beta_hat - beta)/2 (2 alpha - 1)^2
///  = (eta (epsilon + beta_hat + 1)/2 - 1/2)(2 alpha - 1)`
/// with `alpha = 1 - beta_hat - epsilon` after the substitution
/// `beta_hat - beta = 1/2 - beta_hat - epsilon`. Reconstructing `beta` and
/// `alpha` that way, this returns the difference of the two sides; an
/// algebra regression that must vanish to rounding error.
pub fn balance_defect(beta_hat: f64, epsilon: f64) -> Result<f64> {
    let eta = eta_opt(beta_hat, epsilon)?;
    let q = 0.5 - beta_hat - epsilon;
    let beta_consistent = beta_hat - q;
    let alpha = 1.0 - beta_hat - epsilon;
    let two_alpha_minus_one = 2.0 * alpha - 1.0;
    let lhs = -eta * (beta_hat - beta_consistent) / 2.0 * two_alpha_minus_one * two_alpha_minus_one;
    let rhs = (eta * (epsilon + beta_hat + 1.0) / 2.0 - 0.5) * two_alpha_minus_one;
    Ok(lhs - rhs)
}

/// Parameter bundle `(beta, beta_hat, epsilon, p)` with the derived
/// auxiliary exponent `alpha = 1 - beta_hat - epsilon`.
#[derive(Debug, Clone, Copy)]
pub struct RateParams {
    pub beta: f64,
    pub beta_hat: f64,
    pub epsilon: f64,
    pub p_moment: f64,
}

impl RateParams {
    pub fn new(beta: f64, beta_hat: f64, epsilon: f64, p_moment: f64) -> Result<Self> {
        check_rate_domain(beta, epsilon)?;
        if !(beta_hat > beta && beta_hat < 0.5) {
            return Err(Error::invalid(
                "beta_hat",
                format!("{beta_hat} outside (beta, 1/2)"),
            ));
        }
        let alpha = 1.0 - beta_hat - epsilon;
        if !(alpha > 0.5 && alpha < 1.0 - beta_hat) {
            return Err(Error::invalid(
                "epsilon",
                format!("alpha = {alpha} outside (1/2, 1 - beta_hat)"),
            ));
        }
        if !(p_moment == 1.0 || p_moment >= 2.0) {
            return Err(Error::invalid("p_moment", "need p = 1 or p >= 2"));
        }
        Ok(RateParams {
            beta,
            beta_hat,
            epsilon,
            p_moment,
        })
    }

    pub fn alpha(&self) -> f64 {
        1.0 - self.beta_hat - self.epsilon
    }

    pub fn eta(&self) -> Result<f64> {
        eta_opt(self.beta_hat, self.epsilon)
    }
}

/// Guaranteed decay exponents `(lp_rate, l1_rate)` of the two error norms.
pub fn theoretical_rates(rp: &RateParams) -> Result<(f64, f64)> {
    let r = rate_r(rp.beta, rp.epsilon)?;
    let lp = if rp.p_moment >= 2.0 { r / rp.p_moment } else { f64::NAN };
    let l1 = r * (0.5 - rp.beta - rp.epsilon);
    Ok((lp, l1))
}

/// Full configuration of a rate study.
#[derive(Debug, Clone)]
pub struct RateStudyConfig {
    pub drift: DriftSpec,
    pub rate: RateParams,
    pub n_list: Vec<usize>,
    pub n_fine: usize,
    pub m_ref: usize,
    pub num_paths: usize,
    pub x0: f64,
    pub t_horizon: f64,
    pub master_seed: u64,
    /// Pins `m` for every `n` instead of `round(n^eta)`; used by smooth
    /// benchmarks where the balancing is irrelevant.
    pub m_fixed: Option<usize>,
    pub grid_points: usize,
    pub grid_half_length: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub n: usize,
    pub m: usize,
    pub l1_sup: f64,
    pub lp_sup: f64,
    pub std_error: f64,
    pub sup_pointwise_l1: f64,
    pub theory_l1: f64,
    pub theory_lp: f64,
}

#[derive(Debug, Clone)]
pub struct RateReport {
    /// Theoretical L^1-sup exponent `r(beta, epsilon) (1/2 - beta - epsilon)`.
    pub theory_rate: f64,
    pub rate_r: f64,
    pub eta: f64,
    pub rows: Vec<SweepRow>,
    pub fitted_slope: f64,
    pub fit_r_squared: f64,
    /// Set when the errors sit at the noise floor (zero drift and the like)
    /// and no meaningful slope exists.
    pub degenerate: bool,
    /// Index of sweep rows actually used by the fit.
    pub fitted_points: usize,
}

/// `m(n) = max(1, round(n^eta))`.
pub fn balanced_mollification(n: usize, eta: f64) -> usize {
    ((n as f64).powf(eta).round() as usize).max(1)
}

fn validate_study(cfg: &RateStudyConfig, ms: &[usize]) -> Result<()> {
    if cfg.n_list.len() < 3 {
        return Err(Error::invalid("n_list", "need at least 3 resolutions"));
    }
    if cfg.n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("n_list", "must be strictly increasing"));
    }
    let n_max = *cfg.n_list.last().unwrap();
    if cfg.n_fine < 8 * n_max {
        return Err(Error::invalid(
            "n_fine",
            format!(
                "reference resolution insufficient: n_fine = {} < 8 * max(n) = {}",
                cfg.n_fine,
                8 * n_max
            ),
        ));
    }
    let m_max = ms.iter().copied().max().unwrap();
    if cfg.m_ref < 4 * m_max {
        return Err(Error::invalid(
            "m_ref",
            format!(
                "reference mollification insufficient: m_ref = {} < 4 * max(m) = {}",
                cfg.m_ref,
                4 * m_max
            ),
        ));
    }
    Ok(())
}

/// Runs the full sweep: build `b^{m(n)}` per resolution, simulate every
/// entry against the shared `(m_ref, n_fine)` Euler reference under coupled
/// noise, and fit the L^1-sup slope.
pub fn run_rate_study(cfg: &RateStudyConfig) -> Result<RateReport> {
    let eta = cfg.rate.eta()?;
    let r = rate_r(cfg.rate.beta, cfg.rate.epsilon)?;
    let (theory_lp, theory_l1) = theoretical_rates(&cfg.rate)?;
    let ms: Vec<usize> = cfg
        .n_list
        .iter()
        .map(|&n| cfg.m_fixed.unwrap_or_else(|| balanced_mollification(n, eta)))
        .collect();
    validate_study(cfg, &ms)?;

    let grid = SpectralGrid::new(cfg.grid_half_length, cfg.grid_points)?;
    let reference_drift = mollify(&cfg.drift, cfg.m_ref, &grid)?;
    check_torus_margin(
        cfg.grid_half_length,
        cfg.x0,
        cfg.t_horizon,
        reference_drift.bounds().sup_norm,
    )?;
    let drifts: Vec<MollifiedDrift> = ms
        .iter()
        .map(|&m| mollify(&cfg.drift, m, &grid))
        .collect::<Result<_>>()?;
    let sweep: Vec<SweepEntry> = cfg
        .n_list
        .iter()
        .zip(&drifts)
        .map(|(&n, d)| SweepEntry { steps: n, drift: d })
        .collect();
    let ens = EnsembleConfig {
        t_horizon: cfg.t_horizon,
        n_fine: cfg.n_fine,
        num_paths: cfg.num_paths,
        master_seed: cfg.master_seed,
        x0: cfg.x0,
        p_moment: cfg.rate.p_moment.max(2.0),
    };
    let stats = ensemble_error_stats(
        &ReferenceScheme::Euler {
            drift: &reference_drift,
        },
        &sweep,
        &ens,
    )?;

    let rows: Vec<SweepRow> = stats
        .iter()
        .map(|s: &ErrorStats| SweepRow {
            n: s.steps,
            m: s.level,
            l1_sup: s.l1_sup,
            lp_sup: s.lp_sup_root(),
            std_error: s.std_error,
            sup_pointwise_l1: s.sup_pointwise_l1,
            theory_l1,
            theory_lp,
        })
        .collect();

    let degenerate = rows.iter().any(|r| r.l1_sup < DEGENERATE_ERROR);
    let (fit, used) = if degenerate {
        (None, 0)
    } else {
        fit_sweep(&rows)?
    };
    Ok(RateReport {
        theory_rate: theory_l1,
        rate_r: r,
        eta,
        rows,
        fitted_slope: fit.map_or(f64::NAN, |f| f.slope),
        fit_r_squared: fit.map_or(f64::NAN, |f| f.r_squared),
        degenerate,
        fitted_points: used,
    })
}

type FitOutcome = (Option<LogLogFit>, usize);

/// Ordinary least squares on `log2 n -> log2 l1_sup`, dropping the
/// largest-n point when its standard error exceeds a quarter of the error
/// (noise floor).
fn fit_sweep(rows: &[SweepRow]) -> Result<FitOutcome> {
    let mut usable = rows.len();
    if let Some(last) = rows.last() {
        if last.std_error > NOISE_FLOOR_FRACTION * last.l1_sup && usable > 3 {
            usable -= 1;
        }
    }
    let xs: Vec<f64> = rows[..usable].iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows[..usable].iter().map(|r| r.l1_sup).collect();
    Ok((Some(fit_loglog(&xs, &ys)?), usable))
}

/// CSV of the sweep (header plus one row per resolution), followed by a
/// summary comment line.
pub fn write_rate_csv(report: &RateReport, out: &mut impl Write) -> Result<()> {
    writeln!(out, "n,m,l1_sup,lp_sup,std_error,theory_l1,theory_lp")?;
    for row in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.n, row.m, row.l1_sup, row.lp_sup, row.std_error, row.theory_l1, row.theory_lp
        )?;
    }
    writeln!(
        out,
        "# fitted_slope={} fit_r2={} eta={} rate_r={} degenerate={}",
        report.fitted_slope, report.fit_r_squared, report.eta, report.rate_r, report.degenerate
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{DriftKind, TimeModulation};

    #[test]
    fn rate_formula_spot_values() {
        // q = 0.35: 0.1225 / 1.395 = 49/558
        let r = rate_r(0.1, 0.05).unwrap();
        assert!((r - 49.0 / 558.0).abs() < 1e-15);
        assert!((r - 0.087_814).abs() < 1e-6);
        // numerator vanishes as beta + epsilon -> 1/2
        assert!(rate_r(0.4, 0.099_99).unwrap() < 1e-6);
        // supremum of achievable rates: beta, epsilon -> 0 gives 1/6
        assert!((rate_r(1e-9, 1e-9).unwrap() - 1.0 / 6.0).abs() < 1e-8);
    }

    #[test]
    fn rate_domain_is_enforced() {
        assert!(rate_r(0.0, 0.1).is_err());
        assert!(rate_r(0.5, 0.1).is_err());
        assert!(rate_r(0.3, 0.2).is_err());
        assert!(rate_r(0.3, -0.1).is_err());
        assert!(eta_opt(0.0, 0.1).is_err());
        assert!(eta_opt(0.3, 0.25).is_err());
    }

    #[test]
    fn eta_spot_values() {
        // square term vanishes on the boundary beta_hat + epsilon = 1/2
        assert!((eta_opt(0.4, 0.1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // 1 / (2 (0.6 + 0.09)) = 1/1.38 = 50/69
        assert!((eta_opt(0.15, 0.05).unwrap() - 50.0 / 69.0).abs() < 1e-15);
        assert!((eta_opt(0.15, 0.05).unwrap() - 0.724_638).abs() < 1e-6);
        // 1 / (2 (0.745 + 0.0001))
        assert!((eta_opt(0.45, 0.04).unwrap() - 1.0 / 1.4902).abs() < 1e-15);
        assert!((eta_opt(0.45, 0.04).unwrap() - 0.6711).abs() < 1e-4);
    }

    #[test]
    fn balancing_identity_holds_to_rounding_error() {
        for i in 0..20u64 {
            let beta_hat = 0.05 + 0.4 * crate::rng::uniform_draw(1, i, 0);
            let epsilon = (0.5 - beta_hat) * (0.1 + 0.8 * crate::rng::uniform_draw(1, i, 1));
            let defect = balance_defect(beta_hat, epsilon).unwrap();
            assert!(defect.abs() < 1e-12, "({beta_hat}, {epsilon}): {defect}");
        }
    }

    #[test]
    fn theoretical_rates_spot_values() {
        let rp = RateParams::new(0.1, 0.15, 0.05, 2.0).unwrap();
        let (lp, l1) = theoretical_rates(&rp).unwrap();
        assert!((lp - 0.043_906_8).abs() < 1e-6);
        assert!((l1 - 0.030_735).abs() < 1e-5);
        // 1/p factor sends the Lp rate to zero as p grows
        let rp_big = RateParams::new(0.1, 0.15, 0.05, 1e9).unwrap();
        assert!(theoretical_rates(&rp_big).unwrap().0 < 1e-9);
    }

    #[test]
    fn rate_params_validation() {
        assert!(RateParams::new(0.1, 0.15, 0.05, 2.0).is_ok());
        assert!(RateParams::new(0.1, 0.05, 0.05, 2.0).is_err()); // beta_hat <= beta
        assert!(RateParams::new(0.1, 0.15, 0.39, 2.0).is_err()); // alpha <= 1/2
        assert!(RateParams::new(0.1, 0.15, 0.05, 1.5).is_err()); // p in (1, 2)
        assert!(RateParams::new(0.1, 0.15, 0.05, 1.0).is_ok());
    }

    #[test]
    fn rate_is_monotone_decreasing_in_both_arguments() {
        let mut prev = f64::INFINITY;
        for i in 1..20 {
            let beta = 0.02 * i as f64;
            let r = rate_r(beta, 0.05).unwrap();
            assert!(r < prev);
            prev = r;
        }
        prev = f64::INFINITY;
        for i in 1..20 {
            let eps = 0.02 * i as f64;
            let r = rate_r(0.05, eps).unwrap();
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn balanced_mollification_is_nondecreasing_in_n() {
        for eta in [0.6, 2.0 / 3.0, 0.7246376811594203, 0.75] {
            let mut prev = 0;
            for k in 1..=12 {
                let m = balanced_mollification(1 << k, eta);
                assert!(m >= prev && m >= 1);
                prev = m;
            }
        }
    }

    fn small_config() -> RateStudyConfig {
        RateStudyConfig {
            drift: DriftSpec {
                kind: DriftKind::SmoothBenchmark,
                beta: 0.1,
                seed: 1,
                amplitude: 1.0,
                time_modulation: TimeModulation::Constant,
            },
            rate: RateParams::new(0.1, 0.15, 0.05, 2.0).unwrap(),
            n_list: vec![16, 32, 64, 128],
            n_fine: 1 << 11,
            m_ref: 256,
            num_paths: 600,
            x0: 0.5,
            t_horizon: 1.0,
            master_seed: 4242,
            m_fixed: Some(64),
            grid_points: 1024,
            grid_half_length: 16.0,
        }
    }

    #[test]
    fn smooth_benchmark_study_recovers_first_order() {
        let report = run_rate_study(&small_config()).unwrap();
        assert!(!report.degenerate);
        assert!(
            (report.fitted_slope + 1.0).abs() < 0.2,
            "slope {}",
            report.fitted_slope
        );
        assert!(report.fit_r_squared > 0.95);
        for row in &report.rows {
            assert_eq!(row.m, 64);
        }
    }

    #[test]
    fn reference_resolution_guards() {
        let mut cfg = small_config();
        cfg.n_fine = 512; // < 8 * 128
        assert!(matches!(run_rate_study(&cfg), Err(Error::InvalidParameter { name: "n_fine", .. })));
        let mut cfg = small_config();
        cfg.m_ref = 128; // < 4 * 64
        assert!(matches!(run_rate_study(&cfg), Err(Error::InvalidParameter { name: "m_ref", .. })));
        let mut cfg = small_config();
        cfg.n_list = vec![16, 16, 64, 128];
        assert!(run_rate_study(&cfg).is_err());
    }

    #[test]
    fn zero_amplitude_study_flags_a_degenerate_fit() {
        let mut cfg = small_config();
        cfg.drift.amplitude = 0.0;
        let report = run_rate_study(&cfg).unwrap();
        assert!(report.degenerate);
        assert!(report.fitted_slope.is_nan());
    }

    #[test]
    fn csv_round_trips_the_sweep_rows() {
        let report = run_rate_study(&small_config()).unwrap();
        let mut buf = Vec::new();
        write_rate_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,m,l1_sup,lp_sup,std_error,theory_l1,theory_lp"
        );
        let mut rows = 0;
        for line in lines {
            if line.starts_with('#') {
                assert!(line.contains("fitted_slope="));
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 7);
            let n: usize = fields[0].parse().unwrap();
            let l1: f64 = fields[2].parse().unwrap();
            assert_eq!(n, report.rows[rows].n);
            assert_eq!(l1.to_bits(), report.rows[rows].l1_sup.to_bits());
            rows += 1;
        }
        assert_eq!(rows, report.rows.len());
    }

    #[test]
    fn identical_configs_produce_bit_identical_reports() {
        let a = run_rate_study(&small_config()).unwrap();
        let b = run_rate_study(&small_config()).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.l1_sup.to_bits(), rb.l1_sup.to_bits());
            assert_eq!(ra.std_error.to_bits(), rb.std_error.to_bits());
        }
        assert_eq!(a.fitted_slope.to_bits(), b.fitted_slope.to_bits());
    }
}
