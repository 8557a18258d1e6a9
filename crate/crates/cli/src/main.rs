//! `emlab`: batch driver for the mollified Euler-Maruyama laboratory.
//!
//! Subcommands map onto the library's analysis stages: `besov` (block-norm
//! tables and semigroup checks), `yw` (smooth absolute-value approximation
//! suite), `pde` (mild-solution solver diagnostics), `simulate` (one
//! strong-error ensemble), and `rate-study` (the full `m(n) = n^eta`
//! sweep). Every run writes its outputs as CSV plus a `run.manifest`
//! snapshot of the effective configuration; feeding the manifest back via
//! `--config` reproduces the outputs bit-for-bit with any worker count.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 property
//! check failure, 4 numerical non-convergence.

use clap::{Args, Parser, Subcommand};
use mollified_em::besov::{
    check_bernstein, check_schauder, besov_norm, DyadicPartition, GridFunction, SpectralGrid,
};
use mollified_em::config::{rate_study_from, KvConfig, ACCEPTED_KEYS};
use mollified_em::drift::{build_drift, mollify, DriftSpec, MollifiedDrift};
use mollified_em::harness::{run_rate_study, write_rate_csv};
use mollified_em::scheme::{
    ensemble_error_stats, EnsembleConfig, ErrorStats, ReferenceScheme, SweepEntry,
};
use mollified_em::yamada_watanabe::{build_yw, check_phi_properties, property_grid, YwParams};
use mollified_em::zvonkin::{solve_mild, tune_lambda, MildSolution};
use mollified_em::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;
const EXIT_NONCONVERGENCE: u8 = 4;

/// Defect threshold of the absolute-value approximation suite.
const YW_DEFECT_TOL: f64 = 1e-8;
/// One-sided slope margin of the rate study check.
const RATE_SLOPE_MARGIN: f64 = 0.02;

#[derive(Parser)]
#[command(name = "emlab", version, about = "Strong-convergence laboratory for SDEs with rough drift")]
struct Cli {
    /// Flat key=value configuration file (a previous run.manifest works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSVs and the run manifest.
    #[arg(long, global = true, default_value = "emlab-out")]
    out: PathBuf,
    /// Master seed override (scheme.master_seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for path ensembles (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Block-norm table and Bernstein/Schauder checks for a named function
    /// or a distributional drift.
    Besov(BesovArgs),
    /// Build and verify the smooth absolute-value approximation pair.
    Yw(YwArgs),
    /// Solve the drift-removal equation and dump solver diagnostics.
    Pde(PdeArgs),
    /// One strong-error ensemble at a fixed (n, m) against the reference.
    Simulate(SimulateArgs),
    /// Full rate study: m(n) = n^eta sweep with slope fit.
    RateStudy,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct BesovArgs {
    /// Named test function: sin | lacunary.
    #[arg(long)]
    func: Option<String>,
    /// Analyze a distributional drift of this regularity instead.
    #[arg(long)]
    drift_beta: Option<f64>,
    /// Weight exponent of the block table.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Also run the differentiation-ratio check.
    #[arg(long)]
    bernstein: bool,
    /// Also run the semigroup smoothing-slope check.
    #[arg(long)]
    schauder: bool,
    /// Smoothing exponent for --schauder.
    #[arg(long, default_value_t = 0.25)]
    theta: f64,
}

#[derive(Args)]
struct YwArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    kappa: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct PdeArgs {
    /// Drift preset: zero | ou | holder | distributional.
    #[arg(long, default_value = "ou")]
    drift: String,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Fix lambda instead of auto-tuning.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    time_nodes: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Mollification level of the drift fed to the solver.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    /// Drift preset: zero | ou | holder | distributional.
    #[arg(long, default_value = "ou")]
    drift: String,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Coarse resolution of the ensemble.
    #[arg(long)]
    n: Option<usize>,
    /// Mollification level of the simulated drift.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    m_ref: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

fn run(cli: Cli) -> mollified_em::Result<ExitCode> {
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }

    let mut cfg = match &cli.config {
        Some(path) => KvConfig::parse(&fs::read_to_string(path)?)?,
        None => KvConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("scheme.master_seed", seed);
    }
    fs::create_dir_all(&cli.out)?;

    match &cli.command {
        Command::Besov(args) => cmd_besov(args, cfg, &cli.out),
        Command::Yw(args) => cmd_yw(args, cfg, &cli.out),
        Command::Pde(args) => cmd_pde(args, cfg, &cli.out),
        Command::Simulate(args) => cmd_simulate(args, cfg, &cli.out),
        Command::RateStudy => cmd_rate_study(cfg, &cli.out),
    }
}

fn write_manifest(cfg: &KvConfig, command: &str, out_dir: &Path) -> mollified_em::Result<()> {
    let mut snapshot = cfg.clone();
    snapshot.set("run.command", command);
    snapshot.set("run.version", env!("CARGO_PKG_VERSION"));
    snapshot.set(
        "run.master_seed",
        cfg.get("scheme.master_seed").unwrap_or("1"),
    );
    fs::write(out_dir.join("run.manifest"), snapshot.render())?;
    Ok(())
}

fn check_manifest_command(cfg: &KvConfig, command: &str) -> mollified_em::Result<()> {
    if let Some(recorded) = cfg.get("run.command") {
        if recorded != command {
            return Err(Error::Config(format!(
                "manifest records command `{recorded}`, but `{command}` was requested"
            )));
        }
    }
    Ok(())
}

fn keys_with(extra: &[&'static str]) -> Vec<&'static str> {
    let mut v: Vec<&'static str> = ACCEPTED_KEYS.to_vec();
    v.extend_from_slice(extra);
    v
}

fn grid_from(cfg: &KvConfig, default_points: usize) -> mollified_em::Result<Arc<SpectralGrid>> {
    SpectralGrid::new(
        cfg.get_f64("grid.half_length")?.unwrap_or(16.0),
        cfg.get_usize("grid.points")?.unwrap_or(default_points),
    )
}

/// Maps a CLI drift preset onto a spec (zero is the amplitude-0 benchmark).
fn preset_spec(cfg: &KvConfig, preset: &str) -> mollified_em::Result<DriftSpec> {
    let mut base = mollified_em::config::drift_spec_from(cfg)?;
    match preset {
        "zero" => {
            base.kind = mollified_em::drift::DriftKind::SmoothBenchmark;
            base.amplitude = 0.0;
        }
        "ou" => base.kind = mollified_em::drift::DriftKind::SmoothBenchmark,
        "holder" => base.kind = mollified_em::drift::DriftKind::HolderFunction,
        "distributional" => base.kind = mollified_em::drift::DriftKind::DistributionalDerivative,
        other => {
            return Err(Error::Config(format!(
                "drift preset `{other}` is not one of zero | ou | holder | distributional"
            )))
        }
    }
    base.validate()?;
    Ok(base)
}

// ---------------------------------------------------------------- besov --

fn cmd_besov(args: &BesovArgs, mut cfg: KvConfig, out_dir: &Path) -> mollified_em::Result<ExitCode> {
    if let Some(f) = &args.func {
        cfg.set("besov.func", f);
    }
    if let Some(b) = args.drift_beta {
        cfg.set("besov.drift_beta", b);
        cfg.set("drift.kind", "distributional_derivative");
        cfg.set("drift.beta", b);
    }
    cfg.set("besov.gamma", args.gamma);
    cfg.set("besov.bernstein", args.bernstein);
    cfg.set("besov.schauder", args.schauder);
    cfg.set("besov.theta", args.theta);
    cfg.reject_unknown(&keys_with(&[
        "besov.func",
        "besov.drift_beta",
        "besov.gamma",
        "besov.bernstein",
        "besov.schauder",
        "besov.theta",
    ]))?;
    check_manifest_command(&cfg, "besov")?;

    let gamma = cfg.get_f64("besov.gamma")?.unwrap_or(0.5);
    let grid = grid_from(&cfg, 1 << 12)?;
    let part = DyadicPartition::new(&grid);

    let f: GridFunction = if let Some(beta) = cfg.get_f64("besov.drift_beta")? {
        let mut spec = mollified_em::config::drift_spec_from(&cfg)?;
        spec.kind = mollified_em::drift::DriftKind::DistributionalDerivative;
        spec.beta = beta;
        build_drift(&spec, &grid)?
    } else {
        match cfg.get("besov.func").unwrap_or("sin") {
            "sin" => {
                let k = grid.nearest_mode(1.0);
                GridFunction::mode(&grid, k, 1.0, 0.0)
            }
            "lacunary" => {
                let mut acc = GridFunction::zero(&grid);
                for j in 0..=grid.max_block() {
                    let k = grid.nearest_mode(f64::powi(2.0, j));
                    let amp = f64::powf(2.0, -0.5 * f64::from(j));
                    acc = acc.add(&GridFunction::mode(&grid, k, amp, 0.0));
                }
                acc
            }
            other => {
                return Err(Error::Config(format!(
                    "besov.func `{other}` is not one of sin | lacunary"
                )))
            }
        }
    };

    let norm = besov_norm(&f, gamma)?;
    let rows = part.block_table(&f, gamma)?;
    let mut csv = String::from("j,block_sup,weighted\n");
    for row in &rows {
        csv.push_str(&format!("{},{},{}\n", row.block, row.block_sup, row.weighted));
    }
    fs::write(out_dir.join("blocks.csv"), csv)?;
    let mut profile = String::from("x,value\n");
    for (i, v) in f.values().iter().enumerate() {
        profile.push_str(&format!("{},{}\n", grid.x(i), v));
    }
    fs::write(out_dir.join("profile.csv"), profile)?;
    println!("besov_norm(gamma = {gamma}) = {norm}");

    let mut failed = false;
    if args.bernstein {
        let ratio = check_bernstein(&part, &f, gamma.clamp(-2.0, 2.0))?;
        let ok = ratio <= 4.0;
        failed |= !ok;
        println!("bernstein_ratio = {ratio} ({})", if ok { "ok" } else { "FAIL: > 4" });
    }
    if args.schauder {
        let times: Vec<f64> = (0..8).map(|i| 2e-4 * f64::powi(2.0, i)).collect();
        let rep = check_schauder(&part, &f, gamma, args.theta, &times)?;
        let ok = rep.growth_slope >= -(args.theta + 0.15);
        failed |= !ok;
        println!(
            "schauder_growth_slope = {} decay_slope = {} ({})",
            rep.growth_slope,
            rep.decay_slope,
            if ok { "ok" } else { "FAIL: grows faster than t^-theta" }
        );
    }
    write_manifest(&cfg, "besov", out_dir)?;
    Ok(if failed {
        ExitCode::from(EXIT_CHECK)
    } else {
        ExitCode::SUCCESS
    })
}

// ------------------------------------------------------------------- yw --

fn cmd_yw(args: &YwArgs, mut cfg: KvConfig, out_dir: &Path) -> mollified_em::Result<ExitCode> {
    cfg.set("yw.delta", args.delta);
    cfg.set("yw.kappa", args.kappa);
    cfg.reject_unknown(&keys_with(&["yw.delta", "yw.kappa"]))?;
    check_manifest_command(&cfg, "yw")?;

    let params = YwParams::new(
        cfg.get_f64("yw.delta")?.unwrap_or(args.delta),
        cfg.get_f64("yw.kappa")?.unwrap_or(args.kappa),
    )?;
    let pair = build_yw(&params)?;
    let mass = pair.quadrature_mass();
    let report = check_phi_properties(&pair, &property_grid(params.kappa, 10_001));

    let mut csv = String::from("x,phi,phi_prime,phi_second\n");
    for row in pair.table() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.x, row.phi, row.phi_prime, row.phi_second
        ));
    }
    fs::write(out_dir.join("yw_profile.csv"), csv)?;
    write_manifest(&cfg, "yw", out_dir)?;

    let mass_ok = (mass - 1.0).abs() < 1e-10;
    let defects_ok = report.max_defect() < YW_DEFECT_TOL;
    println!(
        "normalizer = {}  quadrature_mass = {mass} ({})",
        pair.normalizer(),
        if mass_ok { "ok" } else { "FAIL" }
    );
    println!(
        "defects: |x|<=kappa+phi {:.3e}  |phi'|<=1 {:.3e}  curvature {:.3e} ({})",
        report.absolute_value_defect,
        report.derivative_defect,
        report.curvature_defect,
        if defects_ok { "ok" } else { "FAIL" }
    );
    Ok(if mass_ok && defects_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    })
}

// ------------------------------------------------------------------ pde --

fn cmd_pde(args: &PdeArgs, mut cfg: KvConfig, out_dir: &Path) -> mollified_em::Result<ExitCode> {
    cfg.set("pde.drift", &args.drift);
    if let Some(v) = args.amplitude {
        cfg.set("drift.amplitude", v);
    }
    if let Some(v) = args.beta {
        cfg.set("drift.beta", v);
    }
    if let Some(v) = args.lambda {
        cfg.set("pde.lambda", v);
    }
    if let Some(v) = args.time_nodes {
        cfg.set("pde.time_nodes", v);
    }
    if let Some(v) = args.tol {
        cfg.set("pde.tol", v);
    }
    if let Some(v) = args.m {
        cfg.set("pde.m", v);
    }
    cfg.reject_unknown(&keys_with(&["pde.drift", "pde.m"]))?;
    check_manifest_command(&cfg, "pde")?;

    let spec = preset_spec(&cfg, cfg.get("pde.drift").unwrap_or("ou"))?;
    let grid = grid_from(&cfg, 1 << 10)?;
    let m = cfg.get_usize("pde.m")?.unwrap_or(64);
    let bm = mollify(&spec, m, &grid)?;
    let t_horizon = cfg.get_f64("scheme.T")?.unwrap_or(1.0);
    let nodes = cfg.get_usize("pde.time_nodes")?.unwrap_or(64);
    let tol = cfg.get_f64("pde.tol")?.unwrap_or(1e-8);

    let sol: MildSolution = match cfg.get_f64("pde.lambda")? {
        Some(lambda) => solve_mild(&bm, lambda, t_horizon, nodes, tol)?,
        None => {
            let search = tune_lambda(&bm, t_horizon, nodes, tol)?;
            for a in &search.attempts {
                match a.sup_ux {
                    Some(s) => println!("lambda = {}  sup_ux = {s}", a.lambda),
                    None => println!("lambda = {}  (no convergence)", a.lambda),
                }
            }
            search.solution
        }
    };

    let mut csv = String::from("iteration,sup_distance,residual\n");
    let d = sol.sweep_distances();
    for (i, &dist) in d.iter().enumerate() {
        let residual = d.get(i + 1).copied().unwrap_or(sol.picard_residual());
        csv.push_str(&format!("{},{},{}\n", i + 1, dist, residual));
    }
    fs::write(out_dir.join("pde_iterations.csv"), csv)?;
    write_manifest(&cfg, "pde", out_dir)?;
    println!(
        "lambda = {}  iterations = {}  sup_ux = {}  residual = {:.3e}",
        sol.lambda(),
        sol.iterations(),
        sol.sup_ux(),
        sol.picard_residual()
    );
    Ok(ExitCode::SUCCESS)
}

// ------------------------------------------------------------- simulate --

fn cmd_simulate(
    args: &SimulateArgs,
    mut cfg: KvConfig,
    out_dir: &Path,
) -> mollified_em::Result<ExitCode> {
    cfg.set("simulate.drift", &args.drift);
    if let Some(v) = args.amplitude {
        cfg.set("drift.amplitude", v);
    }
    if let Some(v) = args.beta {
        cfg.set("drift.beta", v);
    }
    if let Some(v) = args.n {
        cfg.set("simulate.n", v);
    }
    if let Some(v) = args.m {
        cfg.set("simulate.m", v);
    }
    if let Some(v) = args.m_ref {
        cfg.set("scheme.m_ref", v);
    }
    if let Some(v) = args.paths {
        cfg.set("scheme.paths", v);
    }
    cfg.reject_unknown(&keys_with(&["simulate.drift", "simulate.n", "simulate.m"]))?;
    check_manifest_command(&cfg, "simulate")?;

    let spec = preset_spec(&cfg, cfg.get("simulate.drift").unwrap_or("ou"))?;
    let grid = grid_from(&cfg, 1 << 12)?;
    let n = cfg.get_usize("simulate.n")?.unwrap_or(256);
    let m = cfg.get_usize("simulate.m")?.unwrap_or(64);
    let m_ref = cfg.get_usize("scheme.m_ref")?.unwrap_or(4 * m);
    let ens = EnsembleConfig {
        t_horizon: cfg.get_f64("scheme.T")?.unwrap_or(1.0),
        n_fine: cfg.get_usize("scheme.n_fine")?.unwrap_or(1 << 13),
        num_paths: cfg.get_usize("scheme.paths")?.unwrap_or(1000),
        master_seed: cfg.get_u64("scheme.master_seed")?.unwrap_or(1),
        x0: cfg.get_f64("scheme.x0")?.unwrap_or(0.0),
        p_moment: cfg.get_f64("rate.p")?.unwrap_or(2.0),
    };
    let bm: MollifiedDrift = mollify(&spec, m, &grid)?;
    let bm_ref = mollify(&spec, m_ref, &grid)?;
    mollified_em::scheme::check_torus_margin(
        grid.half_length(),
        ens.x0,
        ens.t_horizon,
        bm_ref.bounds().sup_norm,
    )?;

    let started = Instant::now();
    let stats = ensemble_error_stats(
        &ReferenceScheme::Euler { drift: &bm_ref },
        &[SweepEntry { steps: n, drift: &bm }],
        &ens,
    )?;
    let wall = started.elapsed().as_secs_f64();
    let s: &ErrorStats = &stats[0];
    let mut csv = String::from(
        "n,m,num_paths,l1_sup,lp_sup,p,sup_pointwise_l1,std_error,wall_time_s\n",
    );
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{},{}\n",
        s.steps,
        s.level,
        s.num_paths,
        s.l1_sup,
        s.lp_sup_root(),
        s.p_moment,
        s.sup_pointwise_l1,
        s.std_error,
        wall
    ));
    fs::write(out_dir.join("ensemble.csv"), csv)?;
    write_manifest(&cfg, "simulate", out_dir)?;
    println!(
        "n = {n}  m = {m}  l1_sup = {}  std_error = {}",
        s.l1_sup, s.std_error
    );
    Ok(ExitCode::SUCCESS)
}

// ----------------------------------------------------------- rate-study --

fn cmd_rate_study(cfg: KvConfig, out_dir: &Path) -> mollified_em::Result<ExitCode> {
    check_manifest_command(&cfg, "rate-study")?;
    let study = rate_study_from(&cfg)?;
    let report = run_rate_study(&study)?;

    let mut buf = Vec::new();
    write_rate_csv(&report, &mut buf)?;
    fs::write(out_dir.join("rate_study.csv"), buf)?;
    write_manifest(&cfg, "rate-study", out_dir)?;

    println!(
        "eta = {}  rate_r = {}  theory_l1_rate = {}",
        report.eta, report.rate_r, report.theory_rate
    );
    if report.degenerate {
        println!("fit degenerate: errors at the noise floor");
        return Ok(ExitCode::SUCCESS);
    }
    println!(
        "fitted_slope = {}  r2 = {}  (over {} points)",
        report.fitted_slope, report.fit_r_squared, report.fitted_points
    );
    // one-sided check: the empirical decay may not be slower than theory
    let bound = -report.theory_rate + RATE_SLOPE_MARGIN;
    if report.fitted_slope > bound {
        println!("FAIL: fitted slope {} above the bound {bound}", report.fitted_slope);
        return Ok(ExitCode::from(EXIT_CHECK));
    }
    println!("slope check ok: {} <= {bound}", report.fitted_slope);
    Ok(ExitCode::SUCCESS)
}
