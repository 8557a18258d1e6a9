//! Acceptance: manifest-based reproducibility. Re-running any experiment
//! from its recorded manifest, with any worker count, must reproduce the
//! result CSVs byte for byte. The only exempt field is the wall-clock
//! timing column of the ensemble CSV, which reports a measurement of the
//! run rather than a result of the computation; it is stripped before
//! comparison.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn emlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emlab"))
}

fn run_ok(args: &[&str], dir: &Path) {
    let out = emlab().args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "emlab {args:?} failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("missing {path:?}: {e}"))
}

/// Drops the wall_time_s column (always the trailing field).
fn strip_wall_time(csv: &str) -> String {
    let mut out = String::new();
    for line in csv.lines() {
        match line.rsplit_once(',') {
            Some((rest, _last)) => {
                out.push_str(rest);
                out.push('\n');
            }
            None => {
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    out
}

#[test]
fn criterion_10_manifest_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let config = dir.join("study.conf");
    fs::write(
        &config,
        "drift.kind = distributional_derivative\n\
         drift.beta = 0.1\n\
         drift.amplitude = 0.5\n\
         rate.beta_hat = 0.15\n\
         rate.epsilon = 0.05\n\
         scheme.n_list = 16, 32, 64\n\
         scheme.n_fine = 1024\n\
         scheme.paths = 600\n\
         scheme.master_seed = 9\n\
         grid.points = 4096\n",
    )
    .unwrap();

    // original run on the default pool
    run_ok(
        &["--config", "study.conf", "--out", "a", "rate-study"],
        dir,
    );
    let csv_a = read(dir.join("a/rate_study.csv"));
    let manifest = dir.join("a/run.manifest");
    assert!(manifest.exists());

    // re-run from the manifest, single worker
    run_ok(
        &[
            "--config",
            "a/run.manifest",
            "--out",
            "b",
            "--workers",
            "1",
            "rate-study",
        ],
        dir,
    );
    let csv_b = read(dir.join("b/rate_study.csv"));
    assert_eq!(csv_a, csv_b, "rate CSV differs between pool widths");
    assert_eq!(
        read(dir.join("a/run.manifest")),
        read(dir.join("b/run.manifest")),
        "manifest not stable under rerun"
    );

    // re-run from the manifest again on a wide pool
    run_ok(
        &[
            "--config",
            "a/run.manifest",
            "--out",
            "c",
            "--workers",
            "4",
            "rate-study",
        ],
        dir,
    );
    assert_eq!(csv_a, read(dir.join("c/rate_study.csv")));

    // per-ensemble output: identical up to the timing column
    run_ok(
        &["--seed", "5", "--out", "s1", "simulate", "--drift", "ou", "--n", "64", "--paths", "300"],
        dir,
    );
    run_ok(
        &[
            "--config",
            "s1/run.manifest",
            "--out",
            "s2",
            "--workers",
            "2",
            "simulate",
            "--drift",
            "ou",
        ],
        dir,
    );
    let e1 = strip_wall_time(&read(dir.join("s1/ensemble.csv")));
    let e2 = strip_wall_time(&read(dir.join("s2/ensemble.csv")));
    assert_eq!(e1, e2, "ensemble CSV differs beyond the timing column");

    // deterministic analysis outputs reproduce exactly
    run_ok(&["--out", "y1", "yw", "--delta", "2", "--kappa", "0.01"], dir);
    run_ok(
        &["--config", "y1/run.manifest", "--out", "y2", "yw", "--delta", "2", "--kappa", "0.01"],
        dir,
    );
    assert_eq!(read(dir.join("y1/yw_profile.csv")), read(dir.join("y2/yw_profile.csv")));

    println!("[PASS] criterion 10 - manifest reruns reproduce outputs bit-for-bit across worker counts");
}
