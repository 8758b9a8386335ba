//! End-to-end tests of the `beamcast` binary: exit codes, emitted
//! files, and the resume/plot workflows, all against tiny
//! configurations that finish in well under a second.

use std::path::Path;
use std::process::{Command, Output};

use beamcast_core::montecarlo::{from_json, RunDocument, SweepDocument};

fn beamcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamcast"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

/// One beam (no outer rings), 20 km radius, two users, two iterations:
/// the smallest configuration that still schedules a real frame.
const TINY: &[&str] = &[
    "--set",
    "layout.rings=0",
    "--set",
    "layout.beam_radius_km=20",
    "--set",
    "cluster.size=2",
    "--set",
    "run.iterations=2",
];

#[test]
fn validate_accepts_the_default_configuration() {
    let output = beamcast(&["validate"]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert!(stdout.contains("7 beams"), "{stdout}");
}

#[test]
fn validate_rejects_bad_values_with_exit_code_2() {
    let output = beamcast(&["validate", "--set", "run.iterations=0"]);
    assert_eq!(output.status.code(), Some(2), "{}", stderr_of(&output));
}

#[test]
fn unknown_keys_fail_with_exit_code_2_and_name_the_key() {
    let output = beamcast(&["validate", "--set", "cluster.shape=hex"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(
        stderr_of(&output).contains("cluster.shape"),
        "{}",
        stderr_of(&output)
    );
}

#[test]
fn missing_config_file_fails_with_exit_code_4() {
    let output = beamcast(&["validate", "--config", "/nonexistent/sim.cfg"]);
    assert_eq!(output.status.code(), Some(4), "{}", stderr_of(&output));
}

#[test]
fn run_writes_parseable_outputs_and_echoes_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let out_str = out.to_str().unwrap();

    let mut args = vec!["run", "--out", out_str, "--jobs", "1"];
    args.extend_from_slice(TINY);
    args.extend_from_slice(&["--set", "power.psat=45"]);
    let output = beamcast(&args);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    assert!(
        stdout_of(&output).contains("avg rate"),
        "{}",
        stdout_of(&output)
    );

    let document: RunDocument =
        from_json(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(
        document.config.power.psat_w, 45.0,
        "--set echoed in run.json"
    );
    assert_eq!(document.report.iterations, 2);
    assert_eq!(document.report.point.psat, 45.0);
    assert!(
        document.report.detail.is_none(),
        "detail only with --detail"
    );

    let csv = std::fs::read_to_string(out.join("run.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "algorithm,metric,precoder,K,rho,psat,avg_rate,outage_frac"
    );
    assert!(lines
        .next()
        .unwrap()
        .starts_with("maxdist,channel,pac,2,0.00125,45,"));
    assert_eq!(lines.next(), None, "exactly one data row");

    let point_path = out.join("point_maxdist_channel_pac_k2_rho0.00125_psat45.json");
    assert!(
        point_path.exists(),
        "per-point file name encodes the grid point"
    );
}

#[test]
fn run_with_detail_keeps_per_cluster_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");

    let mut args = vec!["run", "--out", out.to_str().unwrap(), "--detail"];
    args.extend_from_slice(TINY);
    let output = beamcast(&args);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let document: RunDocument =
        from_json(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    let detail = document.report.detail.expect("detail records present");
    // One beam, two users in one cluster of two, two iterations.
    assert_eq!(detail.len(), 2);
    assert_eq!(detail[0].iteration, 0);
    assert_eq!(detail[1].iteration, 1);
    assert_eq!(detail[0].link.member_sinr_db.len(), 2);
}

fn run_tiny_sweep(out: &Path, resume: bool) -> Output {
    let mut args = vec!["sweep", "--out", out.to_str().unwrap(), "--jobs", "1"];
    args.extend_from_slice(TINY);
    args.extend_from_slice(&[
        "--set",
        "sweep.algorithm=random,maxdist",
        "--set",
        "sweep.k=1,2",
    ]);
    if resume {
        args.push("--resume");
    }
    beamcast(&args)
}

#[test]
fn sweep_writes_one_file_per_point_plus_combined_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");

    let output = run_tiny_sweep(&out, false);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let stems = [
        "point_random_channel_pac_k1_rho0.00125_psat90",
        "point_random_channel_pac_k2_rho0.00125_psat90",
        "point_maxdist_channel_pac_k1_rho0.00125_psat90",
        "point_maxdist_channel_pac_k2_rho0.00125_psat90",
    ];
    for stem in stems {
        assert!(out.join(format!("{stem}.json")).exists(), "{stem}");
    }

    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 1 + 4, "header plus one row per grid point");
    assert!(rows[1].starts_with("random,channel,pac,1,"), "{}", rows[1]);
    assert!(rows[4].starts_with("maxdist,channel,pac,2,"), "{}", rows[4]);

    let document: SweepDocument =
        from_json(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(document.reports.len(), 4);
    assert_eq!(document.config.sweep.k, Some(vec![1, 2]));
}

#[test]
fn sweep_resume_reuses_and_restores_point_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");

    let output = run_tiny_sweep(&out, false);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    let first_csv = std::fs::read(out.join("sweep.csv")).unwrap();

    // Drop one checkpoint; resume must recompute exactly that point and
    // reproduce the combined summary byte for byte.
    let dropped = out.join("point_maxdist_channel_pac_k1_rho0.00125_psat90.json");
    let original_point = std::fs::read(&dropped).unwrap();
    std::fs::remove_file(&dropped).unwrap();

    let output = run_tiny_sweep(&out, true);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert_eq!(
        stdout.matches("reusing existing result").count(),
        3,
        "three of four points reused: {stdout}"
    );
    assert_eq!(std::fs::read(&dropped).unwrap(), original_point);
    assert_eq!(std::fs::read(out.join("sweep.csv")).unwrap(), first_csv);
}

#[test]
fn emit_plots_builds_tables_and_warns_without_metric_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");

    let output = run_tiny_sweep(&out, false);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let output = beamcast(&["emit-plots", "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    for name in [
        "rate_vs_k.csv",
        "cdf_serving_sinr.csv",
        "cdf_sinr_loss_spread.csv",
        "cluster_size_hist.csv",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    // Only the channel metric was swept, so there is nothing to pair.
    assert!(!out.join("rate_gain.csv").exists());
    assert!(
        stderr_of(&output).contains("rate_gain.csv not written"),
        "{}",
        stderr_of(&output)
    );

    let rate_vs_k = std::fs::read_to_string(out.join("rate_vs_k.csv")).unwrap();
    assert_eq!(rate_vs_k.lines().count(), 1 + 4);

    // Each point's empirical CDF climbs monotonically and ends at 1.
    let cdf = std::fs::read_to_string(out.join("cdf_serving_sinr.csv")).unwrap();
    let mut last: Option<(String, f64)> = None;
    let mut rows = 0;
    for line in cdf.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let prefix = fields[..6].join(",");
        let p: f64 = fields[7].parse().unwrap();
        if let Some((ref last_prefix, last_p)) = last {
            if *last_prefix == prefix {
                assert!(p >= last_p, "{line}");
            } else {
                assert_eq!(last_p, 1.0, "CDF for {last_prefix} must end at 1");
            }
        }
        last = Some((prefix, p));
        rows += 1;
    }
    assert!(rows > 0);
    assert_eq!(last.unwrap().1, 1.0);
}

#[test]
fn emit_plots_pairs_metrics_when_both_are_swept() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");

    let mut args = vec!["sweep", "--out", out.to_str().unwrap()];
    args.extend_from_slice(TINY);
    args.extend_from_slice(&["--set", "sweep.metric=channel,euclidean"]);
    let output = beamcast(&args);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let output = beamcast(&["emit-plots", "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    let gain = std::fs::read_to_string(out.join("rate_gain.csv")).unwrap();
    let rows: Vec<&str> = gain.lines().collect();
    assert_eq!(rows.len(), 2, "header plus the single pairing");
    assert!(
        rows[1].starts_with("maxdist,pac,2,0.00125,90,"),
        "{}",
        rows[1]
    );
}

#[test]
fn emit_plots_fails_with_exit_code_4_when_no_results_exist() {
    let dir = tempfile::tempdir().unwrap();
    let output = beamcast(&["emit-plots", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(4), "{}", stderr_of(&output));
    assert!(
        stderr_of(&output).contains("point_"),
        "{}",
        stderr_of(&output)
    );
}

#[test]
fn seed_flag_changes_the_outcome_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");

    for (out, seed) in [(&out_a, "1"), (&out_b, "1"), (&out_c, "2")] {
        let mut args = vec!["run", "--out", out.to_str().unwrap(), "--seed", seed];
        args.extend_from_slice(TINY);
        let output = beamcast(&args);
        assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    }

    let a = std::fs::read(out_a.join("run.json")).unwrap();
    let b = std::fs::read(out_b.join("run.json")).unwrap();
    let c = std::fs::read(out_c.join("run.json")).unwrap();
    assert_eq!(a, b, "same seed, same bytes");
    assert_ne!(a, c, "different seed, different deployment");
}
