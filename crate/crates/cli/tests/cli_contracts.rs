//! Exit-code and output contracts of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn etaskit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etaskit")).args(args).output().unwrap()
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("etaskit-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stderr_line(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).lines().next().unwrap_or_default().to_string()
}

fn simulate_small(dir: &Path) -> PathBuf {
    let path = dir.join("catalog.csv");
    let out = etaskit(&[
        "simulate",
        "--params",
        "0.62,0.02,0.013,1.72,1.11",
        "--t-end",
        "500",
        "--seed",
        "3",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    path
}

#[test]
fn missing_input_exits_io_without_partial_outputs() {
    let dir = workdir("io");
    let out_dir = dir.join("analysis");
    let out = etaskit(&[
        "pipeline",
        "-i",
        dir.join("nope.csv").to_str().unwrap(),
        "-O",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let line = stderr_line(&out);
    assert!(line.starts_with("error[io]:"), "got: {line}");
    assert!(!out_dir.exists(), "partial outputs left behind");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn usage_errors_exit_one() {
    let out = etaskit(&["fit", "-i", "x.csv", "--init", "1,2", "-o", "y.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error[usage]:"));

    let out = etaskit(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validation_errors_exit_four() {
    // Supercritical simulation parameters are refused.
    let out = etaskit(&[
        "simulate",
        "--params",
        "0.62,0.2,0.013,1.72,1.11",
        "--t-end",
        "100",
        "-o",
        "unused.csv",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_line(&out).starts_with("error[validation]:"));
}

#[test]
fn numeric_errors_exit_three() {
    let dir = workdir("numeric");
    // One event per day: constant daily counts, so the autocorrelation
    // estimator has zero variance.
    let path = dir.join("flat.csv");
    std::fs::write(
        &path,
        "# m0=1.5 window=0,5\ntime,magnitude\n0.5,2.0\n1.5,2.0\n2.5,2.0\n3.5,2.0\n4.5,2.0\n",
    )
    .unwrap();
    let out = etaskit(&[
        "analyze-window",
        "-i",
        path.to_str().unwrap(),
        "-O",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_line(&out).starts_with("error[numeric]:"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn catalog_round_trips_through_rescale_inputs() {
    let dir = workdir("roundtrip");
    let cat = simulate_small(&dir);
    let text = std::fs::read_to_string(&cat).unwrap();

    // Loading and rewriting a tool-written catalog must be bit-exact; the
    // identity rescale (mu = 1, kappa -> 0) keeps times linear.
    let fit_json = dir.join("params.json");
    std::fs::write(
        &fit_json,
        r#"{"params":{"mu":1.0,"kappa":1e-300,"c":0.013,"a":1.72,"p":1.11}}"#,
    )
    .unwrap();
    let rescaled = dir.join("rescaled.csv");
    let out = etaskit(&[
        "rescale",
        "-i",
        cat.to_str().unwrap(),
        "--fit",
        fit_json.to_str().unwrap(),
        "-o",
        rescaled.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rescaled_text = std::fs::read_to_string(&rescaled).unwrap();
    assert_eq!(text, rescaled_text, "identity rescale must round-trip bit-exactly");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn analyses_emit_expected_artifacts_and_trend_recomputes() {
    let dir = workdir("artifacts");
    let cat = simulate_small(&dir);

    let win_dir = dir.join("window");
    let out = etaskit(&[
        "analyze-window",
        "-i",
        cat.to_str().unwrap(),
        "-O",
        win_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["acf.csv", "acf.json", "groups.json", "trend.json", "trend.csv"] {
        assert!(win_dir.join(name).exists(), "missing {name}");
    }
    let kde_files: Vec<_> = std::fs::read_dir(&win_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("window_kde_"))
        .collect();
    assert_eq!(kde_files.len(), 4, "expected four KDE CSVs");
    // Each KDE file holds the header plus the 1000-point grid.
    let first_kde = std::fs::read_to_string(kde_files[0].path()).unwrap();
    assert_eq!(first_kde.lines().count(), 1001);

    // The standalone trend command reproduces the stored regression.
    let trend_out = dir.join("trend.json");
    let out = etaskit(&[
        "trend",
        "--groups",
        win_dir.join("groups.json").to_str().unwrap(),
        "-o",
        trend_out.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stored: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(win_dir.join("trend.json")).unwrap())
            .unwrap();
    let recomputed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&trend_out).unwrap()).unwrap();
    assert_eq!(stored, recomputed);

    // Mother analysis against known parameters.
    let mother_dir = dir.join("mother");
    let out = etaskit(&[
        "analyze-mother",
        "-i",
        cat.to_str().unwrap(),
        "--params",
        "0.62,0.02,0.013,1.72,1.11",
        "-O",
        mother_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(mother_dir.join("attributed.csv").exists());
    assert!(mother_dir.join("trend.json").exists());

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_file_drives_the_pipeline_with_flag_overrides() {
    let dir = workdir("config");
    let config = dir.join("run.conf");
    std::fs::write(
        &config,
        "sim_params = 0.62,0.02,0.013,1.72,1.11\n\
         t_end = 400\n\
         seed = 5\n\
         params = 0.62,0.02,0.013,1.72,1.11\n",
    )
    .unwrap();
    let out_a = dir.join("a");
    let run = etaskit(&[
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "-O",
        out_a.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_a.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["settings"]["simulate"]["seed"], 5);

    // A flag overrides the config value.
    let out_b = dir.join("b");
    let run = etaskit(&[
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "6",
        "-O",
        out_b.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_b.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["settings"]["simulate"]["seed"], 6);

    let _ = std::fs::remove_dir_all(&dir);
}
