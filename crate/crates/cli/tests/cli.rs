//! End-to-end invocations of the `formdml` binary over temp directories.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_formdml"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).current_dir(dir).output().expect("spawn");
    assert!(
        out.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn read_grid_values(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            line.split(',')
                .skip(1)
                .map(|v| v.parse::<f64>().unwrap())
                .collect()
        })
        .collect()
}

#[test]
fn simulate_is_deterministic_and_documented() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&["simulate", "--output-dir", "sim", "--seed", "42"], dir.path());
    assert!(stdout(&out).contains("wrote 540 fixtures"));
    let fixtures = std::fs::read_to_string(dir.path().join("sim/fixtures.csv")).unwrap();
    assert_eq!(fixtures.lines().count(), 541); // header + 540 rows

    run_ok(&["simulate", "--output-dir", "sim2", "--seed", "42"], dir.path());
    let again = std::fs::read_to_string(dir.path().join("sim2/fixtures.csv")).unwrap();
    assert_eq!(fixtures, again, "same seed must reproduce the file");

    run_ok(&["simulate", "--output-dir", "sim3", "--seed", "43"], dir.path());
    let other = std::fs::read_to_string(dir.path().join("sim3/fixtures.csv")).unwrap();
    assert_ne!(fixtures, other, "different seeds must differ");
    // same schema either way
    assert_eq!(
        fixtures.lines().next().unwrap(),
        other.lines().next().unwrap()
    );
}

#[test]
fn null_flag_zeroes_the_truth_file() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--output-dir", "sim", "--null"], dir.path());
    let truth = std::fs::read_to_string(dir.path().join("sim/truth.txt")).unwrap();
    for line in truth.lines().skip(2) {
        for v in line.split(',') {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn pipeline_roundtrip_ingest_estimate_report() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--output-dir", "sim", "--seed", "5"], dir.path());
    let out = run_ok(
        &["ingest", "--input", "sim/fixtures.csv", "--output-dir", "ing"],
        dir.path(),
    );
    let text = stdout(&out);
    assert!(text.contains("parsed 540 fixtures (0 rejected)"), "{text}");
    assert!(text.contains("round filter"), "{text}");
    // 90 rounds... 18 rounds per season, drop 2 + 4 -> 12 of 18 kept
    assert!(text.contains("540 -> 360 fixtures"), "{text}");
    assert!(text.contains("wrote 720 analysis rows"), "{text}");
    let rejects = std::fs::read_to_string(dir.path().join("ing/rejects.csv")).unwrap();
    assert_eq!(rejects.lines().count(), 1, "header only");

    std::fs::write(
        dir.path().join("light.cfg"),
        "stages=12\ndepth=2\nmin-leaf=10\n",
    )
    .unwrap();
    let out = run_ok(
        &[
            "estimate",
            "--input",
            "ing/analysis.csv",
            "--output-dir",
            "run",
            "--target",
            "goals",
            "--folds",
            "3",
            "--seed",
            "9",
            "--side-adjusted",
            "--config",
            "light.cfg",
        ],
        dir.path(),
    );
    assert!(stdout(&out).contains("home effect"));
    for file in [
        "config.txt",
        "beta.csv",
        "se.csv",
        "pvalues.csv",
        "stars.csv",
        "counts.csv",
        "beta_side.csv",
        "residual_summary.txt",
        "diagnostics.txt",
        "matrix.txt",
    ] {
        assert!(
            dir.path().join("run").join(file).exists(),
            "missing artifact {file}"
        );
    }

    // side-adjusted grid = displayed grid + home effect, everywhere
    let diagnostics = std::fs::read_to_string(dir.path().join("run/diagnostics.txt")).unwrap();
    let home: f64 = diagnostics
        .lines()
        .find_map(|l| l.strip_prefix("home_effect="))
        .unwrap()
        .parse()
        .unwrap();
    let beta = read_grid_values(&dir.path().join("run/beta.csv"));
    let side = read_grid_values(&dir.path().join("run/beta_side.csv"));
    for i in 0..6 {
        for j in 0..6 {
            assert!(
                (side[i][j] - (beta[i][j] + home)).abs() < 1e-9,
                "cell ({i},{j}): {} vs {} + {home}",
                side[i][j],
                beta[i][j]
            );
        }
    }
    // displayed diagonal is zero
    for i in 0..6 {
        assert_eq!(beta[i][i], 0.0);
    }
    // matrix.txt renders the omitted-cell marker and the star legend
    let matrix = std::fs::read_to_string(dir.path().join("run/matrix.txt")).unwrap();
    assert!(matrix.contains("+ recovered omitted cell"));
    assert!(matrix.contains("side-adjusted"));

    let out = run_ok(
        &[
            "report",
            "--input",
            "ing/analysis.csv",
            "--output-dir",
            "rep",
            "--grid-dir",
            "run",
        ],
        dir.path(),
    );
    assert!(stdout(&out).contains("heatmap.svg"));
    let usage = std::fs::read_to_string(dir.path().join("rep/formation_usage.csv")).unwrap();
    for line in usage.lines().skip(1) {
        let total: f64 = line.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((total - 100.0).abs() <= 0.011, "usage row sums to {total}");
    }
    let stats = std::fs::read_to_string(dir.path().join("rep/formation_stats.csv")).unwrap();
    assert!(stats.lines().count() == 6); // header + 5 statistics
    let svg = std::fs::read_to_string(dir.path().join("rep/heatmap.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("stroke-dasharray"), "omitted cell marker");
    assert!(svg.contains("p&lt;0.001"), "legend");
}

#[test]
fn uniform_policy_gives_even_usage_per_league() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("uniform.cfg"), "confounding-strength=0\n").unwrap();
    run_ok(
        &[
            "simulate",
            "--output-dir",
            "sim",
            "--seed",
            "21",
            "--config",
            "uniform.cfg",
        ],
        dir.path(),
    );
    run_ok(
        &[
            "ingest",
            "--input",
            "sim/fixtures.csv",
            "--output-dir",
            "ing",
            "--drop-first",
            "0",
            "--drop-last",
            "0",
        ],
        dir.path(),
    );
    run_ok(
        &["report", "--input", "ing/analysis.csv", "--output-dir", "rep"],
        dir.path(),
    );
    let usage = std::fs::read_to_string(dir.path().join("rep/formation_usage.csv")).unwrap();
    for line in usage.lines().skip(1) {
        for v in line.split(',').skip(1) {
            let share: f64 = v.parse().unwrap();
            assert!(
                (share - 100.0 / 6.0).abs() < 5.5,
                "uniform policy but share {share}%"
            );
        }
    }
}

#[test]
fn playoff_stage_rows_are_filtered_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--output-dir", "sim", "--seed", "3"], dir.path());
    // tag the final round as play-offs
    let fixtures = std::fs::read_to_string(dir.path().join("sim/fixtures.csv")).unwrap();
    let tagged: Vec<String> = fixtures
        .lines()
        .map(|line| {
            if line.starts_with("fixture_id") || !line.contains("-R18-") {
                line.to_string()
            } else {
                // stage is the final (empty) column
                format!("{line}Play-offs")
            }
        })
        .collect();
    std::fs::write(dir.path().join("tagged.csv"), tagged.join("\n") + "\n").unwrap();
    let out = run_ok(
        &[
            "ingest",
            "--input",
            "tagged.csv",
            "--output-dir",
            "ing",
            "--drop-first",
            "0",
            "--drop-last",
            "0",
        ],
        dir.path(),
    );
    let text = stdout(&out);
    // 6 matches per league-season round x 2 leagues x 3 seasons = 30 tagged
    assert!(text.contains("(30 non-'Regular Season' removed)"), "{text}");
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--output-dir", "sim", "--seed", "13"], dir.path());
    run_ok(
        &["ingest", "--input", "sim/fixtures.csv", "--output-dir", "ing"],
        dir.path(),
    );
    std::fs::write(
        dir.path().join("over.cfg"),
        "target=possession\nstages=8\ndepth=1\nmin-leaf=10\nfolds=2\n",
    )
    .unwrap();
    run_ok(
        &[
            "estimate",
            "--input",
            "ing/analysis.csv",
            "--output-dir",
            "run",
            "--target",
            "goals",
            "--folds",
            "5",
            "--config",
            "over.cfg",
        ],
        dir.path(),
    );
    let echo = std::fs::read_to_string(dir.path().join("run/config.txt")).unwrap();
    assert!(echo.contains("target=possession"), "config beats the flag: {echo}");
    assert!(echo.contains("folds=2"), "{echo}");
}

#[test]
fn output_dir_env_variable_is_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--seed", "2"])
        .env("FORMDML_OUTPUT_DIR", dir.path().join("from_env"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from_env/fixtures.csv").exists());
}

#[test]
fn errors_are_single_line_machine_parsable() {
    let dir = tempfile::tempdir().unwrap();
    // missing input file
    let out = bin()
        .args(["estimate", "--input", "nope.csv", "--output-dir", "run"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error[E_IO]:"), "{stderr}");

    // unknown target
    run_ok(&["simulate", "--output-dir", "sim", "--seed", "1"], dir.path());
    run_ok(
        &["ingest", "--input", "sim/fixtures.csv", "--output-dir", "ing"],
        dir.path(),
    );
    let out = bin()
        .args([
            "estimate",
            "--input",
            "ing/analysis.csv",
            "--output-dir",
            "run",
            "--target",
            "shots",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error[E_CONFIG]:"), "{stderr}");

    // usage error from the argument parser
    let out = bin().args(["estimate", "--bogus"]).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error[E_USAGE]:"), "{stderr}");
    assert_eq!(stderr.lines().count(), 1, "{stderr}");

    // missing output dir without the environment default
    let out = bin()
        .args(["simulate", "--seed", "1"])
        .env_remove("FORMDML_OUTPUT_DIR")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error[E_CONFIG]:"), "{stderr}");
}

#[test]
fn ridge_learner_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--output-dir", "sim", "--seed", "31"], dir.path());
    run_ok(
        &["ingest", "--input", "sim/fixtures.csv", "--output-dir", "ing"],
        dir.path(),
    );
    let out = run_ok(
        &[
            "estimate",
            "--input",
            "ing/analysis.csv",
            "--output-dir",
            "run",
            "--learner",
            "ridge",
            "--folds",
            "2",
        ],
        dir.path(),
    );
    assert!(stdout(&out).contains("ridge learner"));
    assert!(dir.path().join("run/beta.csv").exists());
}
