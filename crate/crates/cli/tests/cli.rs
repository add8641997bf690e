use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn adf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adf-slam"))
        .args(args)
        .env("ADF_SLAM_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn out_arg(dir: &TempDir) -> String {
    dir.path().to_str().unwrap().to_owned()
}

fn write_imu(dir: &TempDir, name: &str, rows: impl Iterator<Item = String>) -> String {
    let path = dir.path().join(name);
    let mut text = String::from("t_ns,wx,wy,wz,ax,ay,az\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn final_states(report: &Value) -> Vec<&Value> {
    report["modes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| {
            assert_eq!(m["diverged"], false);
            &m["final_state"]
        })
        .collect()
}

#[test]
fn selftest_passes_and_reports_tolerances() {
    let out = adf(&["selftest"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = stdout.lines().filter(|l| l.contains("tol=")).collect();
    assert!(lines.len() >= 6, "{stdout}");
    assert!(lines.iter().all(|l| l.starts_with("PASS")));
}

#[test]
fn empty_config_runs_with_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, "{}").unwrap();
    let out = adf(&[
        "run-slam",
        "--config",
        cfg.to_str().unwrap(),
        "--seeds",
        "1",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("run_slam_results.csv"));
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "experiment,mode,level,seed,path_rmse,map_rmse,diverged,n_steps,n_landmarks,wall_ms"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains(",197,20,0"));
}

#[test]
fn overrides_take_effect() {
    let dir = TempDir::new().unwrap();
    let out = adf(&[
        "run-slam",
        "--set",
        "n_steps=10",
        "--set",
        "scenario.n_landmarks=12",
        "--seeds",
        "3",
        "--out",
        &out_arg(&dir),
        "--dump-trajectories",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("run_slam_results.csv"));
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    assert!(csv.lines().skip(1).all(|l| l.contains(",10,12,")));
    let traj = read(&dir.path().join("trajectory_ukf_seed2.csv"));
    assert_eq!(
        traj.lines().next().unwrap(),
        "step,gt_x,gt_y,gt_theta,est_x,est_y,est_theta,cov_trace"
    );
    assert_eq!(traj.lines().count(), 1 + 11);
}

#[test]
fn invalid_configuration_exits_with_2() {
    let dir = TempDir::new().unwrap();
    for args in [
        vec!["run-slam", "--set", "rho=1.5"],
        vec!["run-slam", "--set", "no_such_key=1"],
        vec!["sweep-swap", "--set", "meas_std=0"],
        vec!["run-slam", "--seeds", "x"],
    ] {
        let mut full = args.clone();
        let o = out_arg(&dir);
        full.extend(["--out", &o]);
        assert_eq!(code(&adf(&full)), 2, "{args:?}");
    }
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        code(&adf(&["run-slam", "--config", bad.to_str().unwrap()])),
        2
    );
}

#[test]
fn missing_config_file_exits_with_3() {
    let out = adf(&["run-slam", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn single_cell_sweep_writes_two_rows_reproducibly() {
    let dir = TempDir::new().unwrap();
    let run = |sub: &str| {
        let out = adf(&[
            "sweep-swap",
            "--seeds",
            "1",
            "--set",
            "swap_levels=[0]",
            "--out",
            &format!("{}/{sub}", out_arg(&dir)),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (
            read(&dir.path().join(sub).join("swap_results.csv")),
            read(&dir.path().join(sub).join("swap_aggregate.csv")),
        )
    };
    let (a, agg) = run("a");
    let (b, _) = run("b");
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 3);
    assert!(a.lines().nth(1).unwrap().starts_with("swap,EKF,0.0,1,"));
    assert!(a.lines().nth(2).unwrap().starts_with("swap,UKF,0.0,1,"));
    assert_eq!(agg.lines().count(), 3);
}

#[test]
fn aggregate_has_one_row_per_level_and_mode() {
    let dir = TempDir::new().unwrap();
    let out = adf(&[
        "sweep-init-noise",
        "--seeds",
        "2",
        "--set",
        "init_noise_levels=[0, 4]",
        "--set",
        "n_steps=40",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let results = read(&dir.path().join("init_noise_results.csv"));
    assert_eq!(results.lines().count(), 1 + 2 * 2 * 2);
    let agg = read(&dir.path().join("init_noise_aggregate.csv"));
    let lines: Vec<_> = agg.lines().collect();
    assert_eq!(
        lines[0],
        "experiment,mode,level,runs,failures,path_rmse_mean,path_rmse_std,map_rmse_mean,map_rmse_std"
    );
    assert_eq!(lines.len(), 1 + 2 * 2);
}

#[test]
fn imu_check_reproduces_a_quarter_turn() {
    let dir = TempDir::new().unwrap();
    let csv = write_imu(
        &dir,
        "rate.csv",
        (1..=1000).map(|i| format!("{},0,0,{:?},0,0,9.81", i * 1_000_000, FRAC_PI_2)),
    );
    let out = adf(&[
        "imu-check",
        &csv,
        "--set",
        "orientation=0",
        "--set",
        "gyro_bias=0",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&read(&dir.path().join("imu_check_report.json"))).unwrap();
    assert_eq!(report["samples"], 1000);
    for state in final_states(&report) {
        let yaw = state["yaw_deg"].as_f64().unwrap();
        assert!((yaw - 90.0).abs() < 1e-6, "{yaw}");
    }
    let samples = read(&dir.path().join("imu_check_ekf.csv"));
    assert_eq!(samples.lines().count(), 1001);
}

#[test]
fn imu_check_stays_put_without_forces() {
    let dir = TempDir::new().unwrap();
    let csv = write_imu(
        &dir,
        "zeros.csv",
        (1..=200).map(|i| format!("{},0,0,0,0,0,0", i * 5_000_000)),
    );
    let out = adf(&[
        "imu-check",
        &csv,
        "--set",
        "gravity=[0,0,0]",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&read(&dir.path().join("imu_check_report.json"))).unwrap();
    for state in final_states(&report) {
        for key in ["position", "velocity"] {
            for v in state[key].as_array().unwrap() {
                assert!(v.as_f64().unwrap().abs() < 1e-12, "{key}: {state}");
            }
        }
        let q: Vec<f64> = state["orientation_wxyz"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert!((q[0].abs() - 1.0).abs() < 1e-12 && q[1..].iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn imu_check_input_errors() {
    let dir = TempDir::new().unwrap();
    let malformed = write_imu(&dir, "bad.csv", ["1000,0,0,0,0,0".to_owned()].into_iter());
    assert_eq!(
        code(&adf(&["imu-check", &malformed, "--out", &out_arg(&dir)])),
        2
    );
    let backwards = write_imu(
        &dir,
        "back.csv",
        ["2000,0,0,0,0,0,0".to_owned(), "1000,0,0,0,0,0,0".to_owned()].into_iter(),
    );
    assert_eq!(
        code(&adf(&["imu-check", &backwards, "--out", &out_arg(&dir)])),
        2
    );
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&adf(&[
            "imu-check",
            missing.to_str().unwrap(),
            "--out",
            &out_arg(&dir)
        ])),
        3
    );
}
