//! End-to-end command-line tests driving the built binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn quadlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn tmp(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("quadlab_cli_{}_{name}", std::process::id()));
    path
}

fn json_field(text: &str, key: &str) -> String {
    let needle = format!("\"{key}\":");
    let start = text.find(&needle).unwrap_or_else(|| panic!("{key} in {text}")) + needle.len();
    let rest = &text[start..];
    let end = rest
        .find([',', '}'])
        .unwrap_or_else(|| panic!("terminator after {key}"));
    rest[..end].trim_matches('"').to_string()
}

#[test]
fn help_exists_for_every_subcommand() {
    for sub in ["simulate", "linearize", "sysid", "validate", "chirp-gen", "geo"] {
        let out = quadlab(&[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help failed");
        assert!(stdout(&out).contains("Usage"));
    }
}

#[test]
fn invalid_axis_lists_valid_values() {
    let out = quadlab(&["sysid", "--axis", "sideways"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("roll") && err.contains("pitch") && err.contains("yaw"), "{err}");
}

#[test]
fn geo_spot_values() {
    let out = quadlab(&[
        "geo", "distance", "--lat1", "0", "--lon1", "0", "--lat2", "0", "--lon2", "1",
    ]);
    assert!(out.status.success());
    let d: f64 = stdout(&out).trim().parse().unwrap();
    assert!((d - 111_226.0).abs() < 1.0);

    let out = quadlab(&[
        "geo", "course", "--lat1", "0", "--lon1", "0", "--lat2", "1", "--lon2", "0", "--json",
    ]);
    let c: f64 = json_field(&stdout(&out), "course_deg").parse().unwrap();
    assert!(c.abs() < 1e-6);

    let out = quadlab(&[
        "geo",
        "heading-error",
        "--course",
        "10",
        "--heading",
        "350",
    ]);
    let e: f64 = stdout(&out).trim().parse().unwrap();
    assert_eq!(e, 20.0);
}

#[test]
fn impulse_roll_settles_within_a_second() {
    let out = quadlab(&[
        "simulate",
        "--scenario",
        "impulse-roll",
        "--plant",
        "linear",
        "--json",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(json_field(&text, "outcome"), "completed");
    let settling: f64 = json_field(&text, "roll_settling_s").parse().unwrap();
    assert!(settling < 1.0, "roll settled in {settling} s");
}

#[test]
fn open_loop_perturbation_diverges() {
    let out = quadlab(&["simulate", "--open-loop", "--perturb", "--duration", "10", "--json"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(json_field(&text, "outcome"), "AttitudeDiverged");
}

#[test]
fn slow_loop_rate_flags_degradation() {
    let out = quadlab(&["simulate", "--loop-rate-sweep", "100,20", "--json"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(json_field(&text, "rate_100_hz").contains("stable=true"));
    let at20 = json_field(&text, "rate_20_hz");
    assert!(
        at20.contains("diverged=true") || at20.contains("stable=false"),
        "20 Hz entry: {at20}"
    );
}

#[test]
fn chirp_gen_writes_padded_csv() {
    let path = tmp("chirp.csv");
    let out = quadlab(&["chirp-gen", "--out", path.to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let k_end: f64 = json_field(&text, "schedule_end_fraction").parse().unwrap();
    assert!((k_end - 1.00228540).abs() < 1e-6);

    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,value");
    for line in lines {
        let (t, v) = line.split_once(',').unwrap();
        let t: f64 = t.parse().unwrap();
        let v: f64 = v.parse().unwrap();
        if t < 3.0 - 1e-9 {
            assert_eq!(v, 0.0, "pad not silent at t = {t}");
        } else {
            break;
        }
    }
    std::fs::remove_file(&path).ok();
}

#[test]
fn linearize_reports_gravity_rank_and_errata() {
    let model_path = tmp("model.txt");
    let out = quadlab(&[
        "linearize",
        "--out-model",
        model_path.to_str().unwrap(),
        "--json",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let g1: f64 = json_field(&text, "gravity_coupling_u_theta").parse().unwrap();
    assert!((g1 - 9.81).abs() < 1e-5);
    let rank: usize = json_field(&text, "controllability_rank").parse().unwrap();
    assert_eq!(rank, 12);
    assert!(text.contains("erratum_0"));

    let file = std::fs::read_to_string(&model_path).unwrap();
    assert!(file.starts_with("quadlab-v1 linear-model"));
    std::fs::remove_file(&model_path).ok();
}

#[test]
fn full_pipeline_identify_then_validate() {
    let model_path = tmp("roll_model.txt");
    let log_path = tmp("doublet.csv");
    let sweep_path = tmp("sweep.csv");

    let out = quadlab(&[
        "sysid",
        "--axis",
        "roll",
        "--out-model",
        model_path.to_str().unwrap(),
        "--out-log",
        sweep_path.to_str().unwrap(),
        "--seed",
        "5",
        "--json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text_sysid = stdout(&out);
    let cost: f64 = json_field(&text_sysid, "fit_cost").parse().unwrap();
    assert!(cost < 2.0);

    let out = quadlab(&[
        "simulate",
        "--scenario",
        "doublet-roll",
        "--magnitude",
        "10",
        "--duration",
        "12",
        "--feedback",
        "sensors",
        "--out",
        log_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let out = quadlab(&[
        "validate",
        "--model",
        model_path.to_str().unwrap(),
        "--log",
        log_path.to_str().unwrap(),
        "--axis",
        "roll",
        "--json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lag: f64 = json_field(&text, "lag_s").parse().unwrap();
    assert!(lag.abs() <= 0.05, "doublet lag {lag} s");

    // Re-identify from the recorded sweep log: same model comes back.
    let out = quadlab(&[
        "sysid",
        "--axis",
        "roll",
        "--log",
        sweep_path.to_str().unwrap(),
        "--json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let refit = stdout(&out);
    let wn_live: f64 = json_field(&text_sysid, "natural_frequency_rad_s").parse().unwrap();
    let wn_refit: f64 = json_field(&refit, "natural_frequency_rad_s").parse().unwrap();
    // The log prints six significant digits, so the refit agrees to the
    // quantization level rather than bit-exactly.
    assert!(
        (wn_live - wn_refit).abs() < 1e-3 * wn_live.abs().max(1.0),
        "live {wn_live} vs log-refit {wn_refit}"
    );

    std::fs::remove_file(&model_path).ok();
    std::fs::remove_file(&log_path).ok();
    std::fs::remove_file(&sweep_path).ok();
}

#[test]
fn seeded_runs_are_deterministic() {
    let run = || {
        let out = quadlab(&[
            "simulate",
            "--scenario",
            "impulse-roll",
            "--feedback",
            "sensors",
            "--noise",
            "--seed",
            "42",
            "--json",
        ]);
        assert!(out.status.success());
        stdout(&out)
    };
    assert_eq!(run(), run());
}

#[test]
fn config_file_round_trips_through_the_cli() {
    let cfg_path = tmp("config.txt");
    std::fs::write(
        &cfg_path,
        "# test configuration\nvehicle.mass = 2.0\nloop.rate_hz = 200\n",
    )
    .unwrap();
    let out = quadlab(&[
        "simulate",
        "--config",
        cfg_path.to_str().unwrap(),
        "--scenario",
        "impulse-roll",
        "--plant",
        "linear",
        "--json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rate: f64 = json_field(&stdout(&out), "loop_rate_hz").parse().unwrap();
    assert_eq!(rate, 200.0);

    // Unknown keys are rejected with a nonzero exit.
    std::fs::write(&cfg_path, "vehicle.masss = 2.0\n").unwrap();
    let out = quadlab(&[
        "simulate",
        "--config",
        cfg_path.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("vehicle.masss"));
    std::fs::remove_file(&cfg_path).ok();
}
