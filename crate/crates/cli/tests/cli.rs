//! End-to-end tests of the `ctsort` binary via its public interface.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ctsort"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ctsort-test-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is not valid JSON")
}

const COST: [&str; 8] = [
    "--zeta-p", "0.5", "--rho-p", "1", "--zeta-k", "0.5", "--rho-k", "1",
];

/// Binomial mixture economy at scale 108: workers are a 3:1 mixture of
/// B(4, 1/3) and a point mass at skill 4; jobs are the reflection.
fn mixture_csvs() -> (PathBuf, PathBuf) {
    let w = tmp("mixture_workers.csv");
    let j = tmp("mixture_jobs.csv");
    fs::write(&w, "skill,mass\n0,16\n1,32\n2,24\n3,8\n4,28\n").unwrap();
    fs::write(&j, "skill,mass\n0,28\n1,8\n2,24\n3,32\n4,16\n").unwrap();
    (w, j)
}

#[test]
fn solve_reproduces_mixture_assignment() {
    let (w, j) = mixture_csvs();
    let out = bin()
        .args(["solve", "--workers"])
        .arg(&w)
        .arg("--jobs")
        .arg(&j)
        .args(COST)
        .output()
        .unwrap();
    let json = stdout_json(&out);
    assert_eq!(json["scale"], 1);
    let mut pairs: Vec<(f64, f64, u64)> = json["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            (
                p["x"].as_f64().unwrap(),
                p["z"].as_f64().unwrap(),
                p["mass"].as_u64().unwrap(),
            )
        })
        .collect();
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let expected = vec![
        (0.0, 0.0, 16),
        (1.0, 0.0, 12),
        (1.0, 1.0, 8),
        (1.0, 3.0, 12),
        (2.0, 2.0, 24),
        (3.0, 3.0, 8),
        (4.0, 3.0, 12),
        (4.0, 4.0, 16),
    ];
    assert_eq!(pairs, expected);
    let total = json["total_cost"].as_f64().unwrap();
    // 36 mismatched units: 12 at distance 1 each way plus 12 at sqrt(2).
    let want = 12.0 + 12.0 + 12.0 * 2.0f64.sqrt();
    assert!((total - want).abs() <= 1e-12, "{total} vs {want}");
}

#[test]
fn solve_then_dual_round_trip_closes_the_gap() {
    let (w, j) = mixture_csvs();
    let a = tmp("mixture_assignment.json");
    let out = bin()
        .args(["solve", "--workers"])
        .arg(&w)
        .arg("--jobs")
        .arg(&j)
        .args(COST)
        .arg("--out")
        .arg(&a)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args(["dual", "--assignment"])
        .arg(&a)
        .args(COST)
        .output()
        .unwrap();
    let json = stdout_json(&out);
    assert!(json["gap"].as_f64().unwrap().abs() <= 1e-9);
    // One potential value per distinct skill on either side.
    assert_eq!(json["phi"].as_object().unwrap().len(), 5);
    // Wage/value split: w + v >= y = -c with equality on matched pairs.
    assert_eq!(json["w"].as_object().unwrap().len(), 5);
    assert_eq!(json["v"].as_object().unwrap().len(), 5);
    let w1 = json["w"]["1"].as_f64().unwrap();
    let v0 = json["v"]["0"].as_f64().unwrap();
    assert!((w1 + v0 + 1.0).abs() <= 1e-9, "pair (1,0) not tight");
}

#[test]
fn layers_reports_alternating_bands() {
    let (w, j) = mixture_csvs();
    let out = bin()
        .args(["layers", "--workers"])
        .arg(&w)
        .arg("--jobs")
        .arg(&j)
        .output()
        .unwrap();
    let json = stdout_json(&out);
    let layers = json.as_array().unwrap();
    assert!(!layers.is_empty());
    let mut worker_units = 0u64;
    for layer in layers {
        let mass = layer["mass"].as_u64().unwrap();
        let points = layer["points"].as_array().unwrap();
        assert!(points.len() >= 2 && points.len() % 2 == 0);
        for pair in points.windows(2) {
            assert_ne!(pair[0]["side"], pair[1]["side"], "layer must alternate");
        }
        let band = layer["band"].as_array().unwrap();
        assert!(band[0].as_i64().unwrap() < band[1].as_i64().unwrap());
        worker_units += mass * points.iter().filter(|p| p["side"] == "worker").count() as u64;
    }
    // 36 residual worker units after removing the common component.
    assert_eq!(worker_units, 36);
}

#[test]
fn example_dual_worked_prints_expected_potentials() {
    let out = bin().args(["example", "--name", "dual-worked"]).output().unwrap();
    let json = stdout_json(&out);
    let phi = |s: &str| json["phi"][s].as_f64().unwrap();
    let r3 = 3.0f64.sqrt();
    assert!((phi("3") - (5.0 - 2.0 * r3)).abs() <= 1e-12);
    assert!((phi("4") - (4.0 - 2.0 * r3)).abs() <= 1e-12);
    assert!((phi("7") - 1.0).abs() <= 1e-12);
    assert!((phi("8") - 0.0).abs() <= 1e-12);
    assert!((phi("1") - (4.0 - r3)).abs() <= 1e-12);
    assert!((phi("10") - (1.0 - r3)).abs() <= 1e-12);
}

#[test]
fn verify_runs_a_small_batch() {
    let out = bin()
        .args(["verify", "--trials", "25", "--seed", "3", "--max-atoms", "6"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("all passed"), "{text}");
}

#[test]
fn quant_mixture_preset_reports_dispersion() {
    let out = bin().args(["quant", "--preset", "mixture"]).output().unwrap();
    let json = stdout_json(&out);
    let per_job = json["per_job"].as_array().unwrap();
    assert_eq!(per_job.len(), 5);
    let total: f64 = per_job
        .iter()
        .map(|job| job["employment_share"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() <= 1e-12);
    // Jobs at skills 0 and 3 hire mixed worker pools, so only they disperse.
    for job in per_job {
        let z = job["z"].as_f64().unwrap();
        let var = job["var_log_wage"].as_f64().unwrap();
        if z == 0.0 || z == 3.0 {
            assert!(var > 0.0, "job {z} should have dispersed wages");
        } else {
            assert_eq!(var, 0.0, "job {z} should pay a single wage");
        }
    }
}

#[test]
fn missing_required_flag_exits_with_code_one() {
    let (w, _) = mixture_csvs();
    let out = bin()
        .args(["solve", "--workers"])
        .arg(&w)
        .args(COST)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--jobs"), "stderr should name the missing flag: {err}");
}

#[test]
fn conflicting_cost_groups_exit_with_code_one() {
    let (w, j) = mixture_csvs();
    let out = bin()
        .args(["solve", "--workers"])
        .arg(&w)
        .arg("--jobs")
        .arg(&j)
        .args(COST)
        .args(["--B-p", "1", "--eta-p", "1", "--B-k", "1", "--eta-k", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
