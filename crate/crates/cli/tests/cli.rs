//! End-to-end checks of the binary: exit codes, file outputs, and
//! byte-for-byte determinism under a fixed seed.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn epslab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epslab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_plan(dir: &Path, eps: &str, norm: &str, blocks: &str) -> std::path::PathBuf {
    let path = dir.join(format!("plan_{norm}_{blocks}.json").replace(':', "_"));
    let out = epslab(
        &["plan", "--eps", eps, "--norm", norm, "--blocks", blocks, "--out", path.to_str().unwrap()],
        dir,
    );
    assert!(out.status.success(), "plan failed: {}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn omega_prints_solution_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = epslab(&["omega", "--eps", "0.5", "--norm", "lp:2"], dir.path());
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let omega = value["report"]["omega"].as_f64().unwrap();
    assert!((omega - 0.57735).abs() < 1e-4, "omega {omega}");
    assert_eq!(value["tool"].as_str().unwrap(), concat!("epslab-", env!("CARGO_PKG_VERSION")));
}

#[test]
fn omega_with_unreachable_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = epslab(&["omega", "--eps", "0.5", "--norm", "lp:2", "--tol", "1e-300"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // unknown norm
    let out = epslab(&["omega", "--eps", "0.5", "--norm", "foo"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // eps outside (0, 1)
    let out = epslab(&["omega", "--eps", "1.5", "--norm", "lp:2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // clap usage errors are 2 as well
    let out = epslab(&["omega"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // missing plan file
    let out = epslab(
        &["verify-lower", "--plan", "nope.json", "--vector", "nope.json", "--delta", "0.1", "--horizon", "4"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plan_files_reload_and_hash_stably() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = write_plan(dir.path(), "0.5", "lp:1", "2");
    let text = fs::read_to_string(&p1).unwrap();
    assert!(text.contains("\"specX\":{\"kind\":\"lp\",\"p\":1.0}"));
    assert!(text.contains("\"lambda\":12.0"));
    assert!(text.contains("\"r\":2"));

    // identical invocations produce identical bytes
    let p2 = write_plan(dir.path(), "0.5", "lp:1", "2");
    let _ = p2;
    let again = fs::read_to_string(dir.path().join("plan_lp_1_2.json")).unwrap();
    assert_eq!(text, again);

    // a corrupted plan is rejected on load (config error)
    let broken = dir.path().join("broken.json");
    fs::write(&broken, text.replace("\"r\":2", "\"r\":1")).unwrap();
    let out = epslab(
        &["verify-witness", "--plan", broken.to_str().unwrap(), "--random", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn l1_intervals_requires_l1_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "0.5", "lp:2", "2");
    let vec_path = dir.path().join("u.json");
    fs::write(&vec_path, r#"{"coeffs":[{"i":0,"re":1.0,"im":0.0}]}"#).unwrap();
    let out = epslab(
        &[
            "l1-intervals",
            "--plan",
            plan.to_str().unwrap(),
            "--vector",
            vec_path.to_str().unwrap(),
            "--horizon",
            "4",
            "--probe",
            "8",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_lower_on_zero_vector_passes() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "0.5", "lp:2", "2");
    let vec_path = dir.path().join("zero.json");
    fs::write(&vec_path, r#"{"blocks":[]}"#).unwrap();
    let json_path = dir.path().join("lower.json");
    let out = epslab(
        &[
            "verify-lower",
            "--plan",
            plan.to_str().unwrap(),
            "--vector",
            vec_path.to_str().unwrap(),
            "--delta",
            "0.25",
            "--horizon",
            "10",
            "--out-json",
            json_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(value["report"]["min_ratio"].as_f64().unwrap(), 1.0);
    assert!(value["plan_sha256"].as_str().is_some());
}

#[test]
fn witness_suite_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "0.5", "lp:2", "3");
    let run = |tag: &str| {
        let json_path = dir.path().join(format!("wit_{tag}.json"));
        let csv_path = dir.path().join(format!("wit_{tag}.csv"));
        let out = epslab(
            &[
                "verify-witness",
                "--plan",
                plan.to_str().unwrap(),
                "--random",
                "8",
                "--seed",
                "7",
                "--out-json",
                json_path.to_str().unwrap(),
                "--out-csv",
                csv_path.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read(&json_path).unwrap(), fs::read(&csv_path).unwrap())
    };
    let (json_a, csv_a) = run("a");
    let (json_b, csv_b) = run("b");
    assert_eq!(json_a, json_b, "JSON reports differ between identical runs");
    assert_eq!(csv_a, csv_b, "CSV reports differ between identical runs");
    let csv_text = String::from_utf8(csv_a).unwrap();
    assert!(csv_text.lines().nth(1).unwrap().starts_with("check_id,"));
    assert!(csv_text.contains("witness_approx/t000"));
    assert!(csv_text.contains("witness_annihilation/t000"));
}

#[test]
fn witness_accepts_explicit_target_files() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "0.5", "lp:2", "2");
    let targets = dir.path().join("targets.json");
    fs::write(
        &targets,
        r#"{"targets":[
            {"k":1,"vector":{"blocks":[{"n":0,"coeffs":[{"i":0,"re":1.0,"im":0.0}]}]}},
            {"vector":{"blocks":[{"n":1,"coeffs":[{"i":1,"re":0.5,"im":0.0}]}]}}
        ]}"#,
    )
    .unwrap();
    let json_path = dir.path().join("wit.json");
    let out = epslab(
        &[
            "verify-witness",
            "--plan",
            plan.to_str().unwrap(),
            "--targets",
            targets.to_str().unwrap(),
            "--out-json",
            json_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    let results = value["report"]["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    // the second target's step was inferred from its support
    assert_eq!(results[1]["k"].as_u64().unwrap(), 2);
    // the head target hits the threshold exactly
    let err = results[0]["approx_error"].as_f64().unwrap();
    assert!((err - 0.5).abs() < 1e-9);
}

#[test]
fn orbit_emits_sorted_powers_with_norms() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "0.5", "lp:1", "2");
    let vec_path = dir.path().join("u.json");
    fs::write(
        &vec_path,
        r#"{"blocks":[{"n":2,"coeffs":[{"i":0,"re":1.0,"im":0.0}]}]}"#,
    )
    .unwrap();
    let out_path = dir.path().join("orbit.json");
    let out = epslab(
        &[
            "orbit",
            "--plan",
            plan.to_str().unwrap(),
            "--vector",
            vec_path.to_str().unwrap(),
            "--powers",
            "3,1,2,3",
            "--out",
            out_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let powers = value["report"]["powers"].as_array().unwrap();
    let ns: Vec<u64> = powers.iter().map(|e| e["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, vec![1, 2, 3]);
    // e_0 survives shifts unchanged until it falls off the end
    assert_eq!(powers[1]["norm"].as_f64().unwrap(), 1.0);
    assert_eq!(powers[2]["norm"].as_f64().unwrap(), 0.0);
}

#[test]
fn report_tables_render_csv() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("omega.csv");
    let out = epslab(
        &[
            "report",
            "omega-curve",
            "--norm",
            "lp:2",
            "--eps-from",
            "0.2",
            "--eps-to",
            "0.8",
            "--steps",
            "4",
            "--out",
            curve.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = fs::read_to_string(&curve).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "eps,omega,y_star,min_value,residual");
    assert_eq!(text.lines().count(), 6);

    let plan = write_plan(dir.path(), "0.5", "lp:2", "2");
    let vec_path = dir.path().join("u.json");
    fs::write(&vec_path, r#"{"coeffs":[{"i":0,"re":1.0,"im":0.0}]}"#).unwrap();
    let delta_csv = dir.path().join("delta.csv");
    let out = epslab(
        &[
            "report",
            "delta-curve",
            "--plan",
            plan.to_str().unwrap(),
            "--vector",
            vec_path.to_str().unwrap(),
            "--deltas",
            "0.1:0.4:4",
            "--horizon",
            "8",
            "--out",
            delta_csv.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&delta_csv).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "delta,k_scalar,min_ratio,pass");
    assert_eq!(text.lines().count(), 6);
}
