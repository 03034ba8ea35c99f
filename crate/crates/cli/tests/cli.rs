use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use equikernel::graph::parse_xyz;
use equikernel::model::{save_checkpoint, Model, ModelConfig};

const WATER: &str = "3\nwater\nO 0.000 0.000 0.117\nH 0.000 0.757 -0.470\nH 0.000 -0.757 -0.470\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equikernel"))
        .args(args)
        .env_remove("EQUIKERNEL_THREADS")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn water(dir: &Path) -> String {
    let path = dir.join("water.xyz");
    fs::write(&path, WATER).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn equivariance_audit_passes_on_tiny_profile() {
    let out = run(&["check-equivariance", "--profile", "tiny", "--seed", "0", "--trials", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    for layer in ["gate_activation", "separable_s2_activation", "graph_attention", "model_forces"] {
        assert!(text.lines().any(|l| l.starts_with(layer) && l.contains("PASS")), "{layer}");
    }
}

#[test]
fn corrupted_coupling_names_the_failing_layer() {
    let out = run(&["check-equivariance", "--trials", "1", "--corrupt-cg"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("so3_convolution"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&run(&["check-equivariance", "--trials", "0"])), 2);
    assert_eq!(code(&run(&["check-oracle", "--lmax", "4"])), 2);
    assert_eq!(code(&run(&["check-oracle", "--edges", "0"])), 2);
    assert_eq!(code(&run(&["bench", "--reps", "1"])), 2);
    assert_eq!(code(&run(&["--threads", "0", "check-oracle"])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let xyz = water(dir.path());
    assert_eq!(code(&run(&["predict", &xyz])), 2);
    assert_eq!(code(&run(&["predict", &xyz, "--random-seed", "1", "--checkpoint", "x"])), 2);
    assert_eq!(code(&run(&["predict", &xyz, "--random-seed", "1", "--profile", "huge"])), 2);
    assert_eq!(code(&run(&["relax", &xyz, "--random-seed", "1", "--max-steps", "0"])), 2);
}

#[test]
fn thread_count_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_equikernel"))
        .args(["check-oracle", "--lmax", "1", "--edges", "2"])
        .env("EQUIKERNEL_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn oracle_check_reports_error() {
    let out = run(&["check-oracle", "--lmax", "3", "--seed", "1", "--edges", "20"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("PASS"));
}

#[test]
fn bench_single_degree_has_no_slope() {
    let out = run(&["bench", "--lmax", "2", "--reps", "3", "--channels", "2"]);
    assert_eq!(code(&out), 0);
    let csv = stdout(&out);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "kernel,L_max,M_max,channels,reps,median_s");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("escn,2,2,2,3,"));
    assert!(lines[2].starts_with("full_tp,2,2,2,3,"));
    assert!(stderr(&out).contains("slope gap n/a"));
}

#[test]
fn predict_is_byte_stable_and_matches_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let xyz = water(dir.path());
    let a = run(&["--threads", "1", "predict", &xyz, "--random-seed", "4"]);
    let b = run(&["--threads", "1", "predict", &xyz, "--random-seed", "4"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let json: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(json["energy"].is_f64());
    assert_eq!(json["forces"].as_array().unwrap().len(), 3);
    assert_eq!(json["units"]["forces"], "eV/Å");

    let ckpt = dir.path().join("model.ckpt");
    save_checkpoint(&Model::random(&ModelConfig::tiny(), 4).unwrap(), &ckpt).unwrap();
    let out = dir.path().join("prediction.json");
    let c = run(&["predict", &xyz, "--checkpoint", ckpt.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&c), 0, "{}", stderr(&c));
    assert_eq!(fs::read(&out).unwrap(), a.stdout);

    let mismatch = run(&["predict", &xyz, "--checkpoint", ckpt.to_str().unwrap(), "--profile", "base"]);
    assert_eq!(code(&mismatch), 2);
}

#[test]
fn bad_structure_fails_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.xyz");
    fs::write(&path, "2\n\nH 0 0 0\nX1 0 0 0\n").unwrap();
    let out = run(&["predict", path.to_str().unwrap(), "--random-seed", "0"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
    let missing = run(&["predict", "/nonexistent.xyz", "--random-seed", "0"]);
    assert_eq!(code(&missing), 1);
}

#[test]
fn relax_writes_trace_and_final_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let xyz = water(dir.path());
    let csv = dir.path().join("trace.csv");
    let last = dir.path().join("final.xyz");
    let out = run(&[
        "relax",
        &xyz,
        "--random-seed",
        "1",
        "--max-steps",
        "5",
        "--fmax",
        "0.02",
        "--step-size",
        "0.05",
        "--out",
        csv.to_str().unwrap(),
        "--final-xyz",
        last.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let trace = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = trace.lines().collect();
    assert_eq!(rows[0], "step,atom,x,y,z,energy_ev,fmax_ev_per_angstrom");
    assert_eq!(rows.len(), 1 + 5 * 3);
    let final_structure = parse_xyz(&fs::read_to_string(&last).unwrap()).unwrap();
    assert_eq!(final_structure.species, vec![8, 1, 1]);
    assert!(stderr(&out).contains("step limit reached after 5 steps"));
}
