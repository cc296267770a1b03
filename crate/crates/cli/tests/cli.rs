use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const A_REF: &str = "1,0,1\n0,1,1\n";
const IDENTITY: &str = "1,0\n0,1\n";

fn run(dir: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasekey"))
        .current_dir(dir)
        .args(args.split_whitespace())
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn workspace(files: &[(&str, &str)]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in files {
        fs::write(dir.path().join(name), body).unwrap();
    }
    dir
}

fn read(dir: &TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join(name)).unwrap()
}

#[test]
fn keygen_is_reproducible_and_feeds_check() {
    let dir = workspace(&[]);
    for name in ["a.txt", "b.txt"] {
        let out = run(
            dir.path(),
            &format!("keygen --rows 2 --cols 3 --seed 7 --out {name}"),
        );
        assert_eq!(code(&out), 0);
    }
    assert_eq!(read(&dir, "a.txt"), read(&dir, "b.txt"));
    assert_eq!(read(&dir, "a.txt").lines().count(), 2);

    let report = json(&run(dir.path(), "check a.txt"));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["inputs"]["d"], 2);
    assert_eq!(report["inputs"]["D"], 3);
}

#[test]
fn keygen_rejects_zero_rows() {
    let dir = workspace(&[]);
    let out = run(dir.path(), "keygen --rows 0 --cols 3 --seed 1 --out k.txt");
    assert_eq!(code(&out), 2);
}

#[test]
fn keygen_unwritable_path_is_an_io_error() {
    let dir = workspace(&[]);
    let out = run(
        dir.path(),
        "keygen --rows 2 --cols 3 --seed 1 --out missing/dir/k.txt",
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot write"));
}

#[test]
fn check_reference_key_is_all_true() {
    let dir = workspace(&[("a.txt", A_REF)]);
    let out = run(dir.path(), "check a.txt");
    assert_eq!(code(&out), 0);
    let report = json(&out);
    let certs = report["certificates"].as_array().unwrap();
    let names: Vec<&str> = certs
        .iter()
        .map(|c| c["certificate"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "full-spark",
            "complement",
            "phase-retrievable",
            "universal-key"
        ]
    );
    assert!(certs.iter().all(|c| c["verdict"] == true));
}

#[test]
fn check_identity_key_reports_partition_witness() {
    let dir = workspace(&[("id.txt", IDENTITY)]);
    let out = run(dir.path(), "check id.txt --certificate universal-key");
    assert_eq!(code(&out), 1);
    let cert = &json(&out)["certificates"][0];
    assert_eq!(cert["verdict"], false);
    assert_eq!(cert["witness_kind"], "partition");
    assert_eq!(cert["witness"], serde_json::json!([1]));
}

#[test]
fn check_short_frame_is_not_universal() {
    let dir = workspace(&[]);
    run(dir.path(), "keygen --rows 3 --cols 4 --seed 5 --out k.txt");
    let out = run(dir.path(), "check k.txt --certificate universal-key");
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["certificates"][0]["verdict"], false);
}

#[test]
fn check_writes_report_file() {
    let dir = workspace(&[("a.txt", A_REF)]);
    let out = run(dir.path(), "check a.txt --report r.json");
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&read(&dir, "r.json")).unwrap();
    assert_eq!(report["command"], "check");
    assert!(report.get("elapsed_ms").is_none());
}

#[test]
fn timing_flag_adds_elapsed() {
    let dir = workspace(&[("a.txt", A_REF)]);
    let report = json(&run(dir.path(), "--timing check a.txt"));
    assert!(report["elapsed_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn check_over_the_cap_exits_3() {
    let row: Vec<String> = (0..25).map(|k| (k + 1).to_string()).collect();
    let key = format!("{}\n", row.join(","));
    let dir = workspace(&[("big.txt", &key)]);
    let out = run(dir.path(), "check big.txt --certificate complement");
    assert_eq!(code(&out), 3);
}

#[test]
fn malformed_key_exits_2() {
    let dir = workspace(&[("bad.txt", "1,2\n3\n")]);
    assert_eq!(code(&run(dir.path(), "check bad.txt")), 2);
    assert_eq!(code(&run(dir.path(), "check nope.txt")), 2);
}

#[test]
fn bounds_on_reference_key() {
    let dir = workspace(&[("a.txt", A_REF)]);
    let out = run(dir.path(), "bounds a.txt");
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert!((r["A0"].as_f64().unwrap() - 0.61803398874989).abs() < 1e-13);
    assert!((r["B0"].as_f64().unwrap() - 1.73205080756888).abs() < 1e-13);
    assert_eq!(r["I0"], serde_json::json!([1]));
    assert_eq!(r["achievement"], "pass");
    assert_eq!(r["degenerate"], false);
    assert_eq!(r["witnesses"]["X_min"].as_array().unwrap().len(), 2);
}

#[test]
fn bounds_on_identity_key_is_degenerate() {
    let dir = workspace(&[("id.txt", IDENTITY)]);
    let out = run(dir.path(), "bounds id.txt");
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["A0"].as_f64().unwrap(), 0.0);
    assert_eq!(r["degenerate"], true);
    assert_eq!(r["achievement"], "pass (upper only)");
}

#[test]
fn encode_alpha_on_reference_key() {
    let dir = workspace(&[("a.txt", A_REF), ("x.txt", "1,2\n")]);
    let out = run(
        dir.path(),
        "encode --encoder alpha --key a.txt --input x.txt --out y.txt",
    );
    assert_eq!(code(&out), 0);
    assert_eq!(read(&dir, "y.txt").trim_end(), "1,2,3");
}

#[test]
fn encode_beta_sorts_columns_and_writes_perms() {
    let dir = workspace(&[("id.txt", IDENTITY), ("x.txt", "1,2\n3,4\n")]);
    let out = run(
        dir.path(),
        "encode --encoder beta --key id.txt --input x.txt --out y.txt --perms p.txt",
    );
    assert_eq!(code(&out), 0);
    assert_eq!(read(&dir, "y.txt").trim_end(), "3,4\n1,2");
    assert_eq!(read(&dir, "p.txt"), "2,1\n2,1\n");
}

#[test]
fn encode_beta_tilde_equal_rows_has_zero_tail() {
    let dir = workspace(&[("a.txt", A_REF), ("x.txt", "1,2\n1,2\n")]);
    let out = run(
        dir.path(),
        "encode --encoder beta-tilde --key a.txt --input x.txt --out y.txt",
    );
    assert_eq!(code(&out), 0);
    assert_eq!(read(&dir, "y.txt").trim_end(), "1,2,0,0,0");
}

#[test]
fn encode_shape_mismatch_exits_2() {
    let dir = workspace(&[("a.txt", A_REF), ("x.txt", "1,2,3\n")]);
    let out = run(
        dir.path(),
        "encode --encoder alpha --key a.txt --input x.txt --out y.txt",
    );
    assert_eq!(code(&out), 2);
}

fn dist_hat_v_files(dir: &TempDir, a: &str, b: &str) -> f64 {
    let out = run(dir.path(), &format!("metric --space hatV --x {a} --y {b}"));
    assert_eq!(code(&out), 0);
    json(&out)["distance"].as_f64().unwrap()
}

#[test]
fn decode_inverts_both_encoders() {
    let dir = workspace(&[("a.txt", A_REF), ("x.txt", "0.5,-1.25\n2,0.75\n")]);
    for encoder in ["beta", "beta-tilde"] {
        let enc = run(
            dir.path(),
            &format!("encode --encoder {encoder} --key a.txt --input x.txt --out y.txt"),
        );
        assert_eq!(code(&enc), 0);
        let dec = run(
            dir.path(),
            &format!("decode --encoder {encoder} --key a.txt --input y.txt --out r.txt --report rep.json"),
        );
        assert_eq!(code(&dec), 0, "{}", String::from_utf8_lossy(&dec.stderr));
        assert!(dist_hat_v_files(&dir, "x.txt", "r.txt") <= 1e-8);
        let rep: Value = serde_json::from_str(&read(&dir, "rep.json")).unwrap();
        assert!(rep["residual"].as_f64().unwrap() <= 1e-9);
    }
}

#[test]
fn decode_output_is_canonical_row_order() {
    let dir = workspace(&[
        ("a.txt", A_REF),
        ("x.txt", "1,0\n-1,0\n"),
        ("s.txt", "-1,0\n1,0\n"),
    ]);
    for input in ["x.txt", "s.txt"] {
        run(
            dir.path(),
            &format!("encode --encoder beta --key a.txt --input {input} --out y.txt"),
        );
        run(
            dir.path(),
            "decode --encoder beta --key a.txt --input y.txt --out r.txt",
        );
        let rows: Vec<Vec<f64>> = read(&dir, "r.txt")
            .lines()
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert!(rows[0][0] > rows[1][0], "{rows:?}");
    }
}

#[test]
fn decode_corrupted_embedding_is_not_in_range() {
    let dir = workspace(&[("a.txt", A_REF), ("x.txt", "1,-2\n0.5,3\n")]);
    run(
        dir.path(),
        "encode --encoder beta --key a.txt --input x.txt --out y.txt",
    );
    let mut rows: Vec<Vec<f64>> = read(&dir, "y.txt")
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    rows[0][1] += 0.5;
    let text: Vec<String> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    fs::write(dir.path().join("bad.txt"), text.join("\n")).unwrap();
    let out = run(
        dir.path(),
        "decode --encoder beta --key a.txt --input bad.txt --out r.txt",
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("residual"));
}

#[test]
fn decode_zero_embedding_gives_zero_config() {
    let dir = workspace(&[("a.txt", A_REF), ("y.txt", "0,0,0\n0,0,0\n")]);
    let out = run(
        dir.path(),
        "decode --encoder beta --key a.txt --input y.txt --out r.txt",
    );
    assert_eq!(code(&out), 0);
    let vals: Vec<f64> = read(&dir, "r.txt")
        .split([',', '\n'])
        .filter(|s| !s.is_empty())
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 4);
    assert!(vals.iter().all(|v| *v == 0.0));
}

#[test]
fn decode_refuses_uncertified_key() {
    let dir = workspace(&[("id.txt", IDENTITY), ("y.txt", "1,1\n0,0\n")]);
    let out = run(
        dir.path(),
        "decode --encoder beta --key id.txt --input y.txt --out r.txt",
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("phase-retrievable"));
}

#[test]
fn metric_examples() {
    let dir = workspace(&[
        ("p.txt", "1,0\n"),
        ("q.txt", "-1,0\n"),
        ("x.txt", "1,2\n3,4\n"),
        ("s.txt", "3,4\n1,2\n"),
        ("z.txt", "0,0\n0,0\n"),
    ]);
    let h = json(&run(dir.path(), "metric --space hatH --x p.txt --y q.txt"));
    assert_eq!(h["distance"].as_f64().unwrap(), 0.0);
    assert!(h.get("permutation").is_none());

    let v = json(&run(dir.path(), "metric --space hatV --x x.txt --y s.txt"));
    assert_eq!(v["distance"].as_f64().unwrap(), 0.0);
    assert_eq!(v["permutation"], serde_json::json!([2, 1]));

    let z = json(&run(dir.path(), "metric --space hatV --x x.txt --y z.txt"));
    assert!((z["distance"].as_f64().unwrap() - 30f64.sqrt()).abs() < 1e-15);
}

#[test]
fn metric_shape_mismatch_exits_2() {
    let dir = workspace(&[("x.txt", "1,2\n3,4\n"), ("y.txt", "1,2,3\n4,5,6\n")]);
    let out = run(dir.path(), "metric --space hatV --x x.txt --y y.txt");
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_reference_key_passes() {
    let dir = workspace(&[("a.txt", A_REF)]);
    let out = run(dir.path(), "verify a.txt --samples 1000");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["all_passed"], true);
    assert!(r["properties"]
        .as_array()
        .unwrap()
        .iter()
        .all(|p| p["status"] == "pass"));
}

#[test]
fn verify_identity_key_skips_decoders() {
    let dir = workspace(&[("id.txt", IDENTITY)]);
    let out = run(dir.path(), "verify id.txt --samples 200");
    assert_eq!(code(&out), 0);
    let props = json(&out)["properties"].as_array().unwrap().clone();
    let skipped: Vec<&Value> = props.iter().filter(|p| p["status"] == "skipped").collect();
    assert!(!skipped.is_empty());
    assert!(skipped
        .iter()
        .all(|p| p["detail"] == "skipped (not injective)"));
    assert!(props.iter().all(|p| p["status"] != "fail"));
}

#[test]
fn verify_is_byte_deterministic() {
    let dir = workspace(&[("a.txt", A_REF)]);
    let a = run(dir.path(), "verify a.txt --samples 300 --seed 11");
    let b = run(dir.path(), "verify a.txt --samples 300 --seed 11");
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_override_does_not_change_results() {
    let dir = workspace(&[]);
    run(dir.path(), "keygen --rows 3 --cols 6 --seed 2 --out k.txt");
    let one = Command::new(env!("CARGO_BIN_EXE_phasekey"))
        .current_dir(dir.path())
        .env("THREADS", "1")
        .args(["bounds", "k.txt"])
        .output()
        .unwrap();
    let many = run(dir.path(), "bounds k.txt");
    assert_eq!(one.stdout, many.stdout);
}
