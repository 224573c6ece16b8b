//! End-to-end runs of the `rankn` binary on generated and hand-written inputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rankn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankn")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn gen_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    let out = rankn(&full);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.join(name);
    fs::write(&path, &out.stdout).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn werner_pipeline_gives_zero_delta_and_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_to(dir.path(), "werner.json", &["--family", "werner"]);
    let out = rankn(&["analyze", "--input", &input]);
    let v = json_of(&out);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["invariants"]["cayley_delta"], "0");
    assert_eq!(v["verdict"], "boundary");
}

#[test]
fn kn_pipeline_is_boundary_with_full_multilinear_rank() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_to(dir.path(), "k3.json", &["--family", "kn", "--n", "3"]);
    let out = rankn(&["analyze", "--input", &input]);
    let v = json_of(&out);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(v["verdict"], "boundary");
    assert_eq!(v["multilinear_rank"], serde_json::json!([3, 3, 3]));
    assert_eq!(v["invariants"]["tangle"], "0");
}

#[test]
fn diagonal_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_to(dir.path(), "d3.json", &["--family", "diag", "--n", "3"]);
    let out = rankn(&["invariants", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["tangle"], "6");
    for axis in v["axes"].as_array().unwrap() {
        assert_eq!(axis["f"]["text"], "2*x1*x2*x3");
        assert_eq!(axis["h"]["text"], "1*x1*x2*x3");
    }
}

#[test]
fn perturbed_kn_is_in_orbit_and_decomposes_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_to(dir.path(), "k3e.json", &["--family", "kn-eps", "--n", "3", "--eps", "1/2"]);
    let out = rankn(&["analyze", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["verdict"], "in_orbit");
    let out = rankn(&["decompose", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["backend"], "exact");
    assert_eq!(v["residual"], 0.0);
}

#[test]
fn identical_requests_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_to(dir.path(), "l.json", &["--family", "l-eps", "--eps", "1/3"]);
    for cmd in ["analyze", "decompose"] {
        for backend in ["exact", "float"] {
            let args = [cmd, "--input", &input, "--backend", backend, "--seed", "7"];
            let a = rankn(&args);
            let b = rankn(&args);
            assert_eq!(a.stdout, b.stdout, "{cmd} {backend}");
            assert_eq!(a.status.code(), b.status.code());
        }
    }
}

#[test]
fn float_override_on_exact_input_warns() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_to(dir.path(), "d2.json", &["--family", "diag", "--n", "2"]);
    let v = json_of(&rankn(&["analyze", "--input", &input, "--backend", "float"]));
    assert_eq!(v["backend"], "float");
    assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    let out = rankn(&["analyze", "--input", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
    assert_eq!(json_of(&out)["error"]["kind"], "parse");

    let ragged = dir.path().join("ragged.json");
    fs::write(&ragged, r#"{"n": 3, "entries": [[["1","0"],["0","0"]],[["0","0"],["0","1"]]]}"#).unwrap();
    assert_eq!(rankn(&["analyze", "--input", ragged.to_str().unwrap()]).status.code(), Some(65));

    let float = dir.path().join("float.json");
    fs::write(&float, r#"{"n": 1, "field": "real", "entries": [[[2.5]]]}"#).unwrap();
    assert_eq!(rankn(&["analyze", "--input", float.to_str().unwrap(), "--backend", "exact"]).status.code(), Some(65));

    assert_eq!(rankn(&["gen", "--family", "werner", "--n", "3"]).status.code(), Some(65));
    assert_eq!(rankn(&["frobnicate"]).status.code(), Some(64));
}

#[test]
fn random_tensor_is_outside_relaxation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    fs::write(
        &path,
        r#"{"n": 2, "entries": [[["1","2"],["3","4"]],[["5","-6"],["7","1/2"]]]}"#,
    )
    .unwrap();
    let out = rankn(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(json_of(&out)["verdict"], "in_orbit", "generic 2x2x2 tensors are in the dense orbit");
    let d3 = dir.path().join("r3.json");
    fs::write(
        &d3,
        r#"{"n": 3, "entries": [[["1","2","0"],["0","1","3"],["2","0","1"]],[["0","1","1"],["1","0","2"],["3","1","0"]],[["2","0","1"],["1","1","0"],["0","2","5"]]]}"#,
    )
    .unwrap();
    let out = rankn(&["analyze", "--input", d3.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json_of(&out)["verdict"], "outside_relaxation");
}

#[test]
fn classify_real_reports_signature() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen_to(dir.path(), "j.json", &["--family", "jk", "--n", "4", "--k", "2"]);
    let out = rankn(&["classify-real", "--input", &input]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["signature"]["signature"], serde_json::json!([0, 2]));
    assert_eq!(v["signature"]["r_sign"], "+");
}

#[test]
fn check_model_on_counts_and_violations() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.json");
    fs::write(&counts, r#"{"counts": [[[40, 35], [33, 31]], [[32, 30], [34, 60]]]}"#).unwrap();
    let out = rankn(&["check-model", "--input", counts.to_str().unwrap()]);
    let v = json_of(&out);
    assert_eq!(v["schema_version"], 1);
    assert!(v["report"]["conditions"].as_array().unwrap().len() >= 5);

    let negative = dir.path().join("neg.json");
    fs::write(&negative, r#"{"n": 2, "entries": [[["1/2","0"],["0","0"]],[["0","0"],["0","-1/2"]]]}"#).unwrap();
    let out = rankn(&["check-model", "--input", negative.to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json_of(&out);
    assert_eq!(v["report"]["conditions"][0]["status"], "no");
}

#[test]
fn batch_processes_each_file_in_name_order() {
    let dir = tempfile::tempdir().unwrap();
    gen_to(dir.path(), "a_diag.json", &["--family", "diag", "--n", "3"]);
    gen_to(dir.path(), "b_kn.json", &["--family", "kn", "--n", "3"]);
    fs::write(dir.path().join("c_bad.json"), "[").unwrap();
    fs::write(dir.path().join("ignored.txt"), "x").unwrap();
    let out = rankn(&["analyze", "--batch", dir.path().to_str().unwrap()]);
    let v = json_of(&out);
    let items = v["batch"].as_array().unwrap();
    let files: Vec<&str> = items.iter().map(|i| i["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["a_diag.json", "b_kn.json", "c_bad.json"]);
    let codes: Vec<i64> = items.iter().map(|i| i["exit_code"].as_i64().unwrap()).collect();
    assert_eq!(codes, [0, 2, 64]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn stdin_input() {
    let gen = rankn(&["gen", "--family", "diag", "--n", "2"]);
    let mut child = Command::new(env!("CARGO_BIN_EXE_rankn"))
        .args(["analyze"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(&gen.stdout).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["verdict"], "in_orbit");
}
