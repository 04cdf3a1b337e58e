use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arithdyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn henon_degrees_csv() {
    let o = run(&["degrees", "--map", &data("henon.json"), "--max-n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim_end(), "n,degree\n1,2\n2,4\n3,8\n4,16");
}

#[test]
fn cremona_degrees() {
    let o = run(&["degrees", "--map", &data("cremona.json"), "--max-n", "2"]);
    assert_eq!(stdout(&o).trim_end(), "n,degree\n1,2\n2,1");
}

#[test]
fn missing_map_is_usage_error() {
    let o = run(&["degrees", "--map", "missing.json"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("missing.json"), "{err}");
}

#[test]
fn malformed_json_reports_position_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"k\": 2,\n \"degree_forward\": \"two\"}").unwrap();
    let o = run(&["validate", "--map", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("degree_forward"), "{err}");
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(run(&["degrees", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["degrees"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn certify_dominant_configuration() {
    let o = run(&["certify", "--map", &data("henon_A.json"), "--prime", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let c = json(&o);
    assert_eq!(c["verdict"], "certified");
    assert_eq!(c["proof_kind"], "inductive");
}

#[test]
fn certify_non_dominant_is_inconclusive() {
    let o = run(&["certify", "--map", &data("henon_A_nondominant.json")]);
    assert_eq!(json(&o)["verdict"], "inconclusive");
}

#[test]
fn singular_configuration_fails_validation() {
    let o = run(&["certify", "--map", &data("henon_A_literal.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("singular"));
}

#[test]
fn certify_sweep_reports_each_entry() {
    let dir = tempfile::tempdir().unwrap();
    let configs: Vec<Value> = ["henon_A.json", "henon_A_nondominant.json", "henon_A_literal.json"]
        .iter()
        .map(|n| serde_json::from_str(&fs::read_to_string(data(n)).unwrap()).unwrap())
        .collect();
    let path = dir.path().join("sweep.json");
    fs::write(&path, serde_json::to_string(&configs).unwrap()).unwrap();
    let o = run(&["certify", "--sweep", "--map", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v[0]["certificate"]["verdict"], "certified");
    assert_eq!(v[1]["certificate"]["verdict"], "inconclusive");
    assert!(v[2]["error"].as_str().unwrap().contains("singular"));
}

#[test]
fn resource_limit_exit_code() {
    let o = run(&["mugrid", "--map", &data("henon.json"), "--resolution", "40", "--max-cells", "1000"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn near_indeterminate_exit_code() {
    let o = run(&["green", "--map", &data("henon.json"), "--point", "0,1,0"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn failed_validation_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec: Value = serde_json::from_str(&fs::read_to_string(data("henon.json")).unwrap()).unwrap();
    let fwd = spec["ind_forward"].clone();
    spec["ind_forward"] = spec["ind_backward"].clone();
    spec["ind_backward"] = fwd;
    let path = dir.path().join("swapped.json");
    fs::write(&path, spec.to_string()).unwrap();
    let o = run(&["validate", "--map", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["loci_vanish"], false);
}

#[test]
fn naive_height_of_point() {
    let o = run(&["height", "--point", "-1/2,3,1"]);
    let v = json(&o);
    assert_eq!(v["point"], "[1:-6:-2]");
    assert!((v["naive_height"].as_f64().unwrap() - 6f64.ln()).abs() < 1e-12);
}

fn manifest_outputs(dir: &Path) -> Vec<(String, String)> {
    let m = read_json(&dir.join("manifest.json"));
    m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| {
            let name = Path::new(o["path"].as_str().unwrap()).file_name().unwrap();
            (name.to_string_lossy().into_owned(), o["sha256"].as_str().unwrap().to_string())
        })
        .collect()
}

/// Re-run the argv recorded in a manifest with a different output directory.
fn replay(manifest_dir: &Path, new_out: &Path) -> Output {
    let m = read_json(&manifest_dir.join("manifest.json"));
    let mut argv: Vec<String> = m["argv"]
        .as_array()
        .unwrap()
        .iter()
        .skip(1)
        .map(|a| a.as_str().unwrap().to_string())
        .collect();
    let i = argv.iter().position(|a| a == "--out").unwrap();
    argv[i + 1] = new_out.display().to_string();
    let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
    run(&refs)
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = run(&[
        "lee",
        "--map",
        &data("henon.json"),
        "--count",
        "50",
        "--seed",
        "7",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m = read_json(&first.join("manifest.json"));
    assert_eq!(m["subcommand"], "lee");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["parameters"]["count"], 50);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
    let second = dir.path().join("second");
    assert_eq!(replay(&first, &second).status.code(), Some(0));
    let a = manifest_outputs(&first);
    assert_eq!(a.len(), 2);
    assert_eq!(a, manifest_outputs(&second));
    for (name, _) in &a {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap());
    }
}

#[test]
fn seed_defaults_to_zero_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    run(&["validate", "--map", &data("henon.json"), "--out", dir.path().to_str().unwrap()]);
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["seed"], 0);
    assert_eq!(m["exit_code"], 0);
}

#[test]
fn grid_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = |w: &str| -> PathBuf {
        let d = dir.path().join(format!("w{w}"));
        let o = run(&[
            "mugrid",
            "--map",
            &data("henon.json"),
            "--n",
            "1",
            "--resolution",
            "8",
            "--workers",
            w,
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        d
    };
    let (a, b) = (out("1"), out("3"));
    for name in ["grid.bin", "grid.json", "grid_marginal.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn periodic_and_equidist_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut sets = Vec::new();
    for n in ["1", "2"] {
        let d = dir.path().join(format!("p{n}"));
        let o = run(&[
            "periodic",
            "--map",
            &data("henon.json"),
            "--n",
            n,
            "--exact-henon",
            "1,1",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        sets.push(d.join("periodic.json"));
    }
    let fixed = read_json(&sets[0]);
    assert_eq!(fixed["points"].as_array().unwrap().len(), 2);
    assert!(fixed["exact_points"]["double_root"] == false);
    assert_eq!(read_json(&sets[1])["points"].as_array().unwrap().len(), 4);
    let g = dir.path().join("g");
    let o = run(&["mugrid", "--map", &data("henon.json"), "--n", "1", "--resolution", "8", "--out", g.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let e = dir.path().join("e");
    let o = run(&[
        "equidist",
        "--sets",
        sets[0].to_str().unwrap(),
        sets[1].to_str().unwrap(),
        "--grid",
        g.join("grid.json").to_str().unwrap(),
        "--out",
        e.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["line_mass_at_infinity"], serde_json::json!([0.0, 0.0]));
    assert_eq!(v["report"]["consecutive"].as_array().unwrap().len(), 1);
    let m = read_json(&e.join("manifest.json"));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 4);
    assert!(e.join("equidist.csv").exists());
}

#[test]
fn rational_fixed_points_have_small_heights() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["periodic", "--map", &data("henon_a0_b2.json"), "--n", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&dir.path().join("periodic_rational.json"));
    let pts = r.as_array().unwrap();
    assert_eq!(pts.len(), 2);
    for p in pts {
        for h in p["heights"].as_array().unwrap() {
            assert!(h["value"].as_f64().unwrap() <= h["tail_bound"].as_f64().unwrap());
        }
    }
}

#[test]
fn energy_for_rotated_pair() {
    let o = run(&["energy", "--map", &data("henon_rotated.json"), "--n", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["stability"]["passes"], true);
    for s in v["series"].as_array().unwrap() {
        assert!(s["decay_fit"].as_f64().unwrap() <= 0.6);
    }
    let o = run(&["energy", "--map", &data("henon.json"), "--method", "monte-carlo"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn canonical_height_of_origin() {
    let o = run(&["hcanonical", "--map", &data("henon.json"), "--point", "0,0,1", "--side", "plus"]);
    let v = json(&o);
    let est = &v[0];
    assert!((est["value"].as_f64().unwrap() - 0.229).abs() < 2.0 * est["tail_bound"].as_f64().unwrap());
}

#[test]
fn density_and_hprime_run() {
    let o = run(&["density", "--map", &data("zariski_p5.json"), "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["all_hold"], true);
    let o = run(&["hprime", "--map", &data("henon.json"), "--count", "5", "--lee-count", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["c_source"], "lee-scan");
    assert_eq!(v["points"], 5);
}
