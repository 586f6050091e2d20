use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use spinsqueeze::fit::fit_slope;

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn model(name: &str) -> String {
    models().join(name).to_string_lossy().into_owned()
}

fn sqz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqz")).args(args).output().expect("run sqz")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn meta(csv: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}: ");
    csv.lines().find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
}

#[test]
fn kernel_oat() {
    let out = sqz(&["kernel", "--model", &model("oat.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["summary"]["r0"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["summary"]["i_max"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["model_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn heisenberg_has_no_first_order_squeezing() {
    let out = sqz(&["verify-t1", "--model", &model("heisenberg.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["slope"].as_f64().unwrap().abs() < 1e-6);
    assert_eq!(v["verdict"], "no first-order squeezing");
    assert_eq!(v["predicted_slope"].as_f64().unwrap(), 0.0);
}

#[test]
fn sweep_jy_rows_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = sqz(&["sweep", "--model", &model("xyz.json"), "--vary", "jy:0:2:21", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().any(|l| l.starts_with("jy,r0,")));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 21);
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0]);
        assert!(w[1][1] < w[0][1], "r0 not decreasing in jy");
    }
    // Affine in jy: constant second differences.
    for w in rows.windows(3) {
        assert!((w[2][1] - 2.0 * w[1][1] + w[0][1]).abs() < 1e-9);
    }
    assert_eq!(json(&out)["rows"].as_array().unwrap().len(), 21);
}

#[test]
fn oat_csv_reproduces_json_slope() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("oat.csv");
    let out = sqz(&["verify-t1", "--model", &model("oat8.json"), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let slope = json(&out)["slope"].as_f64().unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let recorded: f64 = meta(&text, "fit_slope").unwrap().parse().unwrap();
    assert_eq!(recorded, slope);
    let rows = data_rows(&text);
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let refit = fit_slope(&xs, &ys).unwrap();
    assert!((refit.slope - slope).abs() <= 1e-12 * slope.abs());
    assert!((slope + 0.875).abs() < 1e-3);
    assert!(meta(&text, "seed").is_some() && meta(&text, "model_hash").is_some() && meta(&text, "grid").is_some());
}

#[test]
fn empty_grid_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    let out = sqz(&["verify-t1", "--model", &model("oat.json"), "--grid", "1e-4,1e-2,0", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body, vec![spinsqueeze::squeezing::CSV_HEADER]);
}

#[test]
fn same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<(Vec<u8>, Vec<u8>)> = (0..2)
        .map(|k| {
            let csv = dir.path().join(format!("run{k}.csv"));
            let out = sqz(&[
                "verify-t2",
                "--model",
                &model("tact.json"),
                "--seed",
                "7",
                "--grid",
                "1e-3,1e-2,5",
                "--out",
                csv.to_str().unwrap(),
            ]);
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
            (out.stdout, std::fs::read(&csv).unwrap())
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn sweep_order_independent_of_threads() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_sqz"))
            .env("SQZ_THREADS", threads)
            .args(["sweep", "--model", &model("xyz.json"), "--vary", "jx:-1:1:9"])
            .output()
            .unwrap()
    };
    let (a, b) = (run("1"), run("4"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run("0").status.code(), Some(2));
}

#[test]
fn malformed_model_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"n_sites\": 4,\n  \"chi\": \"one\"\n}\n").unwrap();
    let out = sqz(&["kernel", "--model", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    std::fs::write(&bad, "{ \"n_sites\": 4, \"chii\": 1.0 }").unwrap();
    let out = sqz(&["kernel", "--model", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("chii"));
}

#[test]
fn unwritable_out_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("x.csv");
    let out = sqz(&["verify-t1", "--model", &model("oat.json"), "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_failure_exits_1() {
    let out = sqz(&["verify-t1", "--model", &model("oat8.json"), "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(sqz(&["verify-t1", "--model", &model("oat.json"), "--xi", "global"]).status.code(), Some(2));
    assert_eq!(sqz(&["verify-t1", "--model", &model("oat.json"), "--grid", "1,2"]).status.code(), Some(2));
    assert_eq!(sqz(&["verify-t1", "--model", &model("oat.json"), "--init", "+-+"]).status.code(), Some(2));
    assert_eq!(sqz(&["sweep", "--model", &model("xyz.json"), "--vary", "theta:0:1:3"]).status.code(), Some(2));
    assert_eq!(sqz(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn init_runs_generalized_harness() {
    for cmd in ["verify-t1", "verify-t2"] {
        let out = sqz(&[cmd, "--model", &model("xyz.json"), "--init", "+-+-+", "--grid", "1e-4,1e-2,7"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["init"], "+-+-+");
        assert!(v["max_pointwise_diff"].as_f64().unwrap() <= 1e-9);
    }
}

#[test]
fn oracle_passes_on_small_models() {
    let out = sqz(&["oracle", "--model", &model("xyz.json"), "--init", "+--++"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["transform_max_dev"].as_f64().unwrap() < 1e-10);
    assert_eq!(sqz(&["oracle", "--model", &model("dipolar_chain.json")]).status.code(), Some(2));
}
