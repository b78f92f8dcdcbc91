use std::process::{Command, Output};

use serde_json::Value;

fn cubvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubvol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn fails_cleanly(out: &Output) {
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn mean_polynomial() {
    let v = json(&cubvol(&[
        "moments", "--model", "voxel", "-d", "2", "-k", "0", "--kind", "mean",
    ]));
    assert_eq!(
        v["coeffs"],
        serde_json::json!([[1, "-1/1"], [2, "2/1"], [4, "-1/1"]])
    );
    assert_eq!(v["variable"], "q");
    assert_eq!(v["kind"], "mean");
}

#[test]
fn evaluation_and_base() {
    let v = json(&cubvol(&[
        "moments", "--model", "voxel", "-d", "1", "-k", "0", "--kind", "variance", "--eval", "0.5",
    ]));
    // 1/2 - 1 + 3/4 - 3/16
    assert_eq!(v["value"]["exact"], "1/16");
    let v = json(&cubvol(&[
        "moments", "--model", "voxel", "-d", "2", "-k", "0", "--kind", "mean", "--base", "3",
    ]));
    assert_eq!(
        v["coeffs"],
        serde_json::json!([[1, "-1/1"], [3, "2/1"], [9, "-1/1"]])
    );
    let v = json(&cubvol(&[
        "moments",
        "--model",
        "plaquette",
        "-d",
        "3",
        "-k",
        "1",
        "--kind",
        "variance",
    ]));
    assert_eq!(v["variable"], "p");
    assert_eq!(v["coeffs"], serde_json::json!([[1, "9/1"], [2, "-9/1"]]));
    fails_cleanly(&cubvol(&[
        "moments",
        "--model",
        "plaquette",
        "-d",
        "2",
        "-k",
        "0",
        "--kind",
        "mean",
        "--base",
        "3",
    ]));
}

#[test]
fn golden_ratio_root() {
    let v = json(&cubvol(&["roots", "-d", "2"]));
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 3);
    let mid = roots[1]["midpoint"].as_f64().unwrap();
    assert!((mid - 0.618_033_988_7).abs() < 1e-10);
    let v = json(&cubvol(&[
        "roots",
        "-d",
        "3",
        "--interleave-up-to",
        "4",
        "--tol",
        "1/1000000",
    ]));
    assert_eq!(v["all_hold"], true);
}

#[test]
fn verification_exit_codes() {
    assert!(cubvol(&[
        "verify",
        "--exhaustive",
        "--model",
        "voxel",
        "-d",
        "2",
        "-n",
        "3"
    ])
    .status
    .success());
    let v = json(&cubvol(&["verify", "--identities", "--dmax", "4"]));
    assert_eq!(v["passed"], true);
    fails_cleanly(&cubvol(&[
        "verify",
        "--exhaustive",
        "--model",
        "voxel",
        "-d",
        "3",
        "-n",
        "3",
    ]));
    fails_cleanly(&cubvol(&["verify"]));
}

#[test]
fn gen_then_measure() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.cuvx");
    let b = dir.path().join("b.cuvx");
    for path in [&a, &b] {
        json(&cubvol(&[
            "gen",
            "--model",
            "voxel",
            "-d",
            "2",
            "-n",
            "8",
            "-p",
            "0.5",
            "--seed",
            "9",
            "-o",
            path.to_str().unwrap(),
        ]));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = json(&cubvol(&["measure", a.to_str().unwrap()]));
    assert_eq!(v["mu"].as_array().unwrap().len(), 3);
    let plaq = json(&cubvol(&[
        "measure",
        a.to_str().unwrap(),
        "--model",
        "plaquette",
    ]));
    // the full 1-skeleton of an 8x8 torus: 64 - 128 + squares
    assert_eq!(
        plaq["mu"][0].as_i64().unwrap(),
        -64 + v["mu"][2].as_i64().unwrap()
    );
    fails_cleanly(&cubvol(&[
        "measure",
        a.to_str().unwrap(),
        "--model",
        "closed-faces",
    ]));

    let c = dir.path().join("c.cucx");
    json(&cubvol(&[
        "gen",
        "--model",
        "closed-faces",
        "-d",
        "3",
        "-n",
        "4",
        "-p",
        "0.05",
        "-o",
        c.to_str().unwrap(),
    ]));
    assert_eq!(&std::fs::read(&c).unwrap()[..4], b"CUCX");
    json(&cubvol(&["measure", c.to_str().unwrap()]));
    fails_cleanly(&cubvol(&[
        "measure",
        dir.path().join("missing").to_str().unwrap(),
    ]));
}

#[test]
fn simulation_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let base = [
        "simulate",
        "--model",
        "voxel",
        "-d",
        "2",
        "-n",
        "16",
        "-p",
        "0.4",
        "--seed",
        "3",
        "--samples",
        "300",
    ];
    let one = cubvol(&[&base[..], &["--threads", "1"]].concat());
    let four = cubvol(
        &[
            &base[..],
            &["--threads", "4", "--dump", csv.to_str().unwrap()],
        ]
        .concat(),
    );
    assert_eq!(one.stdout, four.stdout);
    let v = json(&one);
    assert_eq!(v["samples"], 300);
    assert!(v.get("wall_time_secs").is_none());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("sample_index,mu_0,mu_1,mu_2\n"));
    assert_eq!(text.lines().count(), 301);
    let timed = json(&cubvol(&[&base[..], &["--timing"]].concat()));
    assert!(timed["wall_time_secs"].as_f64().is_some());
}

#[test]
fn bound_and_bad_input() {
    let v = json(&cubvol(&[
        "clt-bound",
        "-d",
        "2",
        "-k",
        "0",
        "-q",
        "3/5",
        "-n",
        "8",
    ]));
    let exact = v["bound"].as_f64().unwrap();
    let coarse = json(&cubvol(&[
        "clt-bound",
        "-d",
        "2",
        "-k",
        "0",
        "-q",
        "3/5",
        "-n",
        "8",
        "--coarse",
    ]));
    assert!(exact <= coarse["bound"].as_f64().unwrap());
    fails_cleanly(&cubvol(&[
        "clt-bound",
        "-d",
        "2",
        "-k",
        "0",
        "-q",
        "1",
        "-n",
        "8",
    ]));
    fails_cleanly(&cubvol(&[
        "clt-bound",
        "-d",
        "2",
        "-k",
        "0",
        "-q",
        "x",
        "-n",
        "8",
    ]));
    fails_cleanly(&cubvol(&[
        "simulate",
        "--model",
        "voxel",
        "-d",
        "2",
        "-n",
        "8",
        "-p",
        "1.5",
        "--samples",
        "10",
    ]));
    fails_cleanly(&cubvol(&[
        "gen",
        "--model",
        "voxel",
        "-d",
        "2",
        "-n",
        "1",
        "-p",
        "0.5",
        "-o",
        "/dev/null",
    ]));
    fails_cleanly(&cubvol(&[
        "moments", "--model", "cubes", "-d", "2", "-k", "0", "--kind", "mean",
    ]));
    let version = cubvol(&["--version"]);
    assert!(version.status.success());
    assert!(String::from_utf8_lossy(&version.stdout).contains("cubvol"));
}

#[test]
fn critical_points() {
    let v = json(&cubvol(&["critical-points", "-d", "1"]));
    assert_eq!(v["verified"], true);
    assert_eq!(v["maxima"][1]["expression"], "1/2 + 1/6*sqrt(3)");
}
