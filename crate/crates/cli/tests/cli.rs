use std::fs::{self, File};
use std::path::Path;
use std::process::{Command, Output};

use graphon_core::io::{read_dense_csv, read_edge_list, read_eigen_csv, read_operator_header, read_residual_csv, read_trajectory_csv};
use graphon_core::OperatorKind;
use tempfile::TempDir;

const ER: &str = r#"{"family":"constant","p":0.5}"#;
const LV: &str = r#"{"model":"lotka_volterra","lambda":1.0}"#;
const RING: &str = r#"{"family":"smallworld","alpha":0.2,"p":0.7957747154594768,"q":0.0}"#;

fn graphon(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphon"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("GRAPHON_SEED")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn sample_writes_files_and_is_reproducible() {
    let d = TempDir::new().unwrap();
    let args = ["sample", "--kernel", ER, "--n", "100", "--seed", "1", "--edge-list"];
    ok(&graphon(d.path(), &args));
    let csv = d.path().join("adjacency_100_1.csv");
    let first = fs::read(&csv).unwrap();
    let m = read_dense_csv(&first[..]).unwrap();
    assert_eq!((m.nrows(), m.ncols()), (100, 100));
    assert!(m.iter().all(|&v| v == 0.0 || v == 1.0));
    let edges = read_edge_list(File::open(d.path().join("edges_100_1.txt")).unwrap()).unwrap();
    assert_eq!(edges, m);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("manifest_100_1.json")).unwrap()).unwrap();
    assert_eq!(manifest["n"], 100);
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["kernel"]["family"], "constant");

    ok(&graphon(d.path(), &args));
    assert_eq!(fs::read(&csv).unwrap(), first, "same seed must give byte-identical CSV");
}

#[test]
fn deterministic_sample_holds_kernel_values() {
    let d = TempDir::new().unwrap();
    ok(&graphon(d.path(), &["sample", "--kernel", RING, "--n", "20", "--mode", "deterministic"]));
    let m = read_dense_csv(File::open(d.path().join("adjacency_20_det.csv")).unwrap()).unwrap();
    let k: graphon_core::GraphonKernel = serde_json::from_str(RING).unwrap();
    for i in 0..20 {
        for j in 0..20 {
            assert_eq!(m[(i, j)], k.value(i as f64 / 20.0, j as f64 / 20.0));
        }
    }
}

#[test]
fn solve_lv_converges() {
    let d = TempDir::new().unwrap();
    ok(&graphon(d.path(), &["solve", "--kernel", ER, "--model", LV, "--n", "200", "--seed", "1"]));
    let r = rows(&d.path().join("solve.csv"));
    assert_eq!(r.len(), 1);
    assert_eq!(&r[0][0], "200");
    assert_eq!(&r[0][2], "true");
    let hist = read_residual_csv(File::open(d.path().join("residuals_200_1.csv")).unwrap()).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("solve_200_1.json")).unwrap()).unwrap();
    assert_eq!(report["residual_history"].as_array().unwrap().len(), hist.len());
    assert!(*hist.last().unwrap() <= 1e-10);
}

#[test]
fn strict_exit_code_on_failed_instance() {
    let d = TempDir::new().unwrap();
    let args = ["solve", "--kernel", RING, "--model", r#"{"model":"kuramoto"}"#, "--n", "30", "--seed", "1", "--m", "5"];
    let lax = graphon(d.path(), &args);
    assert!(lax.status.success());
    let mut strict = args.to_vec();
    strict.push("--strict");
    let out = graphon(d.path(), &strict);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn empty_n_list_is_a_usage_error() {
    let d = TempDir::new().unwrap();
    let out = graphon(d.path(), &["solve", "--kernel", ER, "--model", LV]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_list"));
}

#[test]
fn unknown_repro_id_lists_valid_ids() {
    let d = TempDir::new().unwrap();
    let out = graphon(d.path(), &["repro", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for id in ["fig1", "scurve", "hugeneuro", "lv", "lvbipartite"] {
        assert!(err.contains(id), "{err}");
    }
}

#[test]
fn spectrum_lv_clouds_and_operator_export() {
    let d = TempDir::new().unwrap();
    let args = ["spectrum", "--kernel", ER, "--model", LV, "--n", "60", "--mode", "deterministic", "--export-operator"];
    ok(&graphon(d.path(), &args));
    let eig = read_eigen_csv(File::open(d.path().join("eigenvalues.csv")).unwrap()).unwrap();
    assert_eq!(eig.len(), 60);
    assert!(eig.iter().all(|r| r.seed.is_none() && r.n == 60 && r.im.abs() < 1e-10));
    let near = |c: f64| eig.iter().filter(|r| (r.re - c).abs() < 1e-8).count();
    assert_eq!((near(-1.0), near(-2.0 / 3.0)), (1, 59));
    let header = read_operator_header(File::open(d.path().join("operator_60_det.json")).unwrap()).unwrap();
    assert_eq!(header.n, 60);
    assert_eq!(header.kind, OperatorKind::DiscreteJacobian);
    let v = rows(&d.path().join("verdicts.csv"));
    assert_eq!(&v[0][2], "stable");
}

#[test]
fn ring_analytic_table() {
    let d = TempDir::new().unwrap();
    let out = graphon(d.path(), &["spectrum", "--kernel", RING, "--model", r#"{"model":"kuramoto"}"#, "--m", "1", "--ring-analytic", "--ell-max", "3"]);
    ok(&out);
    let r = rows(&d.path().join("ring_eigenvalues.csv"));
    assert_eq!(r.len(), 7);
    let at = |l: &str| r.iter().find(|x| &x[0] == l).unwrap()[1].parse::<f64>().unwrap();
    assert_eq!(at("0"), 0.0);
    assert!(at("2") < 0.0 && at("-2") == at("2"));
}

#[test]
fn dynamics_trajectory_with_stride() {
    let d = TempDir::new().unwrap();
    let args = ["dynamics", "--kernel", ER, "--model", LV, "--n", "20", "--seed", "2", "--dt", "0.05", "--t-end", "20", "--stride", "40"];
    ok(&graphon(d.path(), &args));
    let (t, s) = read_trajectory_csv(File::open(d.path().join("trajectory_20_2.csv")).unwrap()).unwrap();
    assert_eq!(t.len(), 11);
    assert!(s.iter().all(|u| u.len() == 20));
    assert!((t[10] - 20.0).abs() < 1e-12);
    let r = rows(&d.path().join("dynamics.csv"));
    assert_eq!(&r[0][4], "true");
}

#[test]
fn probe_reports_ratios() {
    let d = TempDir::new().unwrap();
    ok(&graphon(d.path(), &["probe", "--kernel", ER, "--model", r#"{"model":"lotka_volterra","lambda":0.5}"#, "--n", "50", "--seed", "4", "--pairs", "8"]));
    let r = rows(&d.path().join("probe.csv"));
    let t: f64 = r[0][2].parse().unwrap();
    assert!(t > 0.0 && t < 1.0);
}

#[test]
fn seed_env_overrides_config_seeds() {
    let d = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_graphon"))
        .args(["sample", "--kernel", ER, "--n", "10", "--seed", "1,2", "--out"])
        .arg(d.path())
        .env("GRAPHON_SEED", "77")
        .output()
        .unwrap();
    ok(&out);
    assert!(d.path().join("adjacency_10_77.csv").exists());
    assert!(!d.path().join("adjacency_10_1.csv").exists());
}

#[test]
fn job_count_does_not_change_outputs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = |j: &'static str| ["solve", "--kernel", ER, "--model", LV, "--n", "40,20", "--seed", "3,1,2", "--jobs", j];
    ok(&graphon(a.path(), &args("1")));
    ok(&graphon(b.path(), &args("4")));
    let fa = fs::read(a.path().join("solve.csv")).unwrap();
    assert_eq!(fa, fs::read(b.path().join("solve.csv")).unwrap());
    let keys: Vec<(usize, u64)> = rows(&a.path().join("solve.csv")).iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn config_file_with_overrides() {
    let d = TempDir::new().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/lv_bipartite.json");
    ok(&graphon(d.path(), &["solve", "--config", cfg, "--n", "40"]));
    let r = rows(&d.path().join("solve.csv"));
    assert_eq!((&r[0][0], &r[0][1], &r[0][2]), ("40", "3", "true"));

    let bad = d.path().join("bad.json");
    fs::write(&bad, r#"{"n_list": [10], "bogus": 1}"#).unwrap();
    assert_eq!(graphon(d.path(), &["solve", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn example_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let v: serde_json::Value = serde_json::from_slice(&fs::read(&p).unwrap()).unwrap();
        serde_json::from_value::<graphon_core::ModelSpec>(v["model"].clone()).unwrap();
        serde_json::from_value::<graphon_core::GraphonKernel>(v["kernel"].clone()).unwrap();
    }
    let schema: serde_json::Value =
        serde_json::from_slice(&fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/config.schema.json")).unwrap()).unwrap();
    assert_eq!(schema["type"], "object");
}

#[test]
fn cutnorm_of_matrix_file() {
    let d = TempDir::new().unwrap();
    let input = d.path().join("m.csv");
    fs::write(&input, "1,-1\n-1,1\n").unwrap();
    ok(&graphon(d.path(), &["cutnorm", "--input", input.to_str().unwrap(), "--second"]));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("cutnorm.json")).unwrap()).unwrap();
    assert_eq!(v["cutnorm"]["exact"], 0.25);
    assert_eq!(v["cutnorm_2"]["exact"], 1.0);
}

#[test]
fn repro_lvbipartite_and_scurve() {
    let d = TempDir::new().unwrap();
    ok(&graphon(d.path(), &["repro", "lvbipartite"]));
    let r = rows(&d.path().join("lvbipartite/lvbipartite.csv"));
    assert_eq!(r.len(), 200);
    assert_eq!(r.iter().filter(|x| &x[2] == "1").count(), 60);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("lvbipartite/repro_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 3);
    assert!(m["solver"]["tol_residual"].is_number());

    ok(&graphon(d.path(), &["repro", "scurve"]));
    let roots = rows(&d.path().join("scurve/scurve_roots.csv"));
    let stable: Vec<&str> = roots.iter().map(|x| x.get(2).unwrap()).collect();
    assert_eq!(stable, ["true", "false", "true"]);
}
