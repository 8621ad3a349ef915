use std::path::Path;
use std::process::{Command, Output};

use hybrid_tn::oracles::exact_ground_energy;
use hybrid_tn::pauli::{build_1d_cluster, Hamiltonian, SpinModel};
use hybrid_tn_cli::{exit, ExperimentConfig};
use serde_json::Value;

fn hybridtn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridtn")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const CLUSTER_2X2: &str = r#"{"version": 1, "model": "1d_cluster", "n": 2, "k": 2, "lambda": 1.0, "seed": 0}"#;

/// Trajectory rows as (energy, accepted).
fn trajectory(path: &Path) -> Vec<(f64, bool)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,tau,dtau,energy,accepted"));
    lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            assert_eq!(cols.len(), 5, "{l}");
            (cols[3].parse().unwrap(), cols[4].parse().unwrap())
        })
        .collect()
}

#[test]
fn run_reaches_exact_energy_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", CLUSTER_2X2);
    let out = tmp.path().join("out");
    let o = hybridtn(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::SUCCESS), "{}", String::from_utf8_lossy(&o.stderr));

    let r = read_json(&out.join("result.json"));
    let (e, e0) = (r["energy"].as_f64().unwrap(), r["exact_energy"].as_f64().unwrap());
    let rel = r["rel_error"].as_f64().unwrap();
    assert!((rel - (1.0 - e / e0).abs()).abs() < 1e-15);
    assert!(rel <= 1e-3, "rel_error {rel}");
    assert!(e >= e0 - 1e-10, "variational energy below the ground state");
    assert_eq!(r["status"], "converged");
    assert_eq!(r["oracle"]["status"], "computed");

    // the echoed config is complete and reloads to itself
    let echoed = ExperimentConfig::from_json(&r["config"].to_string()).unwrap();
    assert_eq!(serde_json::to_value(&echoed).unwrap(), r["config"]);
    assert_eq!(echoed.d_u, 8);
    assert_eq!(echoed.ite.delta, 1e-3);
    assert_eq!(r["seed"], 0);

    let rows = trajectory(&out.join("trajectory.csv"));
    assert!(rows.iter().all(|(e, _)| e.is_finite()));
    let accepted: Vec<f64> = rows.iter().filter(|r| r.1).map(|r| r.0).collect();
    assert!(accepted.windows(2).all(|w| w[1] <= w[0] + echoed.ite.accept_tol));
    assert_eq!(accepted.last().copied(), Some(e));

    let h = Hamiltonian::<f64>::from_text(&std::fs::read_to_string(out.join("hamiltonian.txt")).unwrap()).unwrap();
    let (want, _) = build_1d_cluster::<f64>(2, 2, 1.0, 0).unwrap();
    assert_eq!(h.to_text(), want.to_text());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", CLUSTER_2X2);
    let out = tmp.path().join("out");
    let files = ["result.json", "trajectory.csv", "hamiltonian.txt"];
    let mut first = Vec::new();
    for threads in ["1", "2"] {
        let o = hybridtn(&["--threads", threads, "run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        first.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(first[0], first[1]);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", CLUSTER_2X2);
    let out = tmp.path().join("out");
    let o = hybridtn(&["exact", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&out.join("result.json"));
    assert_eq!(r["seed"], 5);
    assert_eq!(r["config"]["ite"]["seed"], 5);
    let (h, _) = build_1d_cluster::<f64>(2, 2, 1.0, 5).unwrap();
    assert!((r["energy"].as_f64().unwrap() - exact_ground_energy(&h).unwrap().energy).abs() < 1e-12);
}

#[test]
fn exact_matches_library_call() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"version": 1, "model": "1d_cluster", "n": 2, "k": 1, "lambda": 1.0}"#,
    );
    let out = tmp.path().join("out");
    assert_eq!(hybridtn(&["exact", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let r = read_json(&out.join("result.json"));
    let (h, _) = SpinModel::Cluster1d.build::<f64>(2, 1, 1.0, 0, &Default::default()).unwrap();
    let want = exact_ground_energy(&h).unwrap().energy;
    assert!((r["energy"].as_f64().unwrap() - want).abs() < 1e-12);
    // the per-term expectations reassemble the energy
    let sum: f64 = r["expectations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["coefficient"].as_f64().unwrap() * t["expectation"].as_f64().unwrap())
        .sum();
    assert!((sum - want).abs() < 1e-10);
}

#[test]
fn exact_golden_2d_web() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/exact_2d_web_n2_k2_seed0");
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"version": 1, "model": "2d_web", "n": 2, "k": 2, "lambda": 1.0, "seed": 0}"#,
    );
    let out = tmp.path().join("out");
    assert_eq!(hybridtn(&["exact", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(out.join("hamiltonian.txt")).unwrap(),
        std::fs::read_to_string(golden.join("hamiltonian.txt")).unwrap()
    );
    let want: f64 = std::fs::read_to_string(golden.join("energy.txt")).unwrap().trim().parse().unwrap();
    let got = read_json(&out.join("result.json"))["energy"].as_f64().unwrap();
    assert!((got - want).abs() < 1e-10, "{got} vs golden {want}");
}

#[test]
fn sweep_writes_one_record_per_lambda() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"version": 1, "model": "1d_cluster", "n": 2, "k": 2, "lambda": [0, 0.25, 0.5, 0.75, 1.0]}"#,
    );
    let out = tmp.path().join("out");
    let o = hybridtn(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&out.join("summary.json"));
    let points = s["points"].as_array().unwrap();
    assert_eq!(points.len(), 5);
    for (i, (p, l)) in points.iter().zip([0.0, 0.25, 0.5, 0.75, 1.0]).enumerate() {
        assert_eq!(p["lambda"].as_f64(), Some(l));
        assert!(p["rel_error"].as_f64().unwrap() <= 1e-2, "lambda {l}: {}", p["rel_error"]);
        let dir = out.join(format!("lambda_{i:02}"));
        let r = read_json(&dir.join("result.json"));
        assert_eq!(r["config"]["lambda"].as_f64(), Some(l));
        assert_eq!(r["energy"], p["energy"]);
        assert!(dir.join("trajectory.csv").exists() && dir.join("hamiltonian.txt").exists());
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    let unknown = write_config(tmp.path(), "a.json", &CLUSTER_2X2.replace("\"seed\"", "\"sede\""));
    let o = hybridtn(&["run", "--config", &unknown, "--out", out]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sede"));

    let bad_field = write_config(tmp.path(), "b.json", &CLUSTER_2X2.replace("\"n\": 2", "\"n\": 1"));
    let o = hybridtn(&["run", "--config", &bad_field, "--out", out]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n: "));

    let list = write_config(tmp.path(), "c.json", &CLUSTER_2X2.replace("1.0", "[0.5, 1.0]"));
    assert_eq!(hybridtn(&["run", "--config", &list, "--out", out]).status.code(), Some(exit::CONFIG));
    let missing = tmp.path().join("nope.json");
    assert_eq!(
        hybridtn(&["run", "--config", missing.to_str().unwrap(), "--out", out]).status.code(),
        Some(exit::CONFIG)
    );

    let big = write_config(
        tmp.path(),
        "d.json",
        r#"{"version": 1, "model": "2d_web", "n": 7, "k": 3, "lambda": 1.0}"#,
    );
    let o = hybridtn(&["exact", "--config", &big, "--out", out]);
    assert_eq!(o.status.code(), Some(exit::ORACLE_LIMIT));
    assert!(String::from_utf8_lossy(&o.stderr).contains("21 qubits"));

    // non-convergence still writes the result
    let short = write_config(tmp.path(), "e.json", &CLUSTER_2X2.replace("}", r#", "ite": {"max_iters": 3}}"#));
    let o = hybridtn(&["run", "--config", &short, "--out", out]);
    assert_eq!(o.status.code(), Some(exit::NOT_CONVERGED));
    let r = read_json(&Path::new(out).join("result.json"));
    assert_eq!(r["status"], "max_iters");
    assert_eq!(r["iterations"], 3);
}

#[test]
fn oracle_is_skipped_above_limit() {
    // 22 qubits with a tiny ansatz and a single iteration
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"version": 1, "model": "1d_cluster", "n": 11, "k": 2, "lambda": 1.0, "d_u": 1, "d_v": 1,
            "ite": {"max_iters": 1}}"#,
    );
    let out = tmp.path().join("out");
    let o = hybridtn(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::NOT_CONVERGED));
    let r = read_json(&out.join("result.json"));
    assert_eq!(r["oracle"]["status"], "skipped");
    assert!(r["exact_energy"].is_null() && r["rel_error"].is_null());
}

#[test]
fn verify_passes_and_detects_mutation() {
    let o = hybridtn(&["verify", "--shots", "50000"]);
    let table = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{table}");
    assert!(table.contains("sampled Pauli expectations"));
    assert!(table.trim_end().ends_with("0 failed"));

    let o = hybridtn(&["verify", "--mutate-y-sign"]);
    let table = String::from_utf8_lossy(&o.stdout);
    assert_ne!(o.status.code(), Some(0));
    assert!(table.lines().any(|l| l.starts_with("FAIL") && l.contains("+E(Y)Y")), "{table}");
}
