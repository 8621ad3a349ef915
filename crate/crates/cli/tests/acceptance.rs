//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest
//! harness so the lines always reach the console; exits nonzero on any failure.

use std::path::Path;
use std::time::Instant;

use hybrid_tn::hybrid::MeasurementStrategy;
use hybrid_tn::oracles::{exact_ground_energy, exact_ground_energy_with, EdMethod, LanczosOptions};
use hybrid_tn::pauli::SpinModel;
use hybrid_tn_cli::commands::{build_hamiltonian, RESULT_FILE, TRAJECTORY_FILE};
use hybrid_tn_cli::verify::{self, Check};
use hybrid_tn_cli::{cmd_run, ExperimentConfig, Lambda, RunRecord};

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = fn() -> Result<Outcome, String>;

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn from_checks(checks: &[Check]) -> Outcome {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let summary = checks
        .iter()
        .map(|c| {
            let head = match c.worst {
                Some(w) => format!("{}: {w:.2e}", c.name),
                None => format!("{}: {}", c.name, if c.passed { "ok" } else { "failed" }),
            };
            if c.detail.is_empty() {
                head
            } else {
                format!("{head} ({})", c.detail)
            }
        })
        .collect::<Vec<_>>()
        .join("; ");
    if failed.is_empty() {
        outcome(true, summary)
    } else {
        outcome(false, format!("failed [{}]; {summary}", failed.join(", ")))
    }
}

fn experiment(model: SpinModel, n: usize, k: usize, lambda: f64) -> ExperimentConfig {
    ExperimentConfig::new(model, n, k, Lambda::Single(lambda))
}

fn run(config: &ExperimentConfig) -> Result<RunRecord, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    cmd_run(config, dir.path()).map_err(|e| e.to_string())
}

fn rel(e: f64, e0: f64) -> f64 {
    (1.0 - e / e0).abs()
}

fn criterion_1() -> Result<Outcome, String> {
    let r = run(&experiment(SpinModel::Web2d, 4, 3, 1.0))?;
    let e0 = exact_ground_energy(&build_hamiltonian(&r.config, 1.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?
        .energy;
    let err = rel(r.energy, e0);
    Ok(outcome(
        err <= 5e-3,
        format!("2d_web n=4 k=3 d_U=8 d_V=4: E={:.10} E0={e0:.10} rel_error {err:.2e} (tol 5e-3, {:?})", r.energy, r.status),
    ))
}

fn criterion_2() -> Result<Outcome, String> {
    let mut parts = Vec::new();
    let mut passed = true;
    for (n, k) in [(8, 2), (4, 2), (4, 3)] {
        let r = run(&experiment(SpinModel::Cluster1d, n, k, 1.0))?;
        let h = build_hamiltonian(&r.config, 1.0).map_err(|e| e.to_string())?;
        let e0 = exact_ground_energy_with(&h, EdMethod::Lanczos, &LanczosOptions::default())
            .map_err(|e| e.to_string())?
            .energy;
        let err = rel(r.energy, e0);
        passed &= err <= 5e-3;
        parts.push(format!("n={n} k={k}: {err:.2e}"));
    }
    Ok(outcome(passed, format!("1d_cluster rel_error vs Lanczos (tol 5e-3): {}", parts.join(", "))))
}

fn criterion_3() -> Result<Outcome, String> {
    let mut parts = Vec::new();
    let mut passed = true;
    for (model, n, k) in [(SpinModel::Cluster1d, 4, 2), (SpinModel::Web2d, 4, 3)] {
        let config = experiment(model, n, k, 0.0);
        let r = run(&config)?;
        let block = model.block_hamiltonian::<f64>(n, &config.fields).map_err(|e| e.to_string())?;
        let reference = k as f64 * exact_ground_energy(&block).map_err(|e| e.to_string())?.energy;
        let err = rel(r.energy, reference);
        passed &= err <= 1e-3;
        parts.push(format!("{model:?} n={n} k={k}: {err:.2e}"));
    }
    Ok(outcome(passed, format!("lambda=0 vs sum of block energies (tol 1e-3): {}", parts.join(", "))))
}

fn criterion_4() -> Result<Outcome, String> {
    let checks: Vec<Check> = (1..=5).map(|case| verify::contraction_case(case, 200, 0)).collect();
    Ok(from_checks(&checks))
}

fn criterion_5() -> Result<Outcome, String> {
    let mut checks: Vec<Check> = [
        MeasurementStrategy::HadamardTest,
        MeasurementStrategy::SuperpositionInput,
        MeasurementStrategy::PauliOpenIndex,
    ]
    .into_iter()
    .map(|s| verify::strategy_equivalence(s, 50, 0))
    .collect();
    checks.push(verify::pauli_reconstruction(200, 0, -1.0));
    Ok(from_checks(&checks))
}

fn criterion_6() -> Result<Outcome, String> {
    Ok(from_checks(&[verify::normalization(100, 0)]))
}

fn criterion_7() -> Result<Outcome, String> {
    let mut checks = verify::single_rotation_metric();
    checks.extend(verify::metric_and_gradient(0));
    Ok(from_checks(&checks))
}

fn criterion_8() -> Result<Outcome, String> {
    Ok(from_checks(&[verify::subspace(100, 0)]))
}

fn criterion_9() -> Result<Outcome, String> {
    Ok(from_checks(&[
        verify::cost_linearity(SpinModel::Cluster1d),
        verify::cost_linearity(SpinModel::Web2d),
    ]))
}

fn criterion_10() -> Result<Outcome, String> {
    let mut parts = Vec::new();
    let mut passed = true;
    for config in [
        experiment(SpinModel::Cluster1d, 2, 2, 1.0),
        experiment(SpinModel::Web2d, 2, 2, 0.5).with_seed(11),
    ] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let read = |p: &Path| -> Result<[Vec<u8>; 2], String> {
            let f = |name| std::fs::read(p.join(name)).map_err(|e| e.to_string());
            Ok([f(RESULT_FILE)?, f(TRAJECTORY_FILE)?])
        };
        cmd_run(&config, dir.path()).map_err(|e| e.to_string())?;
        let first = read(dir.path())?;
        cmd_run(&config, dir.path()).map_err(|e| e.to_string())?;
        let same = first == read(dir.path())?;
        passed &= same;
        parts.push(format!(
            "{:?} seed {}: {}",
            config.model,
            config.seed,
            if same { "identical" } else { "differ" }
        ));
    }
    Ok(outcome(passed, format!("result.json and trajectory.csv across reruns: {}", parts.join(", "))))
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("2D web ground energy", criterion_1),
        ("1D cluster ground energy", criterion_2),
        ("lambda=0 separability", criterion_3),
        ("contraction cases vs oracle", criterion_4),
        ("measurement strategies", criterion_5),
        ("tree normalization", criterion_6),
        ("McLachlan A and C", criterion_7),
        ("subspace expansion", criterion_8),
        ("evaluations linear in k", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failures = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {title} ({:.1}s): {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
