//! `run`, `exact` and `sweep`.

use std::fs;
use std::path::{Path, PathBuf};

use hybrid_tn::oracles::{exact_ground_energy, EdMethod, LANCZOS_QUBIT_LIMIT};
use hybrid_tn::pauli::Hamiltonian;
use hybrid_tn::statevector::hardware_efficient_ansatz;
use hybrid_tn::tree::{build_two_layer_qq, HybridTree};
use hybrid_tn::variational::{run_ite, write_trajectory_csv, IteStatus};
use hybrid_tn::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Lambda};
use crate::{exit, CliError};

pub const RESULT_FILE: &str = "result.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const HAMILTONIAN_FILE: &str = "hamiltonian.txt";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    /// `computed` or `skipped`.
    pub status: &'static str,
    pub method: Option<EdMethod>,
    pub residual: Option<f64>,
    pub reason: Option<String>,
}

/// Contents of `result.json` for `run`. Holds no timings so that reruns are
/// byte-identical.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub lambda: f64,
    pub num_qubits: usize,
    pub num_params: usize,
    pub status: IteStatus,
    pub energy: f64,
    pub exact_energy: Option<f64>,
    /// `|1 − E/E₀|`.
    pub rel_error: Option<f64>,
    pub oracle: OracleReport,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub tau: f64,
    pub params: Vec<f64>,
}

impl RunRecord {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            IteStatus::MaxIters => exit::NOT_CONVERGED,
            IteStatus::Converged | IteStatus::Stalled => exit::SUCCESS,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TermExpectation {
    pub term: String,
    pub coefficient: f64,
    pub expectation: f64,
}

/// Contents of `result.json` for `exact`.
#[derive(Clone, Debug, Serialize)]
pub struct ExactRecord {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub lambda: f64,
    pub num_qubits: usize,
    pub energy: f64,
    pub method: EdMethod,
    pub residual: f64,
    pub expectations: Vec<TermExpectation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub dir: String,
    pub status: IteStatus,
    pub energy: f64,
    pub exact_energy: Option<f64>,
    pub rel_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

impl SweepSummary {
    pub fn exit_code(&self) -> i32 {
        if self.points.iter().any(|p| p.status == IteStatus::MaxIters) {
            exit::NOT_CONVERGED
        } else {
            exit::SUCCESS
        }
    }
}

fn single_lambda(config: &ExperimentConfig, verb: &str) -> Result<f64, CliError> {
    match &config.lambda {
        Lambda::Single(l) => Ok(*l),
        Lambda::Sweep(v) if v.len() == 1 => Ok(v[0]),
        Lambda::Sweep(_) => Err(CliError::Config(format!(
            "lambda: `{verb}` takes a single value; use `sweep` for a list"
        ))),
    }
}

fn model_error(e: Error) -> CliError {
    match e {
        Error::InvalidArgument(m) => CliError::Config(m),
        other => CliError::Runtime(other),
    }
}

pub fn build_hamiltonian(config: &ExperimentConfig, lambda: f64) -> Result<Hamiltonian<f64>, CliError> {
    let (h, _) = config
        .model
        .build::<f64>(config.n, config.k, lambda, config.seed, &config.fields)
        .map_err(model_error)?;
    Ok(h)
}

/// Root circuit of depth `d_u` on `k` qubits over `k` branch circuits of depth `d_v`.
pub fn build_ansatz(config: &ExperimentConfig) -> Result<HybridTree<f64>, CliError> {
    let root = hardware_efficient_ansatz(config.k, config.d_u).map_err(model_error)?;
    let branch = hardware_efficient_ansatz(config.n, config.d_v).map_err(model_error)?;
    let total = root.num_params() + config.k * branch.num_params();
    Ok(build_two_layer_qq(root, vec![branch; config.k], &vec![0.0; total])?)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("records serialize");
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Optimize at the config's single coupling scale and write `result.json`,
/// `trajectory.csv` and `hamiltonian.txt` into `out`. The exact reference is
/// skipped above the Lanczos size limit.
pub fn cmd_run(config: &ExperimentConfig, out: &Path) -> Result<RunRecord, CliError> {
    config.validate()?;
    let lambda = single_lambda(config, "run")?;
    run_point(config, lambda, out)
}

fn run_point(config: &ExperimentConfig, lambda: f64, out: &Path) -> Result<RunRecord, CliError> {
    let config = config.at_lambda(lambda);
    let h = build_hamiltonian(&config, lambda)?;
    let tree = build_ansatz(&config)?;
    create_dir(out)?;
    write_file(&out.join(HAMILTONIAN_FILE), h.to_text().as_bytes())?;

    let result = run_ite(&tree, &h, &config.ite)?;
    let mut csv = Vec::new();
    write_trajectory_csv(&result.trajectory, &mut csv).map_err(|e| CliError::io(&out.join(TRAJECTORY_FILE), e))?;
    write_file(&out.join(TRAJECTORY_FILE), &csv)?;

    let n = config.num_qubits();
    let (exact_energy, oracle) = if n <= LANCZOS_QUBIT_LIMIT {
        let g = exact_ground_energy(&h)?;
        let report = OracleReport {
            status: "computed",
            method: Some(g.method),
            residual: Some(g.residual),
            reason: None,
        };
        (Some(g.energy), report)
    } else {
        let report = OracleReport {
            status: "skipped",
            method: None,
            residual: None,
            reason: Some(format!("{n} qubits exceed the exact-diagonalization limit of {LANCZOS_QUBIT_LIMIT}")),
        };
        (None, report)
    };
    let record = RunRecord {
        seed: config.seed,
        lambda,
        num_qubits: n,
        num_params: tree.num_params(),
        status: result.status,
        energy: result.energy,
        exact_energy,
        rel_error: exact_energy.map(|e0| (1.0 - result.energy / e0).abs()),
        oracle,
        iterations: result.iterations,
        accepted_steps: result.accepted_steps,
        tau: result.tau,
        params: result.params,
        config,
    };
    write_json(&out.join(RESULT_FILE), &record)?;
    Ok(record)
}

/// Exact ground energy and per-term ground-state expectations.
pub fn cmd_exact(config: &ExperimentConfig, out: &Path) -> Result<ExactRecord, CliError> {
    config.validate()?;
    let lambda = single_lambda(config, "exact")?;
    let n = config.num_qubits();
    if n > LANCZOS_QUBIT_LIMIT {
        return Err(CliError::OracleLimit(format!(
            "{n} qubits exceed the exact-diagonalization limit of {LANCZOS_QUBIT_LIMIT}"
        )));
    }
    let config = config.at_lambda(lambda);
    let h = build_hamiltonian(&config, lambda)?;
    let g = exact_ground_energy(&h).map_err(|e| match e {
        Error::SizeExceeded { .. } => CliError::OracleLimit(e.to_string()),
        other => CliError::Runtime(other),
    })?;
    let expectations = h
        .terms()
        .iter()
        .map(|t| {
            Ok(TermExpectation {
                term: t.string.to_string(),
                coefficient: t.coefficient,
                expectation: g.state.pauli_string_expectation(&t.string)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let record = ExactRecord {
        seed: config.seed,
        lambda,
        num_qubits: n,
        energy: g.energy,
        method: g.method,
        residual: g.residual,
        expectations,
        config,
    };
    create_dir(out)?;
    write_file(&out.join(HAMILTONIAN_FILE), h.to_text().as_bytes())?;
    write_json(&out.join(RESULT_FILE), &record)?;
    Ok(record)
}

pub fn sweep_dir_name(index: usize) -> String {
    format!("lambda_{index:02}")
}

/// One `run` per coupling scale, in parallel, each into its own
/// `lambda_NN` subdirectory, plus `summary.json` in `out`.
pub fn cmd_sweep(config: &ExperimentConfig, out: &Path) -> Result<SweepSummary, CliError> {
    config.validate()?;
    let lambdas = config.lambda.values();
    let records = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &l)| {
            let dir: PathBuf = out.join(sweep_dir_name(i));
            run_point(config, l, &dir)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let points = records
        .iter()
        .enumerate()
        .map(|(i, r)| SweepPoint {
            lambda: r.lambda,
            dir: sweep_dir_name(i),
            status: r.status,
            energy: r.energy,
            exact_energy: r.exact_energy,
            rel_error: r.rel_error,
        })
        .collect();
    let summary = SweepSummary {
        config: config.clone(),
        seed: config.seed,
        points,
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}
