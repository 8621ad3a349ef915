//! Experiment configuration: JSON with an explicit version, unknown keys rejected.

use std::path::{Path, PathBuf};

use hybrid_tn::pauli::{FieldStrengths, SpinModel};
use hybrid_tn::statevector::MAX_QUBITS;
use hybrid_tn::variational::IteConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// A single coupling scale or a list of them for `sweep`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lambda {
    Single(f64),
    Sweep(Vec<f64>),
}

impl Lambda {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Lambda::Single(x) => vec![*x],
            Lambda::Sweep(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub model: SpinModel,
    /// Spins per subsystem.
    pub n: usize,
    /// Number of subsystems.
    pub k: usize,
    pub lambda: Lambda,
    #[serde(default)]
    pub fields: FieldStrengths,
    /// Root circuit depth.
    #[serde(default = "default_d_u")]
    pub d_u: usize,
    /// Branch circuit depth.
    #[serde(default = "default_d_v")]
    pub d_v: usize,
    /// `ite.seed` and `ite.shots` mirror the top-level values; a conflicting
    /// nonzero value is a config error.
    #[serde(default)]
    pub ite: IteConfig,
    #[serde(default)]
    pub shots: usize,
    /// Seeds both the coupling draw and the initial parameters.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_d_u() -> usize {
    8
}

fn default_d_v() -> usize {
    4
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(model: SpinModel, n: usize, k: usize, lambda: Lambda) -> Self {
        Self {
            version: CONFIG_VERSION,
            model,
            n,
            k,
            lambda,
            fields: FieldStrengths::default(),
            d_u: default_d_u(),
            d_v: default_d_v(),
            ite: IteConfig::default(),
            shots: 0,
            seed: 0,
            output: default_output(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        raw.into_effective()
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Folds the top-level seed and shots into `ite` and validates.
    pub fn into_effective(mut self) -> Result<Self, CliError> {
        if self.ite.seed != 0 && self.ite.seed != self.seed {
            return Err(CliError::Config("ite.seed: set the top-level `seed` instead".into()));
        }
        if self.ite.shots != 0 && self.ite.shots != self.shots {
            return Err(CliError::Config("ite.shots: set the top-level `shots` instead".into()));
        }
        self.ite.seed = self.seed;
        self.ite.shots = self.shots;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.ite.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if self.version != CONFIG_VERSION {
            return bad("version", format!("unsupported version {}, expected {CONFIG_VERSION}", self.version));
        }
        if self.n < 2 {
            return bad("n", format!("subsystem size {} must be at least 2", self.n));
        }
        if self.k < 1 {
            return bad("k", "need at least one subsystem".into());
        }
        // one qubit is held back for the Hadamard-test ancilla
        for (field, v) in [("n", self.n), ("k", self.k)] {
            if v >= MAX_QUBITS {
                return bad(field, format!("{v} qubits exceed the simulator limit of {}", MAX_QUBITS - 1));
            }
        }
        let lambdas = self.lambda.values();
        if lambdas.is_empty() {
            return bad("lambda", "sweep list is empty".into());
        }
        for l in lambdas {
            if !(l.is_finite() && l >= 0.0) {
                return bad("lambda", format!("{l} must be finite and non-negative"));
            }
        }
        for (field, v) in [("fields.f", self.fields.f), ("fields.g", self.fields.g), ("fields.h", self.fields.h)] {
            if !v.is_finite() {
                return bad(field, format!("{v} is not finite"));
            }
        }
        self.ite.validate().map_err(|e| CliError::Config(strip_prefix(&e.to_string())))?;
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.n * self.k
    }

    /// The same experiment at a single coupling scale.
    pub fn at_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda: Lambda::Single(lambda),
            ..self.clone()
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn strip_prefix(msg: &str) -> String {
    msg.strip_prefix("invalid argument: ").unwrap_or(msg).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"version": 1, "model": "1d_cluster", "n": 2, "k": 2, "lambda": 1.0}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!((c.d_u, c.d_v, c.seed, c.shots), (8, 4, 0, 0));
        assert_eq!(c.fields, FieldStrengths::default());
        assert_eq!(c.ite.max_iters, IteConfig::default().max_iters);
        assert_eq!(c.lambda, Lambda::Single(1.0));
    }

    #[test]
    fn echoed_config_round_trips() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap().with_seed(17);
        let again = ExperimentConfig::from_json(&c.to_json_pretty()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.ite.seed, 17);
    }

    #[test]
    fn sweep_list_parses() {
        let text = MINIMAL.replace("1.0}", "[0, 0.5, 1]}");
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c.lambda.values(), vec![0.0, 0.5, 1.0]);
    }

    fn config_error(text: &str) -> String {
        match ExperimentConfig::from_json(text) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn field_level_errors() {
        assert!(config_error(&MINIMAL.replace("\"k\": 2", "\"k\": 2, \"bogus\": 1")).contains("bogus"));
        assert!(config_error(&MINIMAL.replace("\"version\": 1", "\"version\": 7")).starts_with("version"));
        assert!(config_error(&MINIMAL.replace("\"n\": 2", "\"n\": 1")).starts_with("n:"));
        assert!(config_error(&MINIMAL.replace("\"k\": 2", "\"k\": 30")).starts_with("k:"));
        assert!(config_error(&MINIMAL.replace("1.0}", "-1.0}")).starts_with("lambda"));
        assert!(config_error(&MINIMAL.replace("1.0}", "[]}")).starts_with("lambda"));
        assert!(config_error(&MINIMAL.replace("\"model\": \"1d_cluster\"", "\"model\": \"3d\"")).contains("3d"));
        assert!(config_error(&MINIMAL.replace("1.0}", "1.0, \"ite\": {\"delta\": 0}}")).starts_with("ite.delta"));
        assert!(config_error(&MINIMAL.replace("1.0}", "1.0, \"ite\": {\"typo\": 0}}")).contains("typo"));
        assert!(config_error(&MINIMAL.replace("1.0}", "1.0, \"ite\": {\"seed\": 4}}")).starts_with("ite.seed"));
        assert!(config_error(r#"{"version": 1}"#).contains("model"));
    }
}
