use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    WalkEquidistribute,
    SubmodularScan,
    TransversalityScan,
    MultisliceDemo,
    LyapunovEstimate,
    AngleLaw,
    BoxModel,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::WalkEquidistribute => "walk-equidistribute",
            Self::SubmodularScan => "submodular-scan",
            Self::TransversalityScan => "transversality-scan",
            Self::MultisliceDemo => "multislice-demo",
            Self::LyapunovEstimate => "lyapunov-estimate",
            Self::AngleLaw => "angle-law",
            Self::BoxModel => "box-model",
        }
    }
}

/// A config after merging the file, `--param` overrides and flags. The keys
/// `experiment`, `seed` and `out` are taken by the runner; flags win over the file.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: Map<String, Value>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(
        experiment: Experiment,
        file: Option<&Path>,
        overrides: &[String],
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        let mut params = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                match serde_json::from_str::<Value>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))? {
                    Value::Object(m) => m,
                    _ => return Err(CliError::Config("config must be a JSON object".into())),
                }
            }
            None => Map::new(),
        };
        for kv in overrides {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("expected key=value, got '{kv}'")))?;
            let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            params.insert(k.to_string(), v);
        }
        if let Some(name) = params.remove("experiment") {
            if name.as_str() != Some(experiment.name()) {
                return Err(CliError::Config(format!("config is for experiment {name}, not {}", experiment.name())));
            }
        }
        let file_seed = match params.remove("seed") {
            Some(v) => Some(v.as_u64().ok_or_else(|| CliError::Config(format!("seed must be a non-negative integer, got {v}")))?),
            None => None,
        };
        let file_out = match params.remove("out") {
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(v) => return Err(CliError::Config(format!("out must be a string, got {v}"))),
            None => None,
        };
        Ok(Self { experiment, params, seed: seed.or(file_seed).unwrap_or(0), output_path: out.or(file_out) })
    }

    /// Parses the parameters, rejecting unknown keys, and returns them with
    /// every default filled in.
    pub fn resolve<P: DeserializeOwned + Serialize>(&self) -> Result<(P, Value), CliError> {
        let p: P = serde_json::from_value(Value::Object(self.params.clone())).map_err(|e| CliError::Config(e.to_string()))?;
        let resolved = serde_json::to_value(&p).map_err(|e| CliError::Config(e.to_string()))?;
        Ok((p, resolved))
    }
}

/// `[[a, b], [c, d]]` or `[a, b, c, d]` for a square matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixSpec {
    pub fn to_matrix(&self) -> Result<nalgebra::DMatrix<f64>, CliError> {
        let (n, data): (usize, Vec<f64>) = match self {
            Self::Rows(rows) => (rows.len(), rows.iter().flatten().copied().collect()),
            Self::Flat(v) => ((v.len() as f64).sqrt().round() as usize, v.clone()),
        };
        if n == 0 || data.len() != n * n || matches!(self, Self::Rows(r) if r.iter().any(|x| x.len() != n)) {
            return Err(CliError::Config(format!("matrix {self:?} is not square")));
        }
        Ok(nalgebra::DMatrix::from_row_slice(n, n, &data))
    }
}

fn a_b() -> Vec<MatrixSpec> {
    [[1.0, 2.0, 0.0, 1.0], [1.0, -2.0, 0.0, 1.0], [1.0, 0.0, 2.0, 1.0], [1.0, 0.0, -2.0, 1.0]]
        .map(|m| MatrixSpec::Flat(m.to_vec()))
        .to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartSpec {
    Identity,
    Generic,
    #[serde(untagged)]
    Matrix(MatrixSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkParams {
    pub atoms: Vec<MatrixSpec>,
    /// Uniform when absent.
    pub weights: Option<Vec<f64>>,
    pub start: StartSpec,
    pub n_list: Vec<usize>,
    pub count: usize,
    pub beta: f64,
    pub dictionary_size: usize,
    /// Radius for the injectivity column.
    pub r: f64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            atoms: a_b(),
            weights: None,
            start: StartSpec::Generic,
            n_list: vec![10, 25, 50],
            count: 10_000,
            beta: 1.0,
            dictionary_size: walklab::modular::DEFAULT_DICTIONARY_SIZE,
            r: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubmodularParams {
    pub algebra: String,
    pub pairs: usize,
    /// Group elements sampled per pair.
    pub samples: usize,
}

impl Default for SubmodularParams {
    fn default() -> Self {
        Self { algebra: "sl3".into(), pairs: 100, samples: 8 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransversalityParams {
    pub n: usize,
    pub trials: usize,
}

impl Default for TransversalityParams {
    fn default() -> Self {
        Self { n: 4, trials: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudKind {
    Uniform,
    Grid,
    Cantor,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultisliceParams {
    pub dim: usize,
    pub points: usize,
    pub kind: CloudKind,
    /// CSV point cloud; overrides `kind`, `dim` and `points`.
    pub input: Option<PathBuf>,
    pub levels: Vec<u32>,
    pub eps: f64,
    pub delta: f64,
    pub alpha: f64,
    pub subspaces: usize,
    pub adversary_budget: usize,
}

impl Default for MultisliceParams {
    fn default() -> Self {
        Self {
            dim: 2,
            points: 1000,
            kind: CloudKind::Cantor,
            input: None,
            levels: vec![1, 3, 5, 7],
            eps: 0.1,
            delta: 1.0 / 64.0,
            alpha: 0.5,
            subspaces: 64,
            adversary_budget: 4,
        }
    }
}

/// Walk measure shared by the Lie-group experiments: either explicit
/// generators, or `random_generators` seeded group elements, symmetrized.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovParams {
    pub algebra: String,
    pub generators: Option<Vec<MatrixSpec>>,
    pub random_generators: usize,
    pub n: usize,
    pub trials: usize,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        Self { algebra: "sl3".into(), generators: None, random_generators: 2, n: 200, trials: 200 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleLawParams {
    pub algebra: String,
    pub generators: Option<Vec<MatrixSpec>>,
    pub random_generators: usize,
    pub n: usize,
    pub trials: usize,
    pub lyapunov_trials: usize,
    /// 1-based index into the Lyapunov flag.
    pub flag_index: usize,
    /// Dimension of the random target `W`; complementary to `V_i` when absent.
    pub w_dim: Option<usize>,
    pub rho_grid: Vec<f64>,
}

impl Default for AngleLawParams {
    fn default() -> Self {
        Self {
            algebra: "sl3".into(),
            generators: None,
            random_generators: 2,
            n: 50,
            trials: 200,
            lyapunov_trials: 100,
            flag_index: 1,
            w_dim: None,
            rho_grid: vec![0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxModelParams {
    pub algebra: String,
    pub generators: Option<Vec<MatrixSpec>>,
    pub random_generators: usize,
    pub n_list: Vec<usize>,
    pub eps: f64,
    pub trials: usize,
    pub lyapunov_n: usize,
    pub lyapunov_trials: usize,
}

impl Default for BoxModelParams {
    fn default() -> Self {
        Self {
            algebra: "sl3".into(),
            generators: None,
            random_generators: 2,
            n_list: vec![50, 100, 200],
            eps: 0.1,
            trials: 200,
            lyapunov_n: 400,
            lyapunov_trials: 200,
        }
    }
}
