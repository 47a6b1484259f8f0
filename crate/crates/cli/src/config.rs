//! Experiment configuration: a model preset with parameter lists that expand
//! into a deterministic cell grid, solver settings, and output policy.
//!
//! The canonical JSON serialization of the parsed config is hashed with
//! SHA-256 and that hash is embedded in every output file; aggregation
//! across different hashes is rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sbm_spectral::cluster::ApproxConfig;
use sbm_spectral::error::{Error, Result};
use sbm_spectral::model::{
    balanced_sizes, draw_psi_uniform, preset_planted_clique, preset_planted_partition,
    ConnectivityMatrix, DegreeParams, MembershipMatrix, ModelSpec,
};
use sbm_spectral::rng::derive_seed;
use sbm_spectral::spectral::{EigenConfig, EigenMethod};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum PresetName {
    PlantedPartition,
    PlantedClique,
    Dcbm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiRange {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub preset: PresetName,
    pub n: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    /// α_n = multiplier · log n / n (natural log).
    #[serde(default)]
    pub alpha_mult: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    /// Community size profile; only balanced profiles are generated here.
    #[serde(default = "default_sizes")]
    pub sizes: String,
    #[serde(default)]
    pub clique_size: Vec<usize>,
    /// ψ ~ Uniform[low, high], then rescaled per community (DCBM preset).
    #[serde(default)]
    pub psi: Option<PsiRange>,
}

fn default_sizes() -> String {
    "balanced".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon_target: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_swaps")]
    pub local_search_swaps: usize,
}

fn default_epsilon() -> f64 {
    0.5
}
fn default_restarts() -> usize {
    10
}
fn default_max_iterations() -> usize {
    100
}
fn default_swaps() -> usize {
    2
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon_target: default_epsilon(),
            restarts: default_restarts(),
            max_iterations: default_max_iterations(),
            local_search_swaps: default_swaps(),
        }
    }
}

impl SolverConfig {
    pub fn to_approx_config(&self) -> ApproxConfig {
        ApproxConfig {
            epsilon_target: self.epsilon_target,
            restarts: self.restarts,
            max_iterations: self.max_iterations,
            local_search_swaps: self.local_search_swaps,
            ..ApproxConfig::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSettings {
    #[serde(default = "default_dense_cutoff")]
    pub dense_cutoff: usize,
    #[serde(default = "default_residual_tol")]
    pub residual_tol_factor: f64,
    #[serde(default)]
    pub max_dim: usize,
}

fn default_dense_cutoff() -> usize {
    800
}
fn default_residual_tol() -> f64 {
    1e-8
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self {
            dense_cutoff: default_dense_cutoff(),
            residual_tol_factor: default_residual_tol(),
            max_dim: 0,
        }
    }
}

impl EigenSettings {
    pub fn to_eigen_config(&self) -> EigenConfig {
        EigenConfig {
            method: EigenMethod::Auto,
            dense_cutoff: self.dense_cutoff,
            residual_tol_factor: self.residual_tol_factor,
            max_dim: self.max_dim,
            ..EigenConfig::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub c_empirical: f64,
    #[serde(default)]
    pub c_sbm: Option<f64>,
    #[serde(default)]
    pub c_dcbm: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    /// Cells as (n, c₀) pairs; the edge probability is c₀·log n / n.
    pub grid: Vec<(usize, f64)>,
    pub replicates: usize,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        Self {
            grid: vec![(500, 5.0), (1000, 5.0), (2000, 5.0)],
            replicates: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub replicates: usize,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub eigen: EigenSettings,
    /// When absent, C_empirical is estimated with a small built-in
    /// concentration run seeded from `master_seed`.
    #[serde(default)]
    pub constants: Option<ConstantsConfig>,
    #[serde(default)]
    pub concentration: Option<ConcentrationConfig>,
    /// Bound-report names to emit; empty means all applicable.
    #[serde(default)]
    pub studies: Vec<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be >= 1".into()));
        }
        if self.grid.sizes != "balanced" {
            return Err(Error::InvalidParameter(format!(
                "unsupported size profile {:?}; only \"balanced\" is implemented",
                self.grid.sizes
            )));
        }
        // empty parameter lists simply yield an empty grid (header-only output)
        if matches!(self.grid.preset, PresetName::Dcbm) && self.grid.psi.is_none() {
            return Err(Error::InvalidParameter("dcbm grids need psi".into()));
        }
        if let Some(psi) = &self.grid.psi {
            if !(psi.low > 0.0 && psi.high >= psi.low) {
                return Err(Error::InvalidParameter(format!(
                    "psi range [{}, {}] must satisfy 0 < low <= high",
                    psi.low, psi.high
                )));
            }
        }
        // every cell must satisfy its preset's preconditions
        for cell in self.cells()? {
            cell.build_model(self.master_seed)?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialized form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialization cannot fail");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Expands the parameter lists into the deterministic cell grid.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells = Vec::new();
        match self.grid.preset {
            PresetName::PlantedClique => {
                for &n in &self.grid.n {
                    for &clique in &self.grid.clique_size {
                        cells.push(Cell {
                            index: cells.len(),
                            preset: "planted-clique".into(),
                            n,
                            k: 2,
                            alpha_mult: None,
                            alpha_n: 1.0,
                            lambda: None,
                            clique_size: Some(clique),
                            psi: None,
                        });
                    }
                }
            }
            PresetName::PlantedPartition | PresetName::Dcbm => {
                let degree_corrected = matches!(self.grid.preset, PresetName::Dcbm);
                for &n in &self.grid.n {
                    for &k in &self.grid.k {
                        for &mult in &self.grid.alpha_mult {
                            for &lambda in &self.grid.lambda {
                                let alpha_n = mult * (n as f64).ln() / n as f64;
                                cells.push(Cell {
                                    index: cells.len(),
                                    preset: if degree_corrected {
                                        "dcbm".into()
                                    } else {
                                        "planted-partition".into()
                                    },
                                    n,
                                    k,
                                    alpha_mult: Some(mult),
                                    alpha_n,
                                    lambda: Some(lambda),
                                    clique_size: None,
                                    psi: if degree_corrected {
                                        self.grid.psi.clone()
                                    } else {
                                        None
                                    },
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// One point of the parameter grid.
#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub index: usize,
    pub preset: String,
    pub n: usize,
    pub k: usize,
    pub alpha_mult: Option<f64>,
    pub alpha_n: f64,
    pub lambda: Option<f64>,
    pub clique_size: Option<usize>,
    pub psi: Option<PsiRange>,
}

impl Cell {
    /// Builds the cell's model. For DCBM cells the ψ draw is keyed by
    /// (master seed, cell index), so the model is fixed across replicates.
    pub fn build_model(&self, master_seed: u64) -> Result<ModelSpec> {
        match self.preset.as_str() {
            "planted-clique" => preset_planted_clique(self.n, self.clique_size.unwrap_or(0)),
            "planted-partition" => preset_planted_partition(
                self.n,
                self.k,
                self.alpha_n,
                self.lambda.expect("lambda set for partitions"),
                &balanced_sizes(self.n, self.k),
            ),
            "dcbm" => {
                let base = preset_planted_partition(
                    self.n,
                    self.k,
                    self.alpha_n,
                    self.lambda.expect("lambda set for dcbm"),
                    &balanced_sizes(self.n, self.k),
                )?;
                let psi_range = self.psi.as_ref().expect("psi set for dcbm");
                let psi_seed = derive_seed(master_seed, &[0x9511, self.index as u64]);
                let psi = draw_psi_uniform(self.n, psi_range.low, psi_range.high, psi_seed)?;
                let membership = MembershipMatrix::from_block_sizes(&balanced_sizes(self.n, self.k))?;
                let b = ConnectivityMatrix::new(base.connectivity().matrix().clone())?;
                let preset_info = *base.preset().expect("preset info");
                let spec = ModelSpec::dcbm(membership, b, DegreeParams::new(psi)?)?;
                Ok(spec.with_preset_info(preset_info))
            }
            other => Err(Error::InvalidParameter(format!("unknown preset {other}"))),
        }
    }
}
