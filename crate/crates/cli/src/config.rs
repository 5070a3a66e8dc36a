//! Experiment configuration: one JSON document, optionally overridden
//! from the command line.

use std::path::{Path, PathBuf};

use darktraj_core::channel::KrausEnsemble;
use darktraj_core::presets::{self, Example1Variant};
use darktraj_core::{tol, CMatrix};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::format::{matrix_from_doc, read_ensemble, read_json, EnsembleDoc, MatrixDoc, OutputFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Variant {
    #[serde(rename = "5a")]
    #[value(name = "5a")]
    FullGroup,
    #[serde(rename = "5b")]
    #[value(name = "5b")]
    CircleFlip,
    #[serde(rename = "5c")]
    #[value(name = "5c")]
    Quaternion,
}

impl Variant {
    fn core(self) -> Example1Variant {
        match self {
            Variant::FullGroup => Example1Variant::FullGroup,
            Variant::CircleFlip => Example1Variant::CircleFlip,
            Variant::Quaternion => Example1Variant::Quaternion,
        }
    }
}

/// Parameters of the built-in examples. Unset fields take the defaults
/// listed in [`PresetSpec::ensemble`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PresetSpec {
    pub number: u8,
    pub variant: Option<Variant>,
    pub theta_x: Option<f64>,
    pub theta_z: Option<f64>,
    /// Example 1 with explicit `u_1..u_4`.
    pub unitaries: Option<Vec<MatrixDoc>>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub q: Option<f64>,
    pub with_v3: bool,
}

pub const DEFAULT_EXAMPLE2_ANGLES: (f64, f64) = (0.62, 0.41);
pub const DEFAULT_EXAMPLE3_Q: f64 = 0.3;

impl PresetSpec {
    /// Example 1 defaults to variant 5a, Example 2 to `(θ, φ) = (0.62,
    /// 0.41)`, Example 3 to `q = 0.3` without `v_3`.
    pub fn ensemble(&self) -> Result<KrausEnsemble, CliError> {
        let built = match self.number {
            1 => {
                if let Some(us) = &self.unitaries {
                    let ms: Vec<CMatrix> = us
                        .iter()
                        .map(matrix_from_doc)
                        .collect::<Result<_, _>>()
                        .map_err(CliError::Config)?;
                    if ms.len() != 4 {
                        return Err(CliError::Config("Example 1 takes exactly four unitaries".into()));
                    }
                    presets::example1([&ms[0], &ms[1], &ms[2], &ms[3]])
                } else {
                    let (dx, dz) = self.variant.unwrap_or(Variant::FullGroup).core().angles();
                    presets::example1_rotations(self.theta_x.unwrap_or(dx), self.theta_z.unwrap_or(dz))
                }
            }
            2 => presets::example2(
                self.theta.unwrap_or(DEFAULT_EXAMPLE2_ANGLES.0),
                self.phi.unwrap_or(DEFAULT_EXAMPLE2_ANGLES.1),
            ),
            3 => presets::example3(self.q.unwrap_or(DEFAULT_EXAMPLE3_Q), self.with_v3),
            n => return Err(CliError::Config(format!("unknown example {n}"))),
        };
        built.map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleSource {
    Example(PresetSpec),
    File(PathBuf),
    Inline(EnsembleDoc),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageParams {
    pub discovery_probes: usize,
    pub chain_len: usize,
    pub chi_burn: usize,
    pub chi_keep: usize,
    pub max_word_len: usize,
    pub max_family_nodes: usize,
    pub smart_check_words: usize,
    pub group_cap: usize,
    pub ergodic_samples: usize,
    /// Base ray in `ℂ^{r_m}`; a seeded random ray when absent.
    pub base_ray: Option<Vec<[f64; 2]>>,
    pub gap_seeds: usize,
    pub gap_n_max: usize,
    pub s_n_max: usize,
    pub s_samples: usize,
    pub w1_n_max: usize,
    pub w1_samples: usize,
}

impl Default for StageParams {
    fn default() -> Self {
        StageParams {
            discovery_probes: 16,
            chain_len: darktraj_core::darkspace::DEFAULT_CHAIN_LEN,
            chi_burn: 1000,
            chi_keep: 10_000,
            max_word_len: 20,
            max_family_nodes: 10_000,
            smart_check_words: 1000,
            group_cap: darktraj_core::family::DEFAULT_GROUP_CAP,
            ergodic_samples: 10_000,
            base_ray: None,
            gap_seeds: 200,
            gap_n_max: 60,
            s_n_max: 8,
            s_samples: 10_000,
            w1_n_max: 20,
            w1_samples: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Largest accepted `‖Σ p v*v − Id‖`.
    pub stochastic: f64,
    /// Invariance passes when the residual is within this many standard
    /// errors.
    pub invariance_se: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stochastic: tol::STOCHASTIC,
            invariance_se: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub ensemble: Option<EnsembleSource>,
    /// `seeds[0]` drives every stage. Further entries, if any, are the
    /// trajectory seeds of the darkness-gap curve.
    pub seeds: Vec<u64>,
    pub params: StageParams,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ensemble: None,
            seeds: vec![0],
            params: StageParams::default(),
            tolerances: Tolerances::default(),
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    /// Reads a config; relative ensemble paths resolve against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = read_json(path)?;
        if let Some(EnsembleSource::File(p)) = &mut cfg.ensemble {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seed list is empty".into()));
        }
        let t = &self.tolerances;
        if !(t.stochastic > 0.0 && t.invariance_se > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        match &self.ensemble {
            None => Err(CliError::Config("no ensemble given (use --example or --ensemble)".into())),
            Some(EnsembleSource::File(p)) if !p.exists() => Err(CliError::io(p, "file not found")),
            _ => Ok(()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seeds[0]
    }

    /// Trajectory seeds for the darkness-gap curve.
    pub fn gap_seeds(&self) -> Vec<u64> {
        if self.seeds.len() > 1 {
            self.seeds[1..].to_vec()
        } else {
            (0..self.params.gap_seeds as u64).map(|k| self.seed().wrapping_add(k)).collect()
        }
    }

    /// The ensemble, with no stochasticity check.
    pub fn ensemble(&self) -> Result<KrausEnsemble, CliError> {
        match self.ensemble.as_ref() {
            None => Err(CliError::Config("no ensemble given".into())),
            Some(EnsembleSource::Example(p)) => p.ensemble(),
            Some(EnsembleSource::File(p)) => read_ensemble(p),
            Some(EnsembleSource::Inline(doc)) => doc.to_ensemble().map_err(CliError::Config),
        }
    }
}
