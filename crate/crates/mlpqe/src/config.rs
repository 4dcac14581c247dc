//! Declarative run configuration and fixture loading.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ansatz::{generate_pool, init_params_mp2, mp2_screen, AnsatzPool};
use crate::error::{Error, Result};
use crate::integrals::{self, MolecularIntegrals, SpinOrbitalBasis};
use crate::noise::{NoiseSpec, DEFAULT_REPLICAS};
use crate::pauli::{hamiltonian_from_integrals, PauliSum};
use crate::pqe::{reference_determinant, LoopConfig, DEFAULT_MAX_ITERATIONS, DEFAULT_THRESHOLD};
use crate::statevector::Determinant;
use crate::surrogate::{FeatureKind, MlConfig, DEFAULT_ALPHA, DEFAULT_FRACTION, DEFAULT_LRNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Conventional,
    Ml,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSettings {
    pub sigma: f64,
    pub seed: u64,
    pub replicas: usize,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        NoiseSettings {
            sigma: 0.0,
            seed: 0,
            replicas: DEFAULT_REPLICAS,
        }
    }
}

impl NoiseSettings {
    pub fn spec(&self) -> Result<NoiseSpec> {
        NoiseSpec::new(self.sigma, self.seed, self.replicas)
    }
}

/// Full experiment configuration; every default echoes the reference setup.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fcidump_path: PathBuf,
    /// 2 / 3 / 4 selects SD / SDT / SDTQ.
    pub max_rank: usize,
    /// Doubles with |MP2 amplitude| at or below this are screened out.
    pub mp2_cutoff: f64,
    pub threshold: f64,
    pub max_iterations: usize,
    pub lrnt: f64,
    pub fraction: f64,
    pub alpha: f64,
    /// RBF width; `null` selects 1/feature-dimension.
    pub gamma: Option<f64>,
    pub features: FeatureKind,
    pub noise: Option<NoiseSettings>,
    pub mode: RunMode,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fcidump_path: PathBuf::new(),
            max_rank: 2,
            mp2_cutoff: 1e-5,
            threshold: DEFAULT_THRESHOLD,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            lrnt: DEFAULT_LRNT,
            fraction: DEFAULT_FRACTION,
            alpha: DEFAULT_ALPHA,
            gamma: None,
            features: FeatureKind::ThetaP,
            noise: None,
            mode: RunMode::Both,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Invalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.max_rank) {
            return Err(Error::Invalid(format!(
                "max_rank must be 2, 3 or 4, got {}",
                self.max_rank
            )));
        }
        for (name, v) in [
            ("mp2_cutoff", self.mp2_cutoff),
            ("threshold", self.threshold),
            ("lrnt", self.lrnt),
            ("fraction", self.fraction),
            ("alpha", self.alpha),
        ] {
            if v <= 0.0 {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::Invalid("max_iterations must be at least 1".into()));
        }
        if let Some(noise) = &self.noise {
            noise.spec()?;
        }
        Ok(())
    }

    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            threshold: self.threshold,
            max_iterations: self.max_iterations,
            epsilon_res: self.threshold,
        }
    }

    pub fn ml_config(&self) -> MlConfig {
        MlConfig {
            lrnt: self.lrnt,
            fraction: self.fraction,
            alpha: self.alpha,
            gamma: self.gamma,
            threshold: self.threshold,
            max_iterations: self.max_iterations,
            epsilon_res: self.threshold,
            feature_kind: self.features,
        }
    }

    /// Output directory, optionally rooted at `$MLPQE_OUTPUT_ROOT`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os("MLPQE_OUTPUT_ROOT") {
            Some(root) if self.output_dir.is_relative() => {
                PathBuf::from(root).join(&self.output_dir)
            }
            _ => self.output_dir.clone(),
        }
    }
}

/// Everything derived from one FCIDUMP under one configuration.
#[derive(Debug)]
pub struct System {
    pub ints: MolecularIntegrals,
    pub basis: SpinOrbitalBasis,
    pub hamiltonian: PauliSum,
    /// Screened pool at the MP2 starting point.
    pub pool: AnsatzPool,
    pub reference: Determinant,
}

pub fn build_system(config: &RunConfig) -> Result<System> {
    let text = std::fs::read_to_string(&config.fcidump_path).map_err(|e| {
        Error::Invalid(format!(
            "cannot read FCIDUMP {}: {e}",
            config.fcidump_path.display()
        ))
    })?;
    let ints = integrals::parse_fcidump(&text)?;
    let basis = integrals::orbital_energies(&ints)?;
    let hamiltonian = hamiltonian_from_integrals(&ints, &basis);
    let pool = generate_pool(&basis, config.max_rank)?;
    let t2 = integrals::mp2_amplitudes(&basis, &ints)?;
    let pool = mp2_screen(&pool, &t2, config.mp2_cutoff);
    let pool = init_params_mp2(&pool, &t2);
    if pool.n_par() == 0 {
        return Err(Error::Invalid(
            "MP2 screening removed every operator; lower mp2_cutoff".into(),
        ));
    }
    let reference = reference_determinant(ints.n_electrons);
    Ok(System {
        ints,
        basis,
        hamiltonian,
        pool,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.max_rank, 2);
        assert_eq!(cfg.mp2_cutoff, 1e-5);
        assert_eq!(cfg.threshold, 1e-5);
        assert_eq!(cfg.lrnt, 0.007);
        assert_eq!(cfg.fraction, 0.20);
        assert_eq!(cfg.alpha, 1e-10);
        assert!(cfg.gamma.is_none());
        assert_eq!(cfg.features, FeatureKind::ThetaP);
        assert!(cfg.noise.is_none());
        assert_eq!(cfg.mode, RunMode::Both);
        cfg.validate().unwrap();
    }

    #[test]
    fn json_round_trip_and_unknown_field_rejection() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.lrnt, cfg.lrnt);
        let bad: std::result::Result<RunConfig, _> =
            serde_json::from_str(r#"{"no_such_key": 1}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut cfg = RunConfig::default();
        cfg.max_rank = 1;
        assert!(cfg.validate().is_err());
        cfg.max_rank = 2;
        cfg.fraction = -0.1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn build_system_screens_and_initializes() {
        let cfg = RunConfig {
            fcidump_path: PathBuf::from(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/fixtures/h4_0.75.fcidump"
            )),
            ..RunConfig::default()
        };
        let sys = build_system(&cfg).unwrap();
        assert!(sys.pool.n_par() > 0);
        // MP2 start: at least one double is non-zero
        assert!(sys.pool.theta.iter().any(|&t| t != 0.0));
        // screening respects the cutoff on doubles
        for (op, &t) in sys.pool.operators.iter().zip(&sys.pool.theta) {
            if op.rank == 2 {
                assert!(t.abs() > cfg.mp2_cutoff);
            }
        }
    }

    #[test]
    fn missing_fcidump_reports_path() {
        let cfg = RunConfig {
            fcidump_path: PathBuf::from("/nonexistent/file.fcidump"),
            ..RunConfig::default()
        };
        let err = build_system(&cfg).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/file.fcidump"));
    }
}
