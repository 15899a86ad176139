//! Optional TOML defaults. Every key is optional and flags override it.

use std::path::{Path, PathBuf};

use aqem_core::experiment::DeOverrides;
use aqem_core::StateKind;
use serde::Deserialize;

use crate::args::DeArgs;
use crate::failure::Failure;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub state: Option<StateKind>,
    pub seed: Option<u64>,
    pub pop: Option<usize>,
    pub weight: Option<f64>,
    pub cr: Option<f64>,
    pub gens: Option<usize>,
    pub gens_per_photon: Option<usize>,
    pub shots: Option<usize>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn de_overrides(&self, flags: &DeArgs) -> DeOverrides {
        DeOverrides {
            population: flags.pop.or(self.pop),
            weight: flags.weight.or(self.weight),
            crossover: flags.cr.or(self.cr),
            generations: flags.gens.or(self.gens),
            generations_per_photon: flags.gens_per_photon.or(self.gens_per_photon),
            shots_per_phi: flags.shots.or(self.shots),
        }
    }
}
