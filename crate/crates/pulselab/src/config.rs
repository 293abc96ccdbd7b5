//! TOML configuration: laser systems, substrate registry, GA and scan settings.

use pulselab_core::ga::GaConfig;
use pulselab_core::grid::SpectralGrid;
use pulselab_core::lab::LaserSystemSpec;
use pulselab_core::substrate::SubstrateSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

pub const DEFAULT_CONFIG: &str = include_str!("../data/default.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config schema violation: {0}")]
    Schema(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSection {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Mutation width as a fraction of each bound's span.
    pub mutation_sigma_fraction: f64,
    pub sigma_decay: f64,
    pub elite_count: usize,
    pub tournament_size: usize,
    pub blend_alpha: f64,
    pub a_bound_fs2: f64,
    pub b_bound_fs3: f64,
    pub c_bound_fs4: f64,
    /// Fraction of the pixel range, centred on the grid, available to ω0.
    pub omega0_pixel_fraction: f64,
    pub seed: u64,
}

impl GaSection {
    pub fn to_ga_config(&self, grid: &SpectralGrid, seed: u64) -> GaConfig {
        let n = grid.pixel_count() as f64;
        let half = 0.5 * self.omega0_pixel_fraction * n;
        let lo = ((n / 2.0 - half).round().max(0.0)) as usize;
        let hi = ((n / 2.0 + half).round() as usize).min(grid.pixel_count() - 1);
        // omega decreases with pixel index
        let bounds = [
            (-self.a_bound_fs2, self.a_bound_fs2),
            (-self.b_bound_fs3, self.b_bound_fs3),
            (-self.c_bound_fs4, self.c_bound_fs4),
            (grid.omega(hi), grid.omega(lo)),
        ];
        let mut sigma = [0.0; 4];
        for (s, b) in sigma.iter_mut().zip(&bounds) {
            *s = self.mutation_sigma_fraction * (b.1 - b.0);
        }
        GaConfig {
            population: self.population,
            generations: self.generations,
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            mutation_sigma: sigma,
            sigma_decay: self.sigma_decay,
            elite_count: self.elite_count,
            tournament_size: self.tournament_size,
            blend_alpha: self.blend_alpha,
            bounds,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub a_min_fs2: f64,
    pub a_max_fs2: f64,
    pub b_min_fs3: f64,
    pub b_max_fs3: f64,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    /// GA-optimized reagents per system in transfer studies.
    pub reagent_count: usize,
    pub repeats: usize,
    /// System whose TL S2 sets every substrate's threshold.
    pub threshold_reference: String,
    pub calibration_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: BTreeMap<String, LaserSystemSpec>,
    pub substrate: BTreeMap<String, SubstrateSpec>,
    pub ga: GaSection,
    pub scan: ScanSection,
    pub campaign: CampaignSection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: Config = toml::from_str(text)?;
        for (k, s) in cfg.system.iter_mut() {
            s.name = k.clone();
        }
        for (k, s) in cfg.substrate.iter_mut() {
            s.name = k.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn default_config() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped default config is valid")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |e: pulselab_core::Error| ConfigError::Invalid(e.to_string());
        for s in self.system.values() {
            s.validate().map_err(inv)?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in self.substrate.values() {
            s.validate().map_err(inv)?;
            if !seen.insert(s.family_index) {
                return Err(ConfigError::Invalid(format!("duplicate family_index {}", s.family_index)));
            }
        }
        if !self.system.contains_key(&self.campaign.threshold_reference) {
            return Err(ConfigError::Invalid(format!(
                "threshold_reference names unknown system {}",
                self.campaign.threshold_reference
            )));
        }
        if self.scan.n_a == 0 || self.scan.n_b == 0 {
            return Err(ConfigError::Invalid("scan grid must be non-empty".into()));
        }
        for s in self.system.values() {
            let grid = s.grid().map_err(inv)?;
            self.ga.to_ga_config(&grid, self.ga.seed).validate().map_err(inv)?;
        }
        Ok(())
    }

    /// Substrates sorted by family index.
    pub fn registry(&self) -> Vec<SubstrateSpec> {
        let mut v: Vec<SubstrateSpec> = self.substrate.values().cloned().collect();
        v.sort_by_key(|s| s.family_index);
        v
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}
