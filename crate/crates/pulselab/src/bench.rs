//! A configured pair of laser systems plus the substrate registry.

use crate::config::Config;
use pulselab_core::campaigns::{s2_threshold, Objective, Panel};
use pulselab_core::ga::{GaConfig, OptimizationTrace};
use pulselab_core::lab::{make_laser_system, transfer_mask, Calibration, LaserSystem, TransferPolicy};
use pulselab_core::phase::PhaseMask;
use pulselab_core::substrate::{Mode, SubstrateSpec};
use pulselab_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Run the TPA calibration GA on each system.
    Calibrated,
    /// Use the exact negation of the residual phase.
    Ideal,
}

pub struct Bench {
    pub config: Config,
    pub systems: Vec<LaserSystem>,
    pub calibrations: Vec<Option<Calibration>>,
    pub registry: Vec<SubstrateSpec>,
    thresholds: Vec<f64>,
}

/// Seed for the `k`-th reagent; independent of system and substrate.
pub fn reagent_seed(base: u64, k: usize) -> u64 {
    base.wrapping_add(1000 * k as u64)
}

impl Bench {
    pub fn new(config: Config, reference: Reference) -> Result<Bench> {
        let mut systems = Vec::new();
        let mut calibrations = Vec::new();
        for spec in config.system.values() {
            let mut sys = make_laser_system(spec.clone())?;
            match reference {
                Reference::Ideal => {
                    sys.set_ideal_reference();
                    calibrations.push(None);
                }
                Reference::Calibrated => {
                    let cfg = GaConfig::calibration(sys.grid(), config.campaign.calibration_seed);
                    calibrations.push(Some(sys.calibrate_tl(&cfg)?));
                }
            }
            systems.push(sys);
        }
        let registry = config.registry();
        let mut bench = Bench { config, systems, calibrations, registry, thresholds: Vec::new() };
        let reference = bench.system(&bench.config.campaign.threshold_reference.clone())?;
        let thresholds = bench
            .registry
            .iter()
            .map(|s| s2_threshold(s, reference))
            .collect::<Result<Vec<_>>>()?;
        bench.thresholds = thresholds;
        Ok(bench)
    }

    pub fn system(&self, name: &str) -> Result<&LaserSystem> {
        self.systems
            .iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown system {name}")))
    }

    pub fn substrate_index(&self, name: &str) -> Result<usize> {
        self.registry.iter().position(|s| s.name == name).ok_or_else(|| Error::MissingCompound(name.to_string()))
    }

    pub fn substrate(&self, name: &str) -> Result<&SubstrateSpec> {
        Ok(&self.registry[self.substrate_index(name)?])
    }

    pub fn threshold(&self, substrate: &str) -> Result<f64> {
        Ok(self.thresholds[self.substrate_index(substrate)?])
    }

    pub fn objective(&self, system: &str, substrate: &str, mode: Mode) -> Result<Objective<'_>> {
        let i = self.substrate_index(substrate)?;
        Ok(Objective::new(self.system(system)?, &self.registry[i], self.thresholds[i], mode))
    }

    pub fn panel(&self) -> Panel<'_> {
        Panel { substrates: self.registry.iter().zip(self.thresholds.iter().copied()).collect() }
    }

    pub fn ga_config(&self, system: &str, seed: u64) -> Result<GaConfig> {
        Ok(self.config.ga.to_ga_config(self.system(system)?.grid(), seed))
    }

    /// `count` independently seeded GA optimizations of one substrate.
    pub fn reagents(&self, system: &str, substrate: &str, count: usize) -> Result<Vec<(OptimizationTrace, PhaseMask)>> {
        let obj = self.objective(system, substrate, Mode::Ga)?;
        (0..count)
            .map(|k| obj.optimize(&self.ga_config(system, reagent_seed(self.config.ga.seed, k))?))
            .collect()
    }

    /// One GA-optimized reagent per registry compound.
    pub fn family_bank(&self, system: &str) -> Result<Vec<(String, PhaseMask)>> {
        self.registry
            .iter()
            .map(|s| {
                let (_, m) = self.reagents(system, &s.name, 1)?.pop().expect("one reagent");
                Ok((s.name.clone(), m))
            })
            .collect()
    }

    /// The `source` family bank copied onto the `target` shaper.
    pub fn family_bank_on(&self, source: &str, target: &str) -> Result<Vec<(String, PhaseMask)>> {
        let (s, t) = (self.system(source)?, self.system(target)?);
        self.family_bank(source)?
            .into_iter()
            .map(|(name, m)| Ok((name, transfer_mask(&m, s.grid(), t.grid(), TransferPolicy::copy())?)))
            .collect()
    }
}
