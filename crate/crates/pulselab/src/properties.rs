//! Seeded property checks that do not depend on the registry calibration.

use crate::config::Config;
use pulselab_core::campaigns::{scan_landscape, Objective};
use pulselab_core::ga::{run_ga, GaConfig};
use pulselab_core::lab::{make_laser_system, transfer_mask, LaserSystem, LaserSystemSpec, TransferPolicy};
use pulselab_core::phase::{PhaseMask, PolynomialPhase};
use pulselab_core::substrate::{objective_j, IonSignals, Mode};
use pulselab_core::synth::tpa_signal;
use pulselab_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct PropertyCheck {
    pub name: &'static str,
    pub pass: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn ideal(spec: LaserSystemSpec) -> Result<LaserSystem> {
    let mut s = make_laser_system(spec)?;
    s.set_ideal_reference();
    Ok(s)
}

/// Random masks: half smooth polynomials, half per-pixel noise.
pub fn random_masks(sys: &LaserSystem, count: usize, seed: u64) -> Result<Vec<PhaseMask>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = sys.grid();
    (0..count)
        .map(|k| {
            if k % 2 == 0 {
                let p = PolynomialPhase::new(
                    rng.random_range(-2e4..2e4),
                    rng.random_range(-4e5..4e5),
                    rng.random_range(-4e6..4e6),
                    g.omega(rng.random_range(160..480)),
                );
                sys.polynomial_mask(&p)
            } else {
                let amp = rng.random_range(0.1..3.0);
                PhaseMask::new((0..g.pixel_count()).map(|_| rng.random_range(-amp..amp)).collect(), g.tag())
            }
        })
        .collect()
}

pub fn parseval(sys: &LaserSystem, masks: &[PhaseMask]) -> bool {
    let syn = sys.synthesizer();
    masks.iter().all(|m| {
        let spec = syn.spectrum(m.phase());
        let env = syn.envelope(&spec);
        let f: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
        let t: f64 = env.iter().map(|z| z.norm_sqr()).sum();
        rel(t, f * syn.samples() as f64) <= 1e-9
    })
}

pub fn tpa_supremacy(sys: &LaserSystem, masks: &[PhaseMask]) -> Result<bool> {
    let tl = tpa_signal(&sys.shape_pulse(&PhaseMask::zero(sys.grid()))?);
    for m in masks {
        if tpa_signal(&sys.shape_pulse(m)?) > tl * (1.0 + 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Copying masks between two systems built from one spec changes nothing.
pub fn transfer_identity(config: &Config) -> Result<bool> {
    let spec = config.system["I"].clone();
    let (a, b) = (ideal(spec.clone())?, ideal(spec)?);
    let sub = &config.registry()[0];
    let thr = 1e-3;
    let (oa, ob) = (Objective::new(&a, sub, thr, Mode::Report), Objective::new(&b, sub, thr, Mode::Report));
    for m in random_masks(&a, 10, 5)? {
        let t = transfer_mask(&m, a.grid(), b.grid(), TransferPolicy::copy())?;
        let (fa, fb) = (a.shape_pulse(&m)?, b.shape_pulse(&t)?);
        let pairs = [
            (oa.j(&m)?, ob.j(&t)?),
            (tpa_signal(&fa), tpa_signal(&fb)),
            (a.peak_intensity(&fa), b.peak_intensity(&fb)),
        ];
        if pairs.iter().any(|&(x, y)| rel(x, y) > 1e-12) {
            return Ok(false);
        }
    }
    let (la, lb) = (
        scan_landscape(&oa, (-2e4, 2e4), (-4e5, 4e5), 5, 5)?,
        scan_landscape(&ob, (-2e4, 2e4), (-4e5, 4e5), 5, 5)?,
    );
    Ok(la.j_grid.iter().flatten().zip(lb.j_grid.iter().flatten()).all(|(&x, &y)| rel(x, y) <= 1e-12))
}

/// Elitism keeps the per-generation best non-decreasing; equal seeds give equal traces.
pub fn ga_elitism_and_determinism(sys: &LaserSystem) -> Result<bool> {
    let mut cfg = GaConfig::control(sys.grid(), 99);
    cfg.generations = 15;
    cfg.population = 12;
    let f = |p: &PolynomialPhase| {
        sys.polynomial_mask(p).and_then(|m| sys.shape_pulse(&m)).map(|e| tpa_signal(&e)).unwrap_or(f64::NAN)
    };
    let (t1, t2) = (run_ga(f, &cfg)?, run_ga(f, &cfg)?);
    let monotone = t1.generations.windows(2).all(|w| w[1].best >= w[0].best);
    let same = t1.generations.len() == t2.generations.len()
        && t1.generations.iter().zip(&t2.generations).all(|(x, y)| {
            x.best.to_bits() == y.best.to_bits() && x.mean.to_bits() == y.mean.to_bits() && x.std.to_bits() == y.std.to_bits()
        })
        && t1.best == t2.best;
    Ok(monotone && same)
}

pub fn threshold_rule(samples: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).all(|_| {
        let s = IonSignals {
            s1: rng.random_range(1e-6..10.0),
            s2: rng.random_range(0.0..1.0),
            s1_coulomb_fraction: 0.0,
        };
        let thr = rng.random_range(1e-4..0.5);
        let ga = objective_j(&s, thr, Mode::Ga);
        let rep = objective_j(&s, thr, Mode::Report);
        let ga_ok = if s.s2 < thr { ga == 0.0 } else { ga == s.s1 / s.s2 && ga > 0.0 };
        ga_ok && rep > 0.0 && rep == s.s1 / s.s2.max(thr)
    })
}

pub fn run_all() -> Result<Vec<PropertyCheck>> {
    let config = Config::default_config();
    let sys = ideal(config.system["I"].clone())?;
    let masks = random_masks(&sys, 100, 1)?;
    Ok(vec![
        PropertyCheck { name: "parseval", pass: parseval(&sys, &masks) },
        PropertyCheck { name: "tpa-supremacy", pass: tpa_supremacy(&sys, &masks)? },
        PropertyCheck { name: "transfer-identity", pass: transfer_identity(&config)? },
        PropertyCheck { name: "ga-elitism-determinism", pass: ga_elitism_and_determinism(&sys)? },
        PropertyCheck { name: "threshold-rule", pass: threshold_rule(10_000, 3) },
    ])
}
