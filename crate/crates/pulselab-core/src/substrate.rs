//! Surrogate fragmentation model for halomethanes.
//!
//! A shaped field is reduced to a handful of descriptors: peak intensity,
//! effective duration, a time-frequency chirp index and intensity moments.
//! The two ion channels are then
//!
//! ```text
//! S2 = 1 − exp(−k2 · ∫ u^n_ion dt)
//! S1 = k1 · sat(∫ u^n_diss (1 + w (2Q − 1)) dt) · G(τ) · exp(κ c) + Coulomb(I_peak)
//! ```
//!
//! with `u = Î / 100 TW cm⁻²`, `dt` in ps, `Q(t)` the normalized cumulative
//! fluence, `G` a log-normal resonance around the preferred stretch and a
//! logistic Coulomb-explosion channel that vanishes at zero intensity.

use crate::error::{Error, Result};
use crate::synth::TemporalField;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub const INTENSITY_REF_TW_CM2: f64 = 100.0;
pub const TIME_REF_FS: f64 = 1000.0;
pub const MAX_ORDER: usize = 8;
/// Fluence at which the duration resonance sits at `preferred_stretch_fs`, J/cm².
pub const FLUENCE_REF_J_CM2: f64 = 10.0;
/// Flight time of a singly charged 1 amu ion (µs).
pub const FLIGHT_CONSTANT_US: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct IonMasses {
    pub parent: f64,
    pub s1_ion: f64,
    pub s2_ion: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SubstrateSpec {
    /// Taken from the config section key.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub name: String,
    pub family_index: u32,
    pub parent_label: String,
    /// Halogen ion in the numerator of J.
    pub s1_label: String,
    pub s2_label: String,
    pub n_ion: u32,
    pub n_diss: u32,
    pub k1: f64,
    pub k2: f64,
    /// Sublinear response of the dissociative channel, in (0, 1]; 1 is linear.
    pub s1_exponent: f64,
    pub sequencing_weight: f64,
    pub preferred_stretch_fs: f64,
    /// Width of the duration resonance in natural-log units.
    pub stretch_width: f64,
    /// Preferred stretch scales as `(F / F_ref)^exponent` with peak fluence F.
    pub stretch_fluence_exponent: f64,
    /// Signed preference for up-chirped pulses.
    pub chirp_preference: f64,
    /// Preference for strongly chirped pulses of either sign.
    pub chirp_magnitude_preference: f64,
    pub coulomb_threshold_tw_cm2: f64,
    pub coulomb_width_tw_cm2: f64,
    pub coulomb_gain: f64,
    /// S2 threshold as a fraction of the TL S2 on the reference system.
    pub threshold_fraction: f64,
    /// Appearance intensities of the halogen charge states q = 2, 3, 4.
    pub charge_state_thresholds_tw_cm2: [f64; 3],
    /// Coulomb doublet separation per √(TW/cm²), µs.
    pub doublet_coefficient_us: f64,
    pub masses_amu: IonMasses,
}

impl SubstrateSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("substrate {}: {m}", self.name)));
        if !(self.n_ion > self.n_diss && self.n_diss >= 2 && self.n_ion as usize <= MAX_ORDER) {
            return bad(format!("need {MAX_ORDER} >= n_ion > n_diss >= 2"));
        }
        if !(1..=9).contains(&self.family_index) {
            return bad("family_index must be 1..9".to_string());
        }
        let pos = [
            ("k1", self.k1),
            ("k2", self.k2),
            ("preferred_stretch_fs", self.preferred_stretch_fs),
            ("stretch_width", self.stretch_width),
            ("coulomb_width_tw_cm2", self.coulomb_width_tw_cm2),
            ("threshold_fraction", self.threshold_fraction),
        ];
        for (k, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{k} must be > 0"));
            }
        }
        let nonneg = [
            ("coulomb_gain", self.coulomb_gain),
            ("coulomb_threshold_tw_cm2", self.coulomb_threshold_tw_cm2),
            ("doublet_coefficient_us", self.doublet_coefficient_us),
        ];
        for (k, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{k} must be >= 0"));
            }
        }
        if !(self.s1_exponent > 0.0 && self.s1_exponent <= 1.0) {
            return bad("s1_exponent must lie in (0, 1]".to_string());
        }
        if !(self.sequencing_weight.abs() <= 1.0) {
            return bad("sequencing_weight must lie in [-1, 1]".to_string());
        }
        if ![self.chirp_preference, self.chirp_magnitude_preference, self.stretch_fluence_exponent].iter().all(|v| v.is_finite()) {
            return bad("chirp and fluence exponents must be finite".to_string());
        }
        let t = self.charge_state_thresholds_tw_cm2;
        if !(t[0] > 0.0 && t[0] < t[1] && t[1] < t[2]) {
            return bad("charge-state thresholds must be positive and strictly increasing".to_string());
        }
        let m = &self.masses_amu;
        if !(m.parent > 0.0 && m.s1_ion > 0.0 && m.s2_ion > 0.0) {
            return bad("masses_amu must be > 0".to_string());
        }
        Ok(())
    }
}

/// Shape descriptors of one field at a given peak intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseDescriptors {
    pub peak_intensity: f64,
    /// Effective duration `(∫I dt)² / ∫I² dt`, fs.
    pub tau_fs: f64,
    /// Peak fluence, J/cm².
    pub fluence_j_cm2: f64,
    /// Normalized covariance of time and instantaneous frequency, in [−1, 1].
    pub chirp_index: f64,
    /// `∫ u^n dt` (ps) for n = 0..=MAX_ORDER.
    pub moments: [f64; MAX_ORDER + 1],
    /// `∫ u^n · 2Q dt` (ps) for n = 0..=MAX_ORDER.
    pub late_moments: [f64; MAX_ORDER + 1],
}

impl PulseDescriptors {
    pub fn compute(field: &TemporalField, peak_intensity: f64) -> PulseDescriptors {
        let e = field.samples();
        let de = field.derivative();
        let dt = field.dt();
        let intensity: Vec<f64> = e.iter().map(|z| z.norm_sqr()).collect();
        let total: f64 = intensity.iter().sum();
        let imax = intensity.iter().copied().fold(0.0, f64::max);
        let mut d = PulseDescriptors {
            peak_intensity,
            tau_fs: 0.0,
            fluence_j_cm2: 0.0,
            chirp_index: 0.0,
            moments: [0.0; MAX_ORDER + 1],
            late_moments: [0.0; MAX_ORDER + 1],
        };
        if total <= 0.0 || imax <= 0.0 || peak_intensity <= 0.0 {
            return d;
        }
        let n = e.len();
        let t = |k: usize| (k as f64 - (n / 2) as f64) * dt;
        let tm = intensity.iter().enumerate().map(|(k, i)| i * t(k)).sum::<f64>() / total;
        let mut var_t = 0.0;
        let mut cov = 0.0;
        let mut w_mean = 0.0;
        let mut w2 = 0.0;
        let mut cum = 0.0;
        let scale = peak_intensity / imax / INTENSITY_REF_TW_CM2;
        let step = dt / TIME_REF_FS;
        for k in 0..n {
            let i = intensity[k];
            let dtk = t(k) - tm;
            var_t += i * dtk * dtk;
            let wi = -(e[k].conj() * de[k]).im;
            cov += dtk * wi;
            w_mean += wi;
            w2 += de[k].norm_sqr();
            cum += i;
            let u = i * scale;
            let q2 = 2.0 * cum / total;
            let mut p = 1.0;
            for m in 0..=MAX_ORDER {
                d.moments[m] += p * step;
                d.late_moments[m] += p * q2 * step;
                p *= u;
            }
        }
        var_t /= total;
        w_mean /= total;
        let var_w = w2 / total - w_mean * w_mean;
        let denom = libm::sqrt(var_t * var_w.max(0.0));
        d.chirp_index = if denom > 0.0 { (cov / total) / denom } else { 0.0 };
        let sq: f64 = intensity.iter().map(|i| i * i).sum();
        d.tau_fs = total * total / sq * dt;
        // TW/cm² · fs = 1e-3 J/cm²
        d.fluence_j_cm2 = peak_intensity / imax * total * dt * 1e-3;
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSignals {
    pub s1: f64,
    pub s2: f64,
    pub s1_coulomb_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Thresholded individuals score exactly zero.
    Ga,
    /// Thresholded yields are reported against the threshold value.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveResult {
    pub j: f64,
    pub j_tilde: f64,
    pub thresholded: bool,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Coulomb channel yield: logistic in intensity, shifted to vanish at zero.
pub fn coulomb_yield(spec: &SubstrateSpec, peak_intensity: f64) -> f64 {
    if peak_intensity <= 0.0 || spec.coulomb_gain == 0.0 {
        return 0.0;
    }
    let w = spec.coulomb_width_tw_cm2;
    let s0 = logistic(-spec.coulomb_threshold_tw_cm2 / w);
    let s = logistic((peak_intensity - spec.coulomb_threshold_tw_cm2) / w);
    spec.coulomb_gain * ((s - s0) / (1.0 - s0)).max(0.0)
}

/// Preferred duration at peak fluence `fluence`.
pub fn preferred_stretch(spec: &SubstrateSpec, fluence: f64) -> f64 {
    spec.preferred_stretch_fs * libm::pow(fluence / FLUENCE_REF_J_CM2, spec.stretch_fluence_exponent)
}

/// Duration resonance `exp(−ln²(τ/τ_p(F)) / 2σ²)`.
pub fn stretch_resonance(spec: &SubstrateSpec, tau_fs: f64, fluence: f64) -> f64 {
    if tau_fs <= 0.0 || fluence <= 0.0 {
        return 0.0;
    }
    let l = libm::log(tau_fs / preferred_stretch(spec, fluence));
    libm::exp(-l * l / (2.0 * spec.stretch_width * spec.stretch_width))
}

pub fn ion_signals_from_descriptors(spec: &SubstrateSpec, d: &PulseDescriptors) -> IonSignals {
    if d.peak_intensity <= 0.0 || d.moments[0] <= 0.0 {
        return IonSignals { s1: 0.0, s2: 0.0, s1_coulomb_fraction: 0.0 };
    }
    let x2 = spec.k2 * d.moments[spec.n_ion as usize];
    let s2 = -libm::expm1(-x2);
    let nd = spec.n_diss as usize;
    let w = spec.sequencing_weight;
    let x1 = (d.moments[nd] + w * (d.late_moments[nd] - d.moments[nd])).max(0.0);
    let x1 = if spec.s1_exponent == 1.0 { x1 } else { libm::pow(x1, spec.s1_exponent) };
    let direct = spec.k1
        * x1
        * stretch_resonance(spec, d.tau_fs, d.fluence_j_cm2)
        * libm::exp(spec.chirp_preference * d.chirp_index + spec.chirp_magnitude_preference * d.chirp_index.abs());
    let coulomb = coulomb_yield(spec, d.peak_intensity);
    let s1 = direct + coulomb;
    IonSignals { s1, s2, s1_coulomb_fraction: if s1 > 0.0 { coulomb / s1 } else { 0.0 } }
}

pub fn ion_signals(spec: &SubstrateSpec, field: &TemporalField, peak_intensity: f64) -> IonSignals {
    ion_signals_from_descriptors(spec, &PulseDescriptors::compute(field, peak_intensity))
}

/// Ratio objective with the S2 threshold rule.
pub fn objective_j(signals: &IonSignals, s2_threshold: f64, mode: Mode) -> f64 {
    match mode {
        Mode::Ga => {
            if signals.s2 < s2_threshold {
                0.0
            } else {
                signals.s1 / signals.s2
            }
        }
        Mode::Report => signals.s1 / signals.s2.max(s2_threshold),
    }
}

pub fn normalized_j(j: f64, j_tl: f64) -> Result<f64> {
    if !(j_tl > 0.0) {
        return Err(Error::DegenerateNormalization(j_tl));
    }
    Ok(j / j_tl)
}

pub fn evaluate_objective(
    signals: &IonSignals,
    s2_threshold: f64,
    mode: Mode,
    j_tl: f64,
) -> Result<ObjectiveResult> {
    let j = objective_j(signals, s2_threshold, mode);
    Ok(ObjectiveResult { j, j_tilde: normalized_j(j, j_tl)?, thresholded: signals.s2 < s2_threshold })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IonPeak {
    pub label: String,
    pub charge: u32,
    pub flight_time_us: f64,
    pub amplitude: f64,
    pub doublet_split_us: f64,
    pub halogen: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IonSpectrum {
    pub peaks: Vec<IonPeak>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityDiagnostics {
    pub max_charge: u32,
    pub max_split_us: f64,
}

pub fn flight_time_us(mass_amu: f64, charge: u32) -> f64 {
    FLIGHT_CONSTANT_US * libm::sqrt(mass_amu / charge as f64)
}

pub fn synth_tof_spectrum_from_signals(spec: &SubstrateSpec, signals: &IonSignals, peak_intensity: f64) -> IonSpectrum {
    let m = &spec.masses_amu;
    let split = if signals.s1_coulomb_fraction > 0.0 {
        spec.doublet_coefficient_us * libm::sqrt(peak_intensity.max(0.0))
    } else {
        0.0
    };
    let mut peaks = alloc::vec![
        IonPeak {
            label: spec.parent_label.clone(),
            charge: 1,
            flight_time_us: flight_time_us(m.parent, 1),
            amplitude: 1.0 - signals.s2,
            doublet_split_us: 0.0,
            halogen: false,
        },
        IonPeak {
            label: spec.s2_label.clone(),
            charge: 1,
            flight_time_us: flight_time_us(m.s2_ion, 1),
            amplitude: signals.s2,
            doublet_split_us: 0.0,
            halogen: false,
        },
        IonPeak {
            label: spec.s1_label.clone(),
            charge: 1,
            flight_time_us: flight_time_us(m.s1_ion, 1),
            amplitude: signals.s1,
            doublet_split_us: split,
            halogen: true,
        },
    ];
    let base = spec.s1_label.trim_end_matches('+');
    for (k, &thr) in spec.charge_state_thresholds_tw_cm2.iter().enumerate() {
        let q = k as u32 + 2;
        if peak_intensity >= thr {
            peaks.push(IonPeak {
                label: format!("{base}{q}+"),
                charge: q,
                flight_time_us: flight_time_us(m.s1_ion, q),
                amplitude: signals.s1 * signals.s1_coulomb_fraction * (1.0 - thr / peak_intensity),
                doublet_split_us: split,
                halogen: true,
            });
        }
    }
    IonSpectrum { peaks }
}

pub fn synth_tof_spectrum(spec: &SubstrateSpec, field: &TemporalField, peak_intensity: f64) -> IonSpectrum {
    let s = ion_signals(spec, field, peak_intensity);
    synth_tof_spectrum_from_signals(spec, &s, peak_intensity)
}

pub fn intensity_diagnostics(spectrum: &IonSpectrum) -> Result<IntensityDiagnostics> {
    if spectrum.peaks.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let max_charge = spectrum.peaks.iter().filter(|p| p.halogen).map(|p| p.charge).max().unwrap_or(0);
    let max_split_us = spectrum.peaks.iter().map(|p| p.doublet_split_us).fold(0.0, f64::max);
    Ok(IntensityDiagnostics { max_charge, max_split_us })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_examples() {
        let s = IonSignals { s1: 3.0, s2: 1.0, s1_coulomb_fraction: 0.0 };
        assert_eq!(objective_j(&s, 0.1, Mode::Ga), 3.0);
        let s = IonSignals { s1: 3.0, s2: 0.05, s1_coulomb_fraction: 0.0 };
        assert_eq!(objective_j(&s, 0.1, Mode::Ga), 0.0);
        assert!((objective_j(&s, 0.1, Mode::Report) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalized_j(0.15, 0.15).unwrap(), 1.0);
        assert_eq!(normalized_j(0.0, 2.0).unwrap(), 0.0);
        assert!(normalized_j(1.0, 0.0).is_err());
        assert!(normalized_j(1.0, -1.0).is_err());
    }

    #[test]
    fn empty_spectrum_diagnostics() {
        assert!(matches!(intensity_diagnostics(&IonSpectrum::default()), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn flight_time_follows_root_mass_over_charge() {
        let a = flight_time_us(35.0, 1);
        let b = flight_time_us(35.0, 4);
        assert!((a / b - 2.0).abs() < 1e-12);
    }
}
