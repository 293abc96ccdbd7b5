//! Virtual laser-plus-shaper apparatus.

use crate::error::{Error, Result};
use crate::ga::{run_ga, GaConfig, OptimizationTrace};
use crate::grid::SpectralGrid;
use crate::phase::{compose_masks, eval_polynomial_phase, PhaseMask, PolynomialPhase};
use crate::synth::{self, gaussian_amplitude, Synthesizer, TemporalField, DEFAULT_SAMPLES};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LaserSystemSpec {
    /// Taken from the config section key.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub name: String,
    pub pixel_count: usize,
    pub center_pixel: usize,
    pub center_wavelength_nm: f64,
    pub nm_per_pixel: f64,
    /// FWHM of the Gaussian spectral amplitude.
    pub bandwidth_fwhm_nm: f64,
    pub delivered_energy_uj: f64,
    pub spot_diameter_um: f64,
    pub intensity_scale: f64,
    pub residual_phase_seed: u64,
    /// Half-widths of the uniform draws for the (fs², fs³, fs⁴) residual coefficients.
    pub residual_magnitude: [f64; 3],
}

impl LaserSystemSpec {
    pub fn system_i() -> Self {
        LaserSystemSpec {
            name: "I".to_string(),
            pixel_count: 640,
            center_pixel: 320,
            center_wavelength_nm: 800.0,
            nm_per_pixel: 0.155,
            bandwidth_fwhm_nm: 57.5,
            delivered_energy_uj: 375.0,
            spot_diameter_um: 40.0,
            intensity_scale: 1.0,
            residual_phase_seed: 11,
            residual_magnitude: [0.0, 2e4, 2e5],
        }
    }

    pub fn system_ii() -> Self {
        LaserSystemSpec {
            name: "II".to_string(),
            pixel_count: 640,
            center_pixel: 320,
            center_wavelength_nm: 791.0,
            nm_per_pixel: 0.179,
            bandwidth_fwhm_nm: 51.5,
            delivered_energy_uj: 355.0,
            spot_diameter_um: 45.0,
            intensity_scale: 0.5,
            residual_phase_seed: 23,
            residual_magnitude: [0.0, 2e4, 2e5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth_fwhm_nm", self.bandwidth_fwhm_nm),
            ("delivered_energy_uj", self.delivered_energy_uj),
            ("spot_diameter_um", self.spot_diameter_um),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("system {}: {k} must be > 0", self.name)));
            }
        }
        if !(self.intensity_scale > 0.0 && self.intensity_scale <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "system {}: intensity_scale must lie in (0, 2]",
                self.name
            )));
        }
        if self.residual_magnitude.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "system {}: residual magnitudes must be >= 0",
                self.name
            )));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.pixel_count, self.center_pixel, self.center_wavelength_nm, self.nm_per_pixel)
    }
}

#[derive(Debug, Clone)]
pub struct LaserSystem {
    spec: LaserSystemSpec,
    grid: SpectralGrid,
    synth: Synthesizer,
    residual_poly: PolynomialPhase,
    residual: PhaseMask,
    tl_reference: Option<PhaseMask>,
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub reference: PhaseMask,
    /// TPA of the reference relative to the exact negation of the residual.
    pub tpa_ratio: f64,
    pub trace: OptimizationTrace,
}

pub fn make_laser_system(spec: LaserSystemSpec) -> Result<LaserSystem> {
    spec.validate()?;
    let grid = spec.grid()?;
    let amp = gaussian_amplitude(&grid, spec.bandwidth_fwhm_nm);
    let synth = Synthesizer::new(&grid, &amp, DEFAULT_SAMPLES)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.residual_phase_seed);
    let mut coef = [0.0; 3];
    for (c, m) in coef.iter_mut().zip(spec.residual_magnitude) {
        let u: f64 = rng.random();
        *c = (2.0 * u - 1.0) * m;
    }
    let residual_poly = PolynomialPhase::new(coef[0], coef[1], coef[2], grid.center_omega());
    let residual = eval_polynomial_phase(&residual_poly, &grid)?;
    Ok(LaserSystem { spec, grid, synth, residual_poly, residual, tl_reference: None })
}

impl LaserSystem {
    pub fn spec(&self) -> &LaserSystemSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn synthesizer(&self) -> &Synthesizer {
        &self.synth
    }

    pub fn residual_phase(&self) -> &PhaseMask {
        &self.residual
    }

    pub fn residual_polynomial(&self) -> PolynomialPhase {
        self.residual_poly
    }

    pub fn tl_reference(&self) -> Option<&PhaseMask> {
        self.tl_reference.as_ref()
    }

    pub fn is_calibrated(&self) -> bool {
        self.tl_reference.is_some()
    }

    pub fn set_tl_reference(&mut self, mask: PhaseMask) -> Result<()> {
        mask.check_grid(&self.grid)?;
        self.tl_reference = Some(mask);
        Ok(())
    }

    /// Uses the exact negation of the residual as reference.
    pub fn set_ideal_reference(&mut self) {
        self.tl_reference = Some(self.residual.negated());
    }

    pub fn polynomial_mask(&self, poly: &PolynomialPhase) -> Result<PhaseMask> {
        eval_polynomial_phase(poly, &self.grid)
    }

    /// Field for residual ⊕ mask, bypassing the reference (calibration mode).
    pub fn shape_uncalibrated(&self, mask: &PhaseMask) -> Result<TemporalField> {
        let total = compose_masks(&self.residual, mask)?;
        self.synth.synthesize(&total, self.spec.delivered_energy_uj)
    }

    /// Field for residual ⊕ reference ⊕ mask.
    pub fn shape_pulse(&self, mask: &PhaseMask) -> Result<TemporalField> {
        let tl = self
            .tl_reference
            .as_ref()
            .ok_or_else(|| Error::Uncalibrated(self.spec.name.clone()))?;
        mask.check_grid(&self.grid)?;
        let total = compose_masks(&compose_masks(&self.residual, tl)?, mask)?;
        self.synth.synthesize(&total, self.spec.delivered_energy_uj)
    }

    /// Peak intensity of a field shaped by this system, including its intensity scale.
    pub fn peak_intensity(&self, field: &TemporalField) -> f64 {
        synth::peak_intensity(field, self.spec.spot_diameter_um) * self.spec.intensity_scale
    }

    /// TPA reached by exactly cancelling the residual phase.
    pub fn analytic_tpa_optimum(&self) -> Result<f64> {
        Ok(synth::tpa_signal(&self.shape_uncalibrated(&self.residual.negated())?))
    }

    /// GA search for the reference that maximizes two-photon absorption.
    pub fn calibrate_tl(&mut self, config: &GaConfig) -> Result<Calibration> {
        let optimum = self.analytic_tpa_optimum()?;
        let trace = run_ga(
            |p| match self.polynomial_mask(p).and_then(|m| self.shape_uncalibrated(&m)) {
                Ok(f) => synth::tpa_signal(&f) / optimum,
                Err(_) => f64::NAN,
            },
            config,
        )?;
        let ratio = trace.best_fitness();
        if ratio < 0.99 {
            return Err(Error::CalibrationFailed { system: self.spec.name.clone(), best_ratio: ratio });
        }
        let reference = self.polynomial_mask(&trace.best.params)?;
        self.tl_reference = Some(reference.clone());
        Ok(Calibration { reference, tpa_ratio: ratio, trace })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransferPolicy {
    pub shift_pixels: i64,
    pub resample: bool,
}

impl TransferPolicy {
    pub fn copy() -> Self {
        TransferPolicy::default()
    }

    pub fn shift(pixels: i64) -> Self {
        TransferPolicy { shift_pixels: pixels, resample: false }
    }

    pub fn resample() -> Self {
        TransferPolicy { shift_pixels: 0, resample: true }
    }
}

/// Offset that moves the source centre wavelength onto the nearest target pixel.
pub fn compute_pixel_shift(source: &LaserSystemSpec, target: &LaserSystemSpec) -> Result<i64> {
    let tg = target.grid()?;
    let p = tg.nearest_pixel(source.center_wavelength_nm).ok_or_else(|| {
        Error::OutOfRange(format!(
            "{} nm is not on the grid of system {}",
            source.center_wavelength_nm, target.name
        ))
    })?;
    Ok(p as i64 - source.center_pixel as i64)
}

/// Carries a mask from one shaper to another.
///
/// Copy writes the pixel values verbatim; a shift rolls indices and leaves
/// vacated pixels at zero; resampling interpolates phase against wavelength,
/// holding the edge values outside the source band.
pub fn transfer_mask(
    mask: &PhaseMask,
    source: &SpectralGrid,
    target: &SpectralGrid,
    policy: TransferPolicy,
) -> Result<PhaseMask> {
    mask.check_grid(source)?;
    let n_t = target.pixel_count();
    if policy.resample {
        if policy.shift_pixels != 0 {
            return Err(Error::InvalidPolicy("resample cannot be combined with a shift".to_string()));
        }
        let ph = mask.phase();
        let n_s = source.pixel_count();
        let out = (0..n_t)
            .map(|j| {
                let x = source.center_pixel() as f64
                    + (target.wavelength(j) - source.center_wavelength_nm()) / source.nm_per_pixel();
                // snap to a pixel when the grids coincide up to rounding
                let r = libm::round(x);
                let x = if (x - r).abs() < 1e-9 { r } else { x };
                let x = x.max(0.0).min((n_s - 1) as f64);
                let lo = libm::floor(x) as usize;
                let hi = (lo + 1).min(n_s - 1);
                let f = x - lo as f64;
                if f == 0.0 {
                    ph[lo]
                } else {
                    ph[lo] + f * (ph[hi] - ph[lo])
                }
            })
            .collect();
        return PhaseMask::new(out, target.tag());
    }
    if mask.len() != n_t {
        return Err(Error::InvalidPolicy(format!(
            "pixel copy needs equal pixel counts ({} vs {n_t})",
            mask.len()
        )));
    }
    if policy.shift_pixels.unsigned_abs() as usize >= n_t {
        return Err(Error::InvalidPolicy(format!("|shift| {} >= pixel count", policy.shift_pixels)));
    }
    let mut out = vec![0.0; n_t];
    for (i, &v) in mask.phase().iter().enumerate() {
        let j = i as i64 + policy.shift_pixels;
        if (0..n_t as i64).contains(&j) {
            out[j as usize] = v;
        }
    }
    PhaseMask::new(out, target.tag())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_is_deterministic() {
        let a = make_laser_system(LaserSystemSpec::system_i()).unwrap();
        let b = make_laser_system(LaserSystemSpec::system_i()).unwrap();
        assert_eq!(a.residual_phase(), b.residual_phase());
    }

    #[test]
    fn zero_magnitude_gives_zero_residual() {
        let mut s = LaserSystemSpec::system_i();
        s.residual_magnitude = [0.0; 3];
        let sys = make_laser_system(s).unwrap();
        assert!(sys.residual_phase().phase().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uncalibrated_shaping_errors() {
        let sys = make_laser_system(LaserSystemSpec::system_i()).unwrap();
        let m = PhaseMask::zero(sys.grid());
        assert!(matches!(sys.shape_pulse(&m), Err(Error::Uncalibrated(_))));
    }

    #[test]
    fn pixel_shift_between_defaults() {
        let s = compute_pixel_shift(&LaserSystemSpec::system_i(), &LaserSystemSpec::system_ii()).unwrap();
        assert_eq!(s, 50);
        assert_eq!(
            compute_pixel_shift(&LaserSystemSpec::system_i(), &LaserSystemSpec::system_i()).unwrap(),
            0
        );
    }

    #[test]
    fn pixel_shift_out_of_range() {
        let mut far = LaserSystemSpec::system_i();
        far.center_wavelength_nm = 1200.0;
        assert!(matches!(
            compute_pixel_shift(&far, &LaserSystemSpec::system_ii()),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn shift_fills_vacated_pixels_with_zero() {
        let g = LaserSystemSpec::system_i().grid().unwrap();
        let m = PhaseMask::new((0..640).map(|i| i as f64 + 1.0).collect(), g.tag()).unwrap();
        let t = transfer_mask(&m, &g, &g, TransferPolicy::shift(3)).unwrap();
        assert_eq!(&t.phase()[..3], &[0.0, 0.0, 0.0]);
        assert_eq!(t.phase()[3], 1.0);
        let t = transfer_mask(&m, &g, &g, TransferPolicy::shift(-2)).unwrap();
        assert_eq!(t.phase()[0], 3.0);
        assert_eq!(&t.phase()[638..], &[0.0, 0.0]);
    }

    #[test]
    fn invalid_policies() {
        let g = LaserSystemSpec::system_i().grid().unwrap();
        let m = PhaseMask::zero(&g);
        assert!(transfer_mask(&m, &g, &g, TransferPolicy::shift(640)).is_err());
        assert!(transfer_mask(&m, &g, &g, TransferPolicy { shift_pixels: 2, resample: true }).is_err());
    }
}
