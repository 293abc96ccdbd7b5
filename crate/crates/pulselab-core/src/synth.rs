//! Spectral-to-temporal synthesis and scalar pulse metrics.
//!
//! Pixel amplitude and unwrapped phase are interpolated linearly in ω onto a
//! uniform grid centred on the centre-pixel frequency with half the smallest
//! pixel spacing, then transformed with
//! `E(t) = Σ_k S_k exp(-i x_k t)`, `x_k = ω_k − ω_c`.

use crate::error::{Error, Result};
use crate::fft::{half_rotate, Radix2};
use crate::grid::SpectralGrid;
use crate::phase::PhaseMask;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

/// Default transform length.
pub const DEFAULT_SAMPLES: usize = 8192;

/// `|E|²` unit (µJ/fs) expressed in watts.
const WATTS_PER_UJ_PER_FS: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    amplitude: Vec<f64>,
    phase: PhaseMask,
    grid: SpectralGrid,
}

impl SpectralField {
    pub fn new(amplitude: Vec<f64>, phase: PhaseMask, grid: SpectralGrid) -> Result<Self> {
        phase.check_grid(&grid)?;
        if amplitude.len() != grid.pixel_count() {
            return Err(Error::InvalidArgument("amplitude length differs from grid".to_string()));
        }
        if amplitude.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidArgument("amplitude must be finite and >= 0".to_string()));
        }
        if !amplitude.iter().any(|&a| a > 0.0) {
            return Err(Error::DegenerateSpectrum);
        }
        Ok(SpectralField { amplitude, phase, grid })
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn phase(&self) -> &PhaseMask {
        &self.phase
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }
}

/// Gaussian spectral amplitude whose amplitude FWHM in wavelength is `fwhm_nm`.
pub fn gaussian_amplitude(grid: &SpectralGrid, fwhm_nm: f64) -> Vec<f64> {
    let sigma = fwhm_nm / (2.0 * libm::sqrt(2.0 * core::f64::consts::LN_2));
    let l0 = grid.center_wavelength_nm();
    (0..grid.pixel_count())
        .map(|i| {
            let d = grid.wavelength(i) - l0;
            libm::exp(-d * d / (2.0 * sigma * sigma))
        })
        .collect()
}

/// Complex envelope on a uniform time grid. `|E|²` is in µJ/fs.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalField {
    samples: Vec<Complex64>,
    derivative: Vec<Complex64>,
    dt: f64,
    energy_uj: f64,
}

impl TemporalField {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// `dE/dt`, computed spectrally.
    pub fn derivative(&self) -> &[Complex64] {
        &self.derivative
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Energy represented by `∫|E|²dt`.
    pub fn energy_scale(&self) -> f64 {
        self.energy_uj
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        (n as f64 - (self.samples.len() / 2) as f64) * self.dt
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Same envelope with `t → −t` (complex conjugate, mirrored about sample N/2).
    pub fn time_reversed(&self) -> TemporalField {
        let n = self.samples.len();
        let mirror = |v: &[Complex64], sign: f64| -> Vec<Complex64> {
            (0..n).map(|k| v[(n - k) % n].conj() * sign).collect()
        };
        TemporalField {
            samples: mirror(&self.samples, 1.0),
            derivative: mirror(&self.derivative, -1.0),
            dt: self.dt,
            energy_uj: self.energy_uj,
        }
    }
}

/// Reusable synthesis plan for one grid and spectral amplitude.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    n: usize,
    domega: f64,
    dt: f64,
    grid_tag: String,
    pixel_count: usize,
    // uniform sample k -> (index into increasing-ω pixel order, fraction)
    interp: Vec<Option<(usize, f64)>>,
    amplitude_u: Vec<f64>,
    fft: Radix2,
}

impl Synthesizer {
    pub fn new(grid: &SpectralGrid, amplitude: &[f64], samples: usize) -> Result<Self> {
        if amplitude.len() != grid.pixel_count() {
            return Err(Error::InvalidArgument("amplitude length differs from grid".to_string()));
        }
        if !samples.is_power_of_two() || samples < 4 * grid.pixel_count() {
            return Err(Error::InvalidArgument(
                "sample count must be a power of two >= 4x pixel count".to_string(),
            ));
        }
        let np = grid.pixel_count();
        let w_inc: Vec<f64> = (0..np).map(|j| grid.omega(np - 1 - j)).collect();
        let a_inc: Vec<f64> = (0..np).map(|j| amplitude[np - 1 - j]).collect();
        let min_step = w_inc.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
        let domega = min_step / 2.0;
        let wc = grid.center_omega();
        let mut interp = vec![None; samples];
        let mut amplitude_u = vec![0.0; samples];
        let mut j = 0usize;
        for (k, slot) in interp.iter_mut().enumerate() {
            let w = wc + (k as f64 - (samples / 2) as f64) * domega;
            if w < w_inc[0] || w > w_inc[np - 1] {
                continue;
            }
            while j + 2 < np && w > w_inc[j + 1] {
                j += 1;
            }
            let f = (w - w_inc[j]) / (w_inc[j + 1] - w_inc[j]);
            *slot = Some((j, f));
            amplitude_u[k] = a_inc[j] + f * (a_inc[j + 1] - a_inc[j]);
        }
        if !amplitude_u.iter().any(|&a| a > 0.0) {
            return Err(Error::DegenerateSpectrum);
        }
        Ok(Synthesizer {
            n: samples,
            domega,
            dt: 2.0 * PI / (samples as f64 * domega),
            grid_tag: grid.tag().to_string(),
            pixel_count: np,
            interp,
            amplitude_u,
            fft: Radix2::new(samples),
        })
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn domega(&self) -> f64 {
        self.domega
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Frequency offset `x_k = ω_k − ω_c` of uniform sample `k`.
    pub fn offset(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.domega
    }

    pub fn uniform_amplitude(&self) -> &[f64] {
        &self.amplitude_u
    }

    /// Linear interpolation of per-pixel phase onto the uniform grid (0 outside the band).
    pub fn resample_phase(&self, phase: &[f64]) -> Vec<f64> {
        let np = self.pixel_count;
        self.interp
            .iter()
            .map(|s| match *s {
                Some((j, f)) => {
                    let lo = phase[np - 1 - j];
                    let hi = phase[np - 2 - j];
                    lo + f * (hi - lo)
                }
                None => 0.0,
            })
            .collect()
    }

    /// Uniform complex spectrum `S_k` for the given pixel phase.
    pub fn spectrum(&self, phase: &[f64]) -> Vec<Complex64> {
        let ph = self.resample_phase(phase);
        self.amplitude_u
            .iter()
            .zip(&ph)
            .map(|(&a, &p)| if a > 0.0 { Complex64::from_polar(a, p) } else { Complex64::new(0.0, 0.0) })
            .collect()
    }

    /// Unnormalized envelope of a uniform spectrum, sample N/2 at t = 0.
    pub fn envelope(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        half_rotate(&mut buf);
        self.fft.forward(&mut buf);
        half_rotate(&mut buf);
        buf
    }

    /// Builds a normalized field from a uniform spectrum.
    pub fn field_from_spectrum(&self, spectrum: &[Complex64], energy_uj: f64) -> Result<TemporalField> {
        if !(energy_uj.is_finite() && energy_uj > 0.0) {
            return Err(Error::InvalidArgument("pulse energy must be > 0".to_string()));
        }
        let mut e = self.envelope(spectrum);
        let ds: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(k, s)| s * Complex64::new(0.0, -self.offset(k)))
            .collect();
        let mut de = self.envelope(&ds);
        let raw = e.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt;
        if raw <= 0.0 {
            return Err(Error::DegenerateSpectrum);
        }
        let scale = libm::sqrt(energy_uj / raw);
        for z in e.iter_mut().chain(de.iter_mut()) {
            *z *= scale;
        }
        Ok(TemporalField { samples: e, derivative: de, dt: self.dt, energy_uj })
    }

    pub fn synthesize(&self, mask: &PhaseMask, energy_uj: f64) -> Result<TemporalField> {
        if mask.grid_tag() != self.grid_tag || mask.len() != self.pixel_count {
            return Err(Error::IncompatibleMask {
                left: mask.grid_tag().to_string(),
                right: self.grid_tag.clone(),
            });
        }
        self.field_from_spectrum(&self.spectrum(mask.phase()), energy_uj)
    }
}

/// One-shot synthesis with the default transform length.
pub fn synthesize_temporal(field: &SpectralField, pulse_energy_uj: f64) -> Result<TemporalField> {
    let s = Synthesizer::new(&field.grid, &field.amplitude, DEFAULT_SAMPLES)?;
    s.synthesize(&field.phase, pulse_energy_uj)
}

/// Peak intensity in TW/cm² for a focal spot of the given diameter.
pub fn peak_intensity(field: &TemporalField, spot_diameter_um: f64) -> f64 {
    let peak = field.samples.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let r_cm = spot_diameter_um * 1e-4 / 2.0;
    peak * WATTS_PER_UJ_PER_FS / (PI * r_cm * r_cm) / 1e12
}

/// `∫|E(t)|⁴ dt`.
pub fn tpa_signal(field: &TemporalField) -> f64 {
    field.samples.iter().map(|z| {
        let i = z.norm_sqr();
        i * i
    }).sum::<f64>()
        * field.dt
}

/// Full width at half maximum of `|E|²` in fs (sample-resolved, linear edge interpolation).
pub fn intensity_fwhm(field: &TemporalField) -> f64 {
    let i = field.intensity();
    let (imax, &m) = i
        .iter()
        .enumerate()
        .fold((0, &0.0), |acc, (k, v)| if *v > *acc.1 { (k, v) } else { acc });
    let h = m / 2.0;
    let mut lo = imax;
    while lo > 0 && i[lo - 1] >= h {
        lo -= 1;
    }
    let mut hi = imax;
    while hi + 1 < i.len() && i[hi + 1] >= h {
        hi += 1;
    }
    let left = if lo > 0 { lo as f64 - (i[lo] - h) / (i[lo] - i[lo - 1]) } else { 0.0 };
    let right = if hi + 1 < i.len() { hi as f64 + (i[hi] - h) / (i[hi] - i[hi + 1]) } else { hi as f64 };
    (right - left) * field.dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{eval_polynomial_phase, PolynomialPhase};

    fn sys_i() -> (SpectralGrid, Vec<f64>) {
        let g = SpectralGrid::new(640, 320, 800.0, 0.155).unwrap();
        let a = gaussian_amplitude(&g, 57.5);
        (g, a)
    }

    #[test]
    fn energy_normalization() {
        let (g, a) = sys_i();
        let s = Synthesizer::new(&g, &a, DEFAULT_SAMPLES).unwrap();
        let f = s.synthesize(&PhaseMask::zero(&g), 375.0).unwrap();
        assert!((f.energy() - 375.0).abs() < 1e-9 * 375.0);
    }

    #[test]
    fn flat_phase_peaks_at_zero_delay() {
        let (g, a) = sys_i();
        let s = Synthesizer::new(&g, &a, DEFAULT_SAMPLES).unwrap();
        let f = s.synthesize(&PhaseMask::zero(&g), 1.0).unwrap();
        let i = f.intensity();
        let imax = (0..i.len()).max_by(|&x, &y| i[x].partial_cmp(&i[y]).unwrap()).unwrap();
        assert_eq!(imax, DEFAULT_SAMPLES / 2);
    }

    #[test]
    fn chirp_lowers_peak() {
        let (g, a) = sys_i();
        let s = Synthesizer::new(&g, &a, DEFAULT_SAMPLES).unwrap();
        let flat = s.synthesize(&PhaseMask::zero(&g), 375.0).unwrap();
        let m = eval_polynomial_phase(&PolynomialPhase::new(2e4, 0.0, 0.0, g.center_omega()), &g).unwrap();
        let ch = s.synthesize(&m, 375.0).unwrap();
        assert!(peak_intensity(&ch, 40.0) < peak_intensity(&flat, 40.0));
    }

    #[test]
    fn rejects_small_transform() {
        let (g, a) = sys_i();
        assert!(Synthesizer::new(&g, &a, 1024).is_err());
        assert!(Synthesizer::new(&g, &a, 3000).is_err());
    }

    #[test]
    fn degenerate_spectrum() {
        let (g, _) = sys_i();
        let zero = vec![0.0; 640];
        assert!(matches!(
            SpectralField::new(zero, PhaseMask::zero(&g), g.clone()),
            Err(Error::DegenerateSpectrum)
        ));
    }
}
