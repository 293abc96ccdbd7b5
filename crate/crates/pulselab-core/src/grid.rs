//! Pixel, wavelength and angular-frequency bookkeeping for a linear-dispersion shaper.

use crate::error::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Speed of light in nm/fs.
pub const C_NM_PER_FS: f64 = 299.792458;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    pixel_count: usize,
    center_pixel: usize,
    center_wavelength_nm: f64,
    nm_per_pixel: f64,
    omega: Vec<f64>,
    tag: String,
}

/// `ω = 2πc/λ` in rad/fs.
pub fn omega_of_wavelength(lambda_nm: f64) -> f64 {
    2.0 * PI * C_NM_PER_FS / lambda_nm
}

impl SpectralGrid {
    pub fn new(
        pixel_count: usize,
        center_pixel: usize,
        center_wavelength_nm: f64,
        nm_per_pixel: f64,
    ) -> Result<Self> {
        if pixel_count < 2 {
            return Err(Error::InvalidGrid(format!("pixel_count {pixel_count} < 2")));
        }
        if center_pixel >= pixel_count {
            return Err(Error::InvalidGrid(format!(
                "center pixel {center_pixel} outside 0..{pixel_count}"
            )));
        }
        if !(nm_per_pixel.is_finite() && nm_per_pixel > 0.0) {
            return Err(Error::InvalidGrid(format!("nm_per_pixel {nm_per_pixel} must be > 0")));
        }
        if !(center_wavelength_nm.is_finite() && center_wavelength_nm > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "center wavelength {center_wavelength_nm} must be > 0"
            )));
        }
        let first = center_wavelength_nm - center_pixel as f64 * nm_per_pixel;
        if first <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "wavelength at pixel 0 is {first} nm; grid crosses zero"
            )));
        }
        let mut g = SpectralGrid {
            pixel_count,
            center_pixel,
            center_wavelength_nm,
            nm_per_pixel,
            omega: Vec::new(),
            tag: format!("{pixel_count}px@{center_pixel}:{center_wavelength_nm}nm/{nm_per_pixel}"),
        };
        g.omega = (0..pixel_count).map(|i| omega_of_wavelength(g.wavelength(i))).collect();
        Ok(g)
    }

    pub fn pixel_count(&self) -> usize {
        self.pixel_count
    }

    pub fn center_pixel(&self) -> usize {
        self.center_pixel
    }

    pub fn center_wavelength_nm(&self) -> f64 {
        self.center_wavelength_nm
    }

    pub fn nm_per_pixel(&self) -> f64 {
        self.nm_per_pixel
    }

    /// Identifier carried by every mask sampled on this grid.
    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn wavelength(&self, i: usize) -> f64 {
        self.center_wavelength_nm + (i as f64 - self.center_pixel as f64) * self.nm_per_pixel
    }

    /// Angular frequency of pixel `i` (rad/fs); decreases with `i`.
    pub fn omega(&self, i: usize) -> f64 {
        self.omega[i]
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    pub fn center_omega(&self) -> f64 {
        self.omega[self.center_pixel]
    }

    /// Pixel whose wavelength is closest to `lambda_nm`, if it lies on the grid.
    pub fn nearest_pixel(&self, lambda_nm: f64) -> Option<usize> {
        let x = self.center_pixel as f64 + (lambda_nm - self.center_wavelength_nm) / self.nm_per_pixel;
        let p = libm::round(x);
        if p < 0.0 || p > (self.pixel_count - 1) as f64 {
            None
        } else {
            Some(p as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(SpectralGrid::new(1, 0, 800.0, 0.1).is_err());
        assert!(SpectralGrid::new(640, 320, 800.0, 0.0).is_err());
        assert!(SpectralGrid::new(640, 320, 800.0, -0.1).is_err());
        assert!(SpectralGrid::new(640, 320, 10.0, 0.155).is_err());
        assert!(SpectralGrid::new(640, 640, 800.0, 0.155).is_err());
    }

    #[test]
    fn center_and_spacing() {
        let g = SpectralGrid::new(640, 320, 800.0, 0.155).unwrap();
        assert_eq!(g.wavelength(320), 800.0);
        assert!((g.wavelength(321) - g.wavelength(320) - 0.155).abs() < 1e-12);
        let g2 = SpectralGrid::new(640, 320, 791.0, 0.179).unwrap();
        assert_eq!(g2.wavelength(320), 791.0);
        for i in 1..640 {
            assert!(g.wavelength(i) > g.wavelength(i - 1));
            assert!(g.omega(i) < g.omega(i - 1));
        }
    }

    #[test]
    fn nearest_pixel_lookup() {
        let g2 = SpectralGrid::new(640, 320, 791.0, 0.179).unwrap();
        assert_eq!(g2.nearest_pixel(800.0), Some(370));
        assert_eq!(g2.nearest_pixel(2000.0), None);
    }
}
