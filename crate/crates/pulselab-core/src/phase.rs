//! Polynomial spectral phases and per-pixel phase masks.

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

/// `A(ω−ω0)² + B(ω−ω0)³ + C(ω−ω0)⁴` with A in fs², B in fs³, C in fs⁴.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolynomialPhase {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub omega0: f64,
}

impl PolynomialPhase {
    pub fn new(a: f64, b: f64, c: f64, omega0: f64) -> Self {
        PolynomialPhase { a, b, c, omega0 }
    }

    pub fn flat(omega0: f64) -> Self {
        PolynomialPhase::new(0.0, 0.0, 0.0, omega0)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.omega0.is_finite()
    }

    pub fn at(&self, omega: f64) -> f64 {
        let x = omega - self.omega0;
        let x2 = x * x;
        self.a * x2 + self.b * x2 * x + self.c * x2 * x2
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.omega0]
    }

    pub fn from_array(p: [f64; 4]) -> Self {
        PolynomialPhase::new(p[0], p[1], p[2], p[3])
    }
}

/// Unwrapped phase in radians, one value per shaper pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    phase: Vec<f64>,
    grid_tag: String,
}

impl PhaseMask {
    pub fn new(phase: Vec<f64>, grid_tag: impl Into<String>) -> Result<Self> {
        if let Some(i) = phase.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("non-finite phase at pixel {i}")));
        }
        Ok(PhaseMask { phase, grid_tag: grid_tag.into() })
    }

    pub fn zero(grid: &SpectralGrid) -> Self {
        PhaseMask { phase: vec![0.0; grid.pixel_count()], grid_tag: grid.tag().to_string() }
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn grid_tag(&self) -> &str {
        &self.grid_tag
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    pub fn check_grid(&self, grid: &SpectralGrid) -> Result<()> {
        if self.grid_tag != grid.tag() || self.phase.len() != grid.pixel_count() {
            return Err(Error::IncompatibleMask {
                left: self.grid_tag.clone(),
                right: grid.tag().to_string(),
            });
        }
        Ok(())
    }

    pub fn compose(&self, other: &PhaseMask) -> Result<PhaseMask> {
        compose_masks(self, other)
    }

    pub fn negated(&self) -> PhaseMask {
        PhaseMask { phase: self.phase.iter().map(|v| -v).collect(), grid_tag: self.grid_tag.clone() }
    }

    pub fn offset(&self, constant: f64) -> PhaseMask {
        PhaseMask {
            phase: self.phase.iter().map(|v| v + constant).collect(),
            grid_tag: self.grid_tag.clone(),
        }
    }

    /// Values as written to an LCM, folded into `[0, 2π)`.
    pub fn wrapped(&self) -> Vec<f64> {
        self.phase
            .iter()
            .map(|v| {
                let r = libm::fmod(*v, TAU);
                let r = if r < 0.0 { r + TAU } else { r };
                if r >= TAU {
                    0.0
                } else {
                    r
                }
            })
            .collect()
    }
}

/// Samples `poly` at every pixel frequency. No wrapping.
pub fn eval_polynomial_phase(poly: &PolynomialPhase, grid: &SpectralGrid) -> Result<PhaseMask> {
    if !poly.is_finite() {
        return Err(Error::InvalidArgument("non-finite polynomial coefficient".to_string()));
    }
    let phase = grid.omegas().iter().map(|&w| poly.at(w)).collect();
    Ok(PhaseMask { phase, grid_tag: grid.tag().to_string() })
}

pub fn compose_masks(a: &PhaseMask, b: &PhaseMask) -> Result<PhaseMask> {
    if a.grid_tag != b.grid_tag || a.phase.len() != b.phase.len() {
        return Err(Error::IncompatibleMask { left: a.grid_tag.clone(), right: b.grid_tag.clone() });
    }
    let phase = a.phase.iter().zip(&b.phase).map(|(x, y)| x + y).collect();
    Ok(PhaseMask { phase, grid_tag: a.grid_tag.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(640, 320, 800.0, 0.155).unwrap()
    }

    #[test]
    fn flat_phase_is_zero() {
        let g = grid();
        let m = eval_polynomial_phase(&PolynomialPhase::flat(g.center_omega()), &g).unwrap();
        assert!(m.phase().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_quadratic_vanishes_at_center() {
        let g = grid();
        let m = eval_polynomial_phase(&PolynomialPhase::new(1.0, 0.0, 0.0, g.center_omega()), &g)
            .unwrap();
        assert_eq!(m.phase()[320], 0.0);
        let w0 = g.center_omega();
        for i in 0..640 {
            let x = g.omega(i) - w0;
            let mirrored = PolynomialPhase::new(1.0, 0.0, 0.0, w0).at(w0 - x);
            assert!((m.phase()[i] - mirrored).abs() <= 1e-15 * m.phase()[i].abs().max(1e-300));
        }
    }

    #[test]
    fn compose_rejects_foreign_grid() {
        let g = grid();
        let h = SpectralGrid::new(640, 320, 791.0, 0.179).unwrap();
        assert!(matches!(
            compose_masks(&PhaseMask::zero(&g), &PhaseMask::zero(&h)),
            Err(Error::IncompatibleMask { .. })
        ));
    }

    #[test]
    fn wrapping_stays_in_range() {
        let m = PhaseMask::new(alloc::vec![-7.0, 0.0, 6.5, 100.0], "t").unwrap();
        for v in m.wrapped() {
            assert!((0.0..TAU).contains(&v));
        }
    }

    #[test]
    fn rejects_nan() {
        assert!(PhaseMask::new(alloc::vec![0.0, f64::NAN], "t").is_err());
    }
}
