use num_complex::Complex64;
use proptest::prelude::*;
use pulselab_core::fft::{half_rotate, Radix2};
use pulselab_core::grid::{SpectralGrid, C_NM_PER_FS};
use pulselab_core::lab::LaserSystemSpec;
use pulselab_core::phase::{compose_masks, eval_polynomial_phase, PhaseMask, PolynomialPhase};
use pulselab_core::synth::{
    gaussian_amplitude, intensity_fwhm, peak_intensity, synthesize_temporal, tpa_signal, SpectralField,
    Synthesizer, DEFAULT_SAMPLES,
};
use std::f64::consts::PI;
use std::sync::OnceLock;

fn grid_i() -> SpectralGrid {
    SpectralGrid::new(640, 320, 800.0, 0.155).unwrap()
}

fn synth_i() -> &'static (SpectralGrid, Synthesizer) {
    static S: OnceLock<(SpectralGrid, Synthesizer)> = OnceLock::new();
    S.get_or_init(|| {
        let g = grid_i();
        let a = gaussian_amplitude(&g, 57.5);
        let s = Synthesizer::new(&g, &a, DEFAULT_SAMPLES).unwrap();
        (g, s)
    })
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn poly() -> impl Strategy<Value = PolynomialPhase> {
    let g = grid_i();
    (-2e4..2e4f64, -4e5..4e5f64, -4e6..4e6f64, 160usize..480)
        .prop_map(move |(a, b, c, p)| PolynomialPhase::new(a, b, c, g.omega(p)))
}

#[test]
fn grid_examples() {
    let g = grid_i();
    assert_eq!(g.wavelength(320), 800.0);
    assert!((g.wavelength(321) - g.wavelength(320) - 0.155).abs() < 1e-12);
    let g2 = SpectralGrid::new(640, 320, 791.0, 0.179).unwrap();
    assert_eq!(g2.wavelength(320), 791.0);
    assert!(g.omegas().windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn polynomial_phase_matches_pointwise_oracle() {
    let g = grid_i();
    for (a, b) in [(2e4, 4e5), (-2e4, 4e5), (2e4, -4e5), (-2e4, -4e5)] {
        let p = PolynomialPhase::new(a, b, 0.0, g.center_omega());
        let m = eval_polynomial_phase(&p, &g).unwrap();
        for i in 0..640 {
            let lambda = 800.0 + (i as f64 - 320.0) * 0.155;
            let x = 2.0 * PI * C_NM_PER_FS / lambda - 2.0 * PI * C_NM_PER_FS / 800.0;
            let want = a * x.powi(2) + b * x.powi(3);
            assert!((m.phase()[i] - want).abs() <= 1e-9 * want.abs().max(1.0), "pixel {i}");
        }
    }
}

#[test]
fn quadratic_phase_is_even_about_center() {
    let g = grid_i();
    let m = eval_polynomial_phase(&PolynomialPhase::new(1.0, 0.0, 0.0, g.center_omega()), &g).unwrap();
    assert_eq!(m.phase()[320], 0.0);
    assert!(eval_polynomial_phase(&PolynomialPhase::flat(g.center_omega()), &g).unwrap().phase().iter().all(|&v| v == 0.0));
}

#[test]
fn radix2_matches_rustfft() {
    use rustfft::FftPlanner;
    let n = 1024;
    let x: Vec<Complex64> = (0..n).map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 1.3).cos() * 0.5)).collect();
    let mut ours = x.clone();
    Radix2::new(n).forward(&mut ours);
    let mut theirs = x.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut theirs);
    let scale = theirs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (a, b) in ours.iter().zip(&theirs) {
        assert!((a - b).norm() <= 1e-10 * scale);
    }
    let mut r = x.clone();
    half_rotate(&mut r);
    half_rotate(&mut r);
    assert_eq!(r, x);
}

/// Direct quadrature of the pixel spectrum, independent of the FFT path.
fn quadrature_fwhm(g: &SpectralGrid, amp: &[f64]) -> f64 {
    let wc = g.center_omega();
    let w = g.omegas();
    let dt = 0.02;
    let ts: Vec<f64> = (-3000..=3000).map(|k| k as f64 * dt).collect();
    let i: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let mut z = Complex64::new(0.0, 0.0);
            for p in 1..w.len() {
                let dw = w[p - 1] - w[p];
                z += Complex64::from_polar(amp[p] * dw, (w[p] - wc) * t);
            }
            z.norm_sqr()
        })
        .collect();
    let m = i.iter().copied().fold(0.0, f64::max);
    let above: Vec<f64> = ts.iter().zip(&i).filter(|(_, v)| **v >= m / 2.0).map(|(t, _)| *t).collect();
    above[above.len() - 1] - above[0]
}

#[test]
fn gaussian_tl_pulse_meets_time_bandwidth_limit() {
    for (lambda, nmpp, fwhm) in [(800.0, 0.155, 57.5), (791.0, 0.179, 51.5)] {
        let g = SpectralGrid::new(640, 320, lambda, nmpp).unwrap();
        let amp = gaussian_amplitude(&g, fwhm);
        let f = SpectralField::new(amp.clone(), PhaseMask::zero(&g), g.clone()).unwrap();
        let e = synthesize_temporal(&f, 100.0).unwrap();
        let got = intensity_fwhm(&e);
        let oracle = quadrature_fwhm(&g, &amp);
        assert!(rel(got, oracle) < 0.05, "{got} vs {oracle}");
        // untruncated Gaussian: intensity bandwidth is the amplitude FWHM over sqrt(2)
        let dnu = C_NM_PER_FS * fwhm / std::f64::consts::SQRT_2 / (lambda * lambda);
        let analytic = 2.0 * std::f64::consts::LN_2 / PI / dnu;
        assert!(got >= analytic * 0.97 && got < analytic * 1.2, "{got} vs {analytic}");
    }
}

#[test]
fn flat_phase_peak_intensity_windows() {
    for (spec, lo, hi) in [(LaserSystemSpec::system_i(), 930.0, 1270.0), (LaserSystemSpec::system_ii(), 670.0, 960.0)] {
        let g = spec.grid().unwrap();
        let s = Synthesizer::new(&g, &gaussian_amplitude(&g, spec.bandwidth_fwhm_nm), DEFAULT_SAMPLES).unwrap();
        let e = s.synthesize(&PhaseMask::zero(&g), spec.delivered_energy_uj).unwrap();
        let p = peak_intensity(&e, spec.spot_diameter_um);
        assert!((lo..=hi).contains(&p), "{} peak {p}", spec.name);
    }
}

#[test]
fn energy_scaling_is_linear() {
    let (g, s) = synth_i();
    let m = eval_polynomial_phase(&PolynomialPhase::new(3e3, 5e4, 0.0, g.center_omega()), g).unwrap();
    let a = s.synthesize(&m, 100.0).unwrap().intensity();
    let b = s.synthesize(&m, 200.0).unwrap().intensity();
    for (x, y) in a.iter().zip(&b) {
        assert!((y - 2.0 * x).abs() <= 1e-12 * y.abs().max(1e-300));
    }
}

#[test]
fn chirp_lowers_peak_and_tpa() {
    let (g, s) = synth_i();
    let tl = s.synthesize(&PhaseMask::zero(g), 375.0).unwrap();
    for a in [5e3, 2e4] {
        let c = s.synthesize(&eval_polynomial_phase(&PolynomialPhase::new(a, 0.0, 0.0, g.center_omega()), g).unwrap(), 375.0).unwrap();
        assert!(peak_intensity(&c, 40.0) < peak_intensity(&tl, 40.0));
        assert!(tpa_signal(&c) < tpa_signal(&tl));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_on_uniform_spectrum(p in poly()) {
        let (g, s) = synth_i();
        let m = eval_polynomial_phase(&p, g).unwrap();
        let spec = s.spectrum(m.phase());
        let env = s.envelope(&spec);
        let f: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
        let t: f64 = env.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!(rel(t, f * s.samples() as f64) <= 1e-9);
        let e = s.synthesize(&m, 375.0).unwrap();
        prop_assert!(rel(e.energy(), 375.0) <= 1e-9);
    }

    #[test]
    fn flat_phase_maximizes_tpa(p in poly()) {
        let (g, s) = synth_i();
        let tl = tpa_signal(&s.synthesize(&PhaseMask::zero(g), 375.0).unwrap());
        let e = s.synthesize(&eval_polynomial_phase(&p, g).unwrap(), 375.0).unwrap();
        prop_assert!(tpa_signal(&e) <= tl * (1.0 + 1e-12));
    }

    #[test]
    fn random_cubic_phase_lowers_tpa(b in prop_oneof![-4e5..-1e3f64, 1e3..4e5f64]) {
        let (g, s) = synth_i();
        let tl = tpa_signal(&s.synthesize(&PhaseMask::zero(g), 375.0).unwrap());
        let m = eval_polynomial_phase(&PolynomialPhase::new(0.0, b, 0.0, g.center_omega()), g).unwrap();
        prop_assert!(tpa_signal(&s.synthesize(&m, 375.0).unwrap()) < tl);
    }

    #[test]
    fn global_phase_offset_is_invisible(p in poly(), c in -10.0..10.0f64) {
        let (g, s) = synth_i();
        let m = eval_polynomial_phase(&p, g).unwrap();
        let a = s.synthesize(&m, 375.0).unwrap();
        let b = s.synthesize(&m.offset(c), 375.0).unwrap();
        let peak = a.intensity().iter().copied().fold(0.0, f64::max);
        for (x, y) in a.intensity().iter().zip(b.intensity()) {
            prop_assert!((x - y).abs() <= 1e-12 * peak);
        }
        prop_assert!(rel(tpa_signal(&a), tpa_signal(&b)) <= 1e-12);
    }

    #[test]
    fn negated_phase_reverses_time(p in poly()) {
        let (g, s) = synth_i();
        let m = eval_polynomial_phase(&p, g).unwrap();
        let fwd = s.synthesize(&m, 375.0).unwrap().time_reversed();
        let back = s.synthesize(&m.negated(), 375.0).unwrap();
        let peak = back.intensity().iter().copied().fold(0.0, f64::max);
        for (x, y) in fwd.intensity().iter().zip(back.intensity()) {
            prop_assert!((x - y).abs() <= 1e-9 * peak);
        }
    }

    #[test]
    fn composition_commutes_and_matches_sequential_phase(p in poly(), q in poly()) {
        let (g, s) = synth_i();
        let a = eval_polynomial_phase(&p, g).unwrap();
        let b = eval_polynomial_phase(&q, g).unwrap();
        let ab = compose_masks(&a, &b).unwrap();
        prop_assert_eq!(&ab, &compose_masks(&b, &a).unwrap());
        prop_assert_eq!(&compose_masks(&a, &PhaseMask::zero(g)).unwrap(), &a);
        let summed: Vec<f64> = a.phase().iter().zip(b.phase()).map(|(x, y)| x + y).collect();
        let direct = s.spectrum(&summed);
        let seq: Vec<Complex64> = s.spectrum(a.phase()).iter().zip(s.resample_phase(b.phase()))
            .map(|(z, ph)| z * Complex64::from_polar(1.0, ph)).collect();
        for (x, y) in direct.iter().zip(&seq) {
            prop_assert!((x - y).norm() <= 1e-9 * x.norm().max(1e-300) + 1e-12);
        }
    }
}
