//! The seven acceptance criteria, each reported as one PASS/FAIL line.

use crate::bench::{Bench, Reference};
use crate::config::Config;
use crate::properties;
use pulselab_core::campaigns::{
    family_matrix, landscape_features, scan_landscape, shift_study, transfer_efficacy, trend_checks, Sign,
    TransferMatrix,
};
use pulselab_core::ga::GaConfig;
use pulselab_core::lab::{make_laser_system, TransferPolicy};
use pulselab_core::phase::PhaseMask;
use pulselab_core::substrate::{intensity_diagnostics, synth_tof_spectrum, Mode};
use pulselab_core::Result;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

pub const LANDSCAPE_SUBSTRATE: &str = "CH2BrCl";
pub const SECOND_TRANSFER_SUBSTRATE: &str = "CH2ICl";
pub const ANOMALY_SUBSTRATE: &str = "CHBr3";
pub const TL_J_II_TARGET: f64 = 0.15;
pub const BEST_J_II_TARGET: f64 = 1.1;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!("[{}] criterion {} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

fn within(v: f64, target: f64, rel: f64) -> bool {
    (v / target - 1.0).abs() <= rel
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// 1. TL calibration reaches 99 % of the analytic TPA optimum for 10 residual seeds per system.
pub fn calibration_fidelity(config: &Config) -> Result<CriterionResult> {
    let mut pass = true;
    let mut detail = String::new();
    for spec in config.system.values() {
        let mut worst = f64::INFINITY;
        let mut slowest = 0.0f64;
        for k in 0..10u64 {
            let mut s = spec.clone();
            s.residual_phase_seed = 1000 + 17 * k;
            let mut sys = make_laser_system(s)?;
            let t = Instant::now();
            let cal = sys.calibrate_tl(&GaConfig::calibration(sys.grid(), config.campaign.calibration_seed + k))?;
            slowest = slowest.max(secs(t.elapsed()));
            worst = worst.min(cal.tpa_ratio);
        }
        pass &= worst >= 0.99 && slowest < 30.0;
        let _ = write!(detail, "{}: min TPA ratio {:.4}, slowest {:.2}s; ", spec.name, worst, slowest);
    }
    Ok(CriterionResult { id: 1, name: "calibration fidelity", pass, detail: detail.trim_end_matches("; ").into() })
}

/// 2. CH2BrCl landscapes: origin near the minimum, two lobes, (+,+) global maximum, I/II ratio.
pub fn landscape_reproduction(bench: &Bench) -> Result<CriterionResult> {
    let sc = &bench.config.scan;
    let mut pass = true;
    let mut detail = String::new();
    let mut maxima = Vec::new();
    for sys in ["I", "II"] {
        let obj = bench.objective(sys, LANDSCAPE_SUBSTRATE, Mode::Ga)?;
        let t = Instant::now();
        let r = scan_landscape(&obj, (sc.a_min_fs2, sc.a_max_fs2), (sc.b_min_fs3, sc.b_max_fs3), sc.n_a, sc.n_b)?;
        let dt = secs(t.elapsed());
        let f = landscape_features(&r)?;
        let ok = f.origin_is_near_min
            && f.maxima.len() == 2
            && f.global_max_quadrant == (Sign::Positive, Sign::Positive)
            && dt < 120.0;
        pass &= ok;
        maxima.push(f.maxima[0].j);
        let _ = write!(
            detail,
            "{sys}: origin<=p10 {}, lobes {}, argmax (A={:.0}, B={:.0}), {:.1}s; ",
            f.origin_is_near_min,
            f.maxima.len(),
            f.maxima[0].a,
            f.maxima[0].b,
            dt
        );
    }
    let ratio = maxima[0] / maxima[1];
    pass &= (1.5..=2.5).contains(&ratio);
    let _ = write!(detail, "max J_I/J_II {ratio:.2}");
    Ok(CriterionResult { id: 2, name: "landscape reproduction", pass, detail })
}

fn masks(v: Vec<(pulselab_core::ga::OptimizationTrace, PhaseMask)>) -> Vec<PhaseMask> {
    v.into_iter().map(|(_, m)| m).collect()
}

/// 3. Copy-transfer of GA reagents I → II keeps ≥ 95 % of the native optimum.
pub fn transfer_efficacy_check(bench: &Bench) -> Result<CriterionResult> {
    let n = bench.config.campaign.reagent_count;
    let repeats = bench.config.campaign.repeats;
    let src = bench.system("I")?;
    let mut detail = String::new();
    let mut pass = true;
    for (substrate, need) in [(LANDSCAPE_SUBSTRATE, n), (SECOND_TRANSFER_SUBSTRATE, n.saturating_sub(1))] {
        let from_i = masks(bench.reagents("I", substrate, n)?);
        let native = bench.reagents("II", substrate, n)?;
        let best_native_j = native.iter().map(|(t, _)| t.best_fitness()).fold(f64::NEG_INFINITY, f64::max);
        let target = bench.objective("II", substrate, Mode::Report)?;
        let rep = transfer_efficacy(&from_i, &masks(native), src, &target, TransferPolicy::copy(), repeats)?;
        let good = rep.efficacies.iter().filter(|&&e| e >= 0.95).count();
        pass &= good >= need;
        let effs: Vec<String> = rep.efficacies.iter().map(|e| format!("{e:.3}")).collect();
        let _ = write!(detail, "{substrate}: efficacies [{}] ({good}/{n} >= 0.95); ", effs.join(", "));
        if substrate == LANDSCAPE_SUBSTRATE {
            let tl = rep.tl_baseline_j;
            let ok = within(tl, TL_J_II_TARGET, 0.3) && within(best_native_j, BEST_J_II_TARGET, 0.3);
            pass &= ok;
            let _ = write!(detail, "TL J_II {tl:.3} (target 0.15), best J_II {best_native_j:.3} (target 1.1); ");
        }
    }
    Ok(CriterionResult {
        id: 3,
        name: "transfer efficacy",
        pass,
        detail: detail.trim_end_matches("; ").into(),
    })
}

/// 4. Centre-wavelength shifting gains at most 10 % per CH2BrCl reagent.
pub fn shift_check(bench: &Bench) -> Result<CriterionResult> {
    let from_i = masks(bench.reagents("I", LANDSCAPE_SUBSTRATE, bench.config.campaign.reagent_count)?);
    let target = bench.objective("II", LANDSCAPE_SUBSTRATE, Mode::Report)?;
    let rep = shift_study(&from_i, bench.system("I")?, &target)?;
    let gains: Vec<String> = rep.entries.iter().map(|e| format!("{:+.3}", e.shift_gain)).collect();
    let pass = rep.max_gain() <= 0.10;
    Ok(CriterionResult {
        id: 4,
        name: "shift study",
        pass,
        detail: format!(
            "shift {} px (quoted {}), gains [{}], max {:+.3}",
            rep.shift_pixels,
            rep.reference_shift_pixels,
            gains.join(", "),
            rep.max_gain()
        ),
    })
}

pub struct MatrixOutcome {
    pub matrix: TransferMatrix,
    pub anomaly_rows: Vec<usize>,
    pub seconds: f64,
}

/// System I bank optimization plus the report-mode matrix on `system`.
pub fn system_matrix(bench: &Bench, system: &str) -> Result<MatrixOutcome> {
    let t = Instant::now();
    let bank = bench.family_bank_on("I", system)?;
    let matrix = family_matrix(bench.system(system)?, &bench.panel(), &bank, Mode::Report)?;
    let col = bench.substrate_index(ANOMALY_SUBSTRATE)?;
    let anomaly_rows = matrix.column_excess(col);
    Ok(MatrixOutcome { matrix, anomaly_rows, seconds: secs(t.elapsed()) })
}

/// 5. Family matrix trends on both systems and the CHBr3 anomaly on System II only.
pub fn family_matrix_check(bench: &Bench) -> Result<CriterionResult> {
    let col = bench.substrate_index(ANOMALY_SUBSTRATE)?;
    let mut pass = true;
    let mut detail = String::new();
    for sys in ["I", "II"] {
        let m = system_matrix(bench, sys)?;
        let excluded: Vec<(usize, usize)> =
            if sys == "II" { m.anomaly_rows.iter().map(|&r| (r, col)).collect() } else { Vec::new() };
        let t = trend_checks(&m.matrix, &excluded);
        let anomaly_ok = if sys == "II" { !m.anomaly_rows.is_empty() } else { m.anomaly_rows.is_empty() };
        pass &= t.trend_i_pass && t.trend_ii_pass && anomaly_ok && m.seconds < 300.0;
        let worst = t.row_fractions.iter().copied().fold(1.0, f64::min);
        let rows: Vec<&str> = m.anomaly_rows.iter().map(|&r| m.matrix.labels[r].as_str()).collect();
        let _ = write!(
            detail,
            "{sys}: rho {:.3}, min row fraction {:.2}, {} anomaly cells [{}], {:.1}s; ",
            t.spearman_rho,
            worst,
            ANOMALY_SUBSTRATE,
            rows.join(" "),
            m.seconds
        );
    }
    Ok(CriterionResult { id: 5, name: "family matrix", pass, detail: detail.trim_end_matches("; ").into() })
}

/// 6. TL CH2BrCl spectra: Cl4+ on System I only, wider Coulomb doublets on System I.
pub fn intensity_check(bench: &Bench) -> Result<CriterionResult> {
    let sub = bench.substrate(LANDSCAPE_SUBSTRATE)?;
    let mut diag = Vec::new();
    for sys in ["I", "II"] {
        let s = bench.system(sys)?;
        let f = s.shape_pulse(&PhaseMask::zero(s.grid()))?;
        let spec = synth_tof_spectrum(sub, &f, s.peak_intensity(&f));
        diag.push(intensity_diagnostics(&spec)?);
    }
    let pass = diag[0].max_charge == 4 && diag[1].max_charge <= 3 && diag[0].max_split_us > diag[1].max_split_us;
    Ok(CriterionResult {
        id: 6,
        name: "intensity diagnostics",
        pass,
        detail: format!(
            "I: max q {}, split {:.4} us; II: max q {}, split {:.4} us",
            diag[0].max_charge, diag[0].max_split_us, diag[1].max_charge, diag[1].max_split_us
        ),
    })
}

/// 7. Calibration-independent property suites.
pub fn property_suites() -> Result<CriterionResult> {
    let checks = properties::run_all()?;
    let pass = checks.iter().all(|c| c.pass);
    let detail = checks.iter().map(|c| format!("{} {}", c.name, if c.pass { "ok" } else { "FAILED" })).collect::<Vec<_>>();
    Ok(CriterionResult { id: 7, name: "property suites", pass, detail: detail.join(", ") })
}

/// Runs every criterion; criteria 2-6 share one calibrated bench.
pub fn run_all(config: &Config, mut report: impl FnMut(&CriterionResult)) -> Result<Vec<CriterionResult>> {
    let mut out = Vec::new();
    let mut push = |r: CriterionResult| {
        report(&r);
        out.push(r);
    };
    push(calibration_fidelity(config)?);
    let bench = Bench::new(config.clone(), Reference::Calibrated)?;
    push(landscape_reproduction(&bench)?);
    push(transfer_efficacy_check(&bench)?);
    push(shift_check(&bench)?);
    push(family_matrix_check(&bench)?);
    push(intensity_check(&bench)?);
    push(property_suites()?);
    Ok(out)
}
