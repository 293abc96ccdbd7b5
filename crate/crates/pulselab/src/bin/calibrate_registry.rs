//! Fits the shipped substrate registry.
//!
//! `calibrate-registry check [CONFIG]` evaluates criteria 2-6 with an exact TL reference.
//! `calibrate-registry matrix [CONFIG]` prints the System I bank and both family matrices.
//! `calibrate-registry diag SUBSTRATE [CONFIG]` describes TL, native and transferred reagents.
//! `calibrate-registry search SEED ITERS OUT [CONFIG]` random-walks the shared shape parameters.

use anyhow::{bail, Result};
use pulselab::acceptance;
use pulselab::{Bench, Config, Reference};
use pulselab_core::lab::{compute_pixel_shift, transfer_mask, TransferPolicy};
use pulselab_core::phase::PhaseMask;
use pulselab_core::substrate::{ion_signals_from_descriptors, stretch_resonance, Mode, PulseDescriptors};
use pulselab_core::campaigns::{landscape_features, scan_landscape, shift_study, Sign};
use pulselab_core::substrate::SubstrateSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::path::Path;

fn load(arg: Option<&String>) -> Result<Config> {
    Ok(match arg {
        Some(p) => Config::load(Path::new(p))?,
        None => Config::default_config(),
    })
}

fn check(config: &Config) -> Result<bool> {
    let bench = Bench::new(config.clone(), Reference::Ideal)?;
    let mut ok = true;
    let checks: [fn(&Bench) -> pulselab_core::Result<acceptance::CriterionResult>; 5] = [
        acceptance::landscape_reproduction,
        acceptance::transfer_efficacy_check,
        acceptance::shift_check,
        acceptance::family_matrix_check,
        acceptance::intensity_check,
    ];
    for c in checks {
        let r = c(&bench)?;
        println!("{}", r.line());
        ok &= r.pass;
    }
    Ok(ok)
}

fn describe(bench: &Bench, sys: &str, substrate: &str, label: &str, m: &PhaseMask) -> Result<()> {
    let s = bench.system(sys)?;
    let sub = bench.substrate(substrate)?;
    let f = s.shape_pulse(m)?;
    let peak = s.peak_intensity(&f);
    let d = PulseDescriptors::compute(&f, peak);
    let sig = ion_signals_from_descriptors(sub, &d);
    let obj = bench.objective(sys, substrate, Mode::Report)?;
    println!(
        "{label:>10} on {sys:>2}: J {:.5} J~ {:7.3} tau {:7.1} F {:5.1} Ip {:7.1} c {:+.3} G {:.3} S1 {:.4e} S2 {:.4e} thr {:.2e} M {:.4} D/M {:.3}",
        obj.j(m)?,
        obj.j_tilde(m)?,
        d.tau_fs,
        d.fluence_j_cm2,
        peak,
        d.chirp_index,
        stretch_resonance(sub, d.tau_fs, d.fluence_j_cm2),
        sig.s1,
        sig.s2,
        obj.s2_threshold,
        d.moments[sub.n_diss as usize],
        d.late_moments[sub.n_diss as usize] / d.moments[sub.n_diss as usize]
    );
    Ok(())
}

fn matrices(config: &Config) -> Result<()> {
    let bench = Bench::new(config.clone(), Reference::Ideal)?;
    let bank = bench.family_bank("I")?;
    for (name, m) in &bank {
        describe(&bench, "I", name, name, m)?;
    }
    for sys in ["I", "II"] {
        let m = acceptance::system_matrix(&bench, sys)?;
        let col = bench.substrate_index(acceptance::ANOMALY_SUBSTRATE)?;
        let excluded: Vec<(usize, usize)> =
            if sys == "II" { m.anomaly_rows.iter().map(|&r| (r, col)).collect() } else { Vec::new() };
        let t = pulselab_core::campaigns::trend_checks(&m.matrix, &excluded);
        println!("{sys}: rho {:.3} rows {:?} anomaly {:?} {:.0}s", t.spearman_rho, t.row_fractions, m.anomaly_rows, m.seconds);
        for (r, row) in m.matrix.cells.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, v)| format!("{}{v:6.2}", if m.matrix.thresholded[r][c] { '*' } else { ' ' }))
                .collect();
            println!("{:>9} {}", m.matrix.labels[r], cells.join(""));
        }
    }
    Ok(())
}

fn diag(config: &Config, substrate: &str) -> Result<()> {
    let bench = Bench::new(config.clone(), Reference::Ideal)?;
    for sys in ["I", "II"] {
        let s = bench.system(sys)?;
        describe(&bench, sys, substrate, "TL", &PhaseMask::zero(s.grid()))?;
    }
    let mut from_i = Vec::new();
    for sys in ["I", "II"] {
        for (k, (t, m)) in bench.reagents(sys, substrate, 4)?.into_iter().enumerate() {
            let p = t.best.params;
            println!("  {sys} reagent {k}: A {:.0} B {:.0} C {:.0} w0-wc {:+.4}", p.a, p.b, p.c, p.omega0 - bench.system(sys)?.grid().center_omega());
            describe(&bench, sys, substrate, "native", &m)?;
            if sys == "I" {
                from_i.push(m);
            }
        }
    }
    let (si, sii) = (bench.system("I")?, bench.system("II")?);
    let shift = compute_pixel_shift(si.spec(), sii.spec())?;
    for m in &from_i {
        describe(&bench, "II", substrate, "copy", &transfer_mask(m, si.grid(), sii.grid(), TransferPolicy::copy())?)?;
        describe(&bench, "II", substrate, "shift", &transfer_mask(m, si.grid(), sii.grid(), TransferPolicy::shift(shift))?)?;
    }
    Ok(())
}

/// Shared shape parameters searched on the landscape substrate.
#[derive(Debug, Clone, Copy)]
struct Shape {
    log_k2: f64,
    log_s1: f64,
    ws: f64,
    log_tp: f64,
    sg: f64,
    kap: f64,
    gamma: f64,
    log_cg: f64,
}

impl Shape {
    fn of(s: &SubstrateSpec) -> Shape {
        Shape {
            log_k2: s.k2.ln(),
            log_s1: s.s1_exponent.ln(),
            ws: s.sequencing_weight,
            log_tp: s.preferred_stretch_fs.ln(),
            sg: s.stretch_width,
            kap: s.chirp_preference,
            gamma: s.stretch_fluence_exponent,
            log_cg: (s.coulomb_gain / s.k1).ln(),
        }
    }

    fn apply(&self, s: &mut SubstrateSpec) {
        s.k2 = self.log_k2.exp();
        s.s1_exponent = self.log_s1.exp().min(1.0);
        s.sequencing_weight = self.ws.clamp(-1.0, 1.0);
        s.preferred_stretch_fs = self.log_tp.exp();
        s.stretch_width = self.sg.abs().max(0.05);
        s.chirp_preference = self.kap;
        s.stretch_fluence_exponent = self.gamma;
        s.coulomb_gain = s.k1 * self.log_cg.exp();
    }

    fn perturb(&self, rng: &mut ChaCha8Rng, scale: f64) -> Shape {
        let mut n = || scale * rng.sample::<f64, _>(StandardNormal);
        Shape {
            log_k2: self.log_k2 + 1.0 * n(),
            log_s1: self.log_s1 + 0.15 * n(),
            ws: self.ws + 0.2 * n(),
            log_tp: self.log_tp + 0.2 * n(),
            sg: self.sg + 0.1 * n(),
            kap: self.kap + 0.1 * n(),
            gamma: self.gamma + 0.08 * n(),
            log_cg: self.log_cg + 0.3 * n(),
        }
    }
}

fn landscape_loss(bench: &Bench, verbose: bool) -> Result<(f64, f64)> {
    let sc = &bench.config.scan;
    let mut loss = 0.0;
    let mut maxima = Vec::new();
    for sys in ["I", "II"] {
        let obj = bench.objective(sys, acceptance::LANDSCAPE_SUBSTRATE, Mode::Ga)?;
        let r = scan_landscape(&obj, (sc.a_min_fs2, sc.a_max_fs2), (sc.b_min_fs3, sc.b_max_fs3), sc.n_a, sc.n_b)?;
        let f = landscape_features(&r)?;
        let flat: Vec<f64> = r.j_grid.iter().flatten().copied().collect();
        let pct = flat.iter().filter(|&&v| v < f.origin_value).count() as f64 / flat.len() as f64;
        loss += 5.0 * (pct - 0.05).max(0.0) + 2.0 * (f.maxima.len() as f64 - 2.0).abs();
        if f.global_max_quadrant != (Sign::Positive, Sign::Positive) {
            loss += 3.0;
        }
        if f.maxima.len() >= 2 {
            loss += 20.0 * (0.04 - (f.maxima[0].j / f.maxima[1].j - 1.0)).max(0.0);
        }
        if verbose {
            println!("  {sys}: pct {pct:.3} lobes {} top {:?}", f.maxima.len(), &f.maxima[..f.maxima.len().min(3)]);
        }
        maxima.push(f.maxima[0].j);
    }
    let ratio = maxima[0] / maxima[1];
    loss += 3.0 * ((ratio / 2.0).ln().abs() - 0.15).max(0.0);
    if verbose {
        println!("  ratio {ratio:.3}");
    }
    Ok((loss, ratio))
}

fn transfer_loss(bench: &Bench, verbose: bool) -> Result<f64> {
    let sub = acceptance::LANDSCAPE_SUBSTRATE;
    let n = bench.config.campaign.reagent_count;
    let from: Vec<PhaseMask> = bench.reagents("I", sub, n)?.into_iter().map(|x| x.1).collect();
    let native = bench.reagents("II", sub, n)?;
    let best = native.iter().map(|x| x.0.best_fitness()).fold(f64::NEG_INFINITY, f64::max);
    let obj = bench.objective("II", sub, Mode::Report)?;
    let tl = obj.tl_j()?;
    let rep = shift_study(&from, bench.system("I")?, &obj)?;
    let mut loss = 0.0;
    let mut effs = Vec::new();
    for e in &rep.entries {
        let eff = e.copy_j / best;
        effs.push(eff);
        loss += 10.0 * (0.97 - eff).max(0.0) + 5.0 * (e.shift_gain - 0.06).max(0.0);
    }
    let g = best / tl;
    loss += ((g / 7.3).ln().abs() - 0.35).max(0.0);
    if verbose {
        let gains: Vec<f64> = rep.entries.iter().map(|e| e.shift_gain).collect();
        println!("  eff {effs:.3?} gains {gains:.3?} best/TL {g:.2}");
    }
    Ok(loss)
}

fn with_shape(config: &Config, shape: &Shape) -> Config {
    let mut c = config.clone();
    for s in c.substrate.values_mut() {
        shape.apply(s);
    }
    c
}

fn search(config: &Config, seed: u64, iterations: usize, out: &Path) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Shape::of(&config.substrate[acceptance::LANDSCAPE_SUBSTRATE]);
    let eval = |shape: &Shape, best: f64, verbose: bool| -> Result<f64> {
        let c = with_shape(config, shape);
        if c.validate().is_err() {
            return Ok(f64::INFINITY);
        }
        let bench = Bench::new(c, Reference::Ideal)?;
        let (l1, _) = landscape_loss(&bench, verbose)?;
        if l1 >= best {
            return Ok(l1);
        }
        Ok(l1 + transfer_loss(&bench, verbose)?)
    };
    let mut best_shape = base;
    let mut best = eval(&base, f64::INFINITY, true)?;
    println!("start loss {best:.4} {base:?}");
    for it in 0..iterations {
        let scale = if it < iterations / 2 { 0.5 } else { 0.25 };
        let cand = best_shape.perturb(&mut rng, scale);
        let l = eval(&cand, best, false)?;
        if l < best {
            best = l;
            best_shape = cand;
            println!("it {it} loss {best:.4} {cand:?}");
            eval(&cand, f64::INFINITY, true)?;
            std::fs::write(out, with_shape(config, &best_shape).to_toml())?;
        }
    }
    println!("final loss {best:.4} {best_shape:?}");
    Ok(())
}

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("check") => {
            let ok = check(&load(args.get(1))?)?;
            std::process::exit(if ok { 0 } else { 2 });
        }
        Some("diag") => diag(&load(args.get(2))?, args.get(1).map(String::as_str).unwrap_or("CH2BrCl")),
        Some("point") => {
            let bench = Bench::new(load(args.get(4))?, Reference::Ideal)?;
            let sys = args[1].as_str();
            let (a, b): (f64, f64) = (args[2].parse()?, args[3].parse()?);
            let s = bench.system(sys)?;
            let m = s.polynomial_mask(&pulselab_core::phase::PolynomialPhase::new(a, b, 0.0, s.grid().center_omega()))?;
            describe(&bench, sys, acceptance::LANDSCAPE_SUBSTRATE, "point", &m)
        }
        Some("matrix") => matrices(&load(args.get(1))?),
        Some("eval") => {
            let bench = Bench::new(load(args.get(1))?, Reference::Ideal)?;
            let (l, _) = landscape_loss(&bench, true)?;
            let t = transfer_loss(&bench, true)?;
            println!("loss {:.4} + {:.4}", l, t);
            Ok(())
        }
        Some("search") => {
            let seed: u64 = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
            let iters: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(100);
            let out = args.get(3).cloned().unwrap_or_else(|| format!("search_{seed}.toml"));
            search(&load(args.get(4))?, seed, iters, Path::new(&out))
        }
        _ => bail!("usage: calibrate-registry check|matrix|eval [CONFIG] | diag SUBSTRATE [CONFIG] | point SYS A B [CONFIG] | search SEED ITERS OUT [CONFIG]"),
    }
}
