//! `pulselab` command-line front end.

use crate::acceptance;
use crate::bench::{Bench, Reference};
use crate::config::Config;
use crate::io;
use crate::manifest::RunManifest;
use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pulselab_core::campaigns::{
    family_matrix, landscape_features, scan_landscape, transfer_efficacy, trend_checks, TransferReport,
};
use pulselab_core::lab::{compute_pixel_shift, TransferPolicy};
use pulselab_core::phase::PhaseMask;
use pulselab_core::substrate::{intensity_diagnostics, synth_tof_spectrum, Mode};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ACCEPTANCE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "pulselab", version, about = "Virtual pulse-shaping laboratory for photonic-reagent transfer studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Config file; the built-in defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Skip the TPA calibration GA and null the residual phase exactly.
    #[arg(long, global = true)]
    pub ideal_reference: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Copy,
    Shift,
    Resample,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// TL reference per system.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        system: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Synthetic TOF spectrum for a system, substrate and mask.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "I")]
        system: String,
        #[arg(long, default_value = "CH2BrCl")]
        substrate: String,
        /// Mask file; the flat (TL) mask when absent.
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// (A, B) landscape CSV plus features.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "I")]
        system: String,
        #[arg(long, default_value = "CH2BrCl")]
        substrate: String,
        #[arg(long)]
        n_a: Option<usize>,
        #[arg(long)]
        n_b: Option<usize>,
    },
    /// GA on one system and substrate; writes the best mask and trace.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "I")]
        system: String,
        #[arg(long, default_value = "CH2BrCl")]
        substrate: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Efficacy of reagents optimized on one system applied to another.
    Transfer {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "I")]
        source: String,
        /// Target system.
        #[arg(long, default_value = "II")]
        system: String,
        #[arg(long, default_value = "CH2BrCl")]
        substrate: String,
        #[arg(long, value_enum, default_value = "copy")]
        policy: PolicyArg,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Reagent × substrate matrix CSV and trend report.
    Matrix {
        #[command(flatten)]
        common: Common,
        /// System the reagent bank is optimized on.
        #[arg(long, default_value = "I")]
        source: String,
        #[arg(long, default_value = "I")]
        system: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Full acceptance run.
    Demo {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<Config> {
    Ok(match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default_config(),
    })
}

fn bench(config: Config, common: &Common) -> Result<Bench> {
    let r = if common.ideal_reference { Reference::Ideal } else { Reference::Calibrated };
    Ok(Bench::new(config, r)?)
}

struct Run {
    manifest: RunManifest,
    out: PathBuf,
    started: Instant,
}

impl Run {
    fn new(name: &str, argv: &[String], config: &Config, out: &Path) -> Result<Run> {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Run {
            manifest: RunManifest::new(name, argv.to_vec(), config.digest()),
            out: out.to_path_buf(),
            started: Instant::now(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn artifact(&mut self, path: &Path) -> Result<()> {
        self.manifest.add_artifact(path)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, body)?;
        self.artifact(&p)
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.duration_s = self.started.elapsed().as_secs_f64();
        self.manifest.write(&self.out)?;
        Ok(())
    }
}

fn transfer_summary(rep: &TransferReport) -> String {
    let mut s = format!("TL baseline J {:.6}\nbest native J~ {:.4}\n", rep.tl_baseline_j, rep.best_native_j_tilde);
    for (k, (t, e)) in rep.transferred.iter().zip(&rep.efficacies).enumerate() {
        let _ = writeln!(
            s,
            "reagent {k} from {}: J~ {:.4} +/- {:.4}, efficacy {:.4}",
            t.source, t.j_tilde_mean, t.j_tilde_std, e
        );
    }
    for (k, n) in rep.native.iter().enumerate() {
        let _ = writeln!(s, "native {k} on {}: J~ {:.4} +/- {:.4}", n.source, n.j_tilde_mean, n.j_tilde_std);
    }
    s
}

fn execute(cli: Cli, argv: &[String]) -> Result<i32> {
    match cli.command {
        Command::Calibrate { common, system, seed } => {
            let mut config = load_config(&common)?;
            if let Some(s) = seed {
                config.campaign.calibration_seed = s;
            }
            if let Some(name) = &system {
                if !config.system.contains_key(name) {
                    return Err(anyhow!("unknown system {name}"));
                }
                config.system.retain(|k, _| k == name);
                config.campaign.threshold_reference = name.clone();
            }
            let mut run = Run::new("calibrate", argv, &config, &common.out)?;
            run.manifest.seeds.push(config.campaign.calibration_seed);
            let b = Bench::new(config, Reference::Calibrated)?;
            for (sys, cal) in b.systems.iter().zip(&b.calibrations) {
                let cal = cal.as_ref().expect("calibrated");
                let p = run.path(&format!("tl_reference_{}.mask", sys.name()));
                io::write_mask(&p, &cal.reference)?;
                run.artifact(&p)?;
                let p = run.path(&format!("calibration_trace_{}.csv", sys.name()));
                io::write_trace_csv(&p, &cal.trace)?;
                run.artifact(&p)?;
                println!("system {}: TPA / analytic optimum = {:.5}", sys.name(), cal.tpa_ratio);
            }
            run.finish()?;
        }
        Command::Spectrum { common, system, substrate, mask } => {
            let config = load_config(&common)?;
            let mut run = Run::new("spectrum", argv, &config, &common.out)?;
            let b = bench(config, &common)?;
            let sys = b.system(&system)?;
            let m = match &mask {
                Some(p) => io::read_mask(p)?,
                None => PhaseMask::zero(sys.grid()),
            };
            let f = sys.shape_pulse(&m)?;
            let peak = sys.peak_intensity(&f);
            let spec = synth_tof_spectrum(b.substrate(&substrate)?, &f, peak);
            let d = intensity_diagnostics(&spec)?;
            let p = run.path(&format!("tof_{system}_{substrate}.csv"));
            io::write_spectrum_csv(&p, &spec)?;
            run.artifact(&p)?;
            println!(
                "peak intensity {peak:.1} TW/cm2, max halogen charge {}, max doublet split {:.4} us",
                d.max_charge, d.max_split_us
            );
            run.finish()?;
        }
        Command::Scan { common, system, substrate, n_a, n_b } => {
            let config = load_config(&common)?;
            let sc = config.scan.clone();
            let mut run = Run::new("scan", argv, &config, &common.out)?;
            let b = bench(config, &common)?;
            let obj = b.objective(&system, &substrate, Mode::Ga)?;
            let r = scan_landscape(
                &obj,
                (sc.a_min_fs2, sc.a_max_fs2),
                (sc.b_min_fs3, sc.b_max_fs3),
                n_a.unwrap_or(sc.n_a),
                n_b.unwrap_or(sc.n_b),
            )?;
            let p = run.path(&format!("landscape_{system}_{substrate}.csv"));
            io::write_landscape_csv(&p, &r)?;
            run.artifact(&p)?;
            match landscape_features(&r) {
                Ok(f) => {
                    let mut s = format!(
                        "origin_is_near_min {}\norigin J {:.6}\nglobal_max_quadrant {:?}\nasymmetry_score {:.4}\n",
                        f.origin_is_near_min, f.origin_value, f.global_max_quadrant, f.asymmetry_score
                    );
                    for m in &f.maxima {
                        let _ = writeln!(s, "maximum A {:.1} fs2, B {:.1} fs3, J {:.6}", m.a, m.b, m.j);
                    }
                    print!("{s}");
                    run.text(&format!("features_{system}_{substrate}.txt"), &s)?;
                }
                Err(e) => println!("features unavailable: {e}"),
            }
            run.finish()?;
        }
        Command::Optimize { common, system, substrate, seed } => {
            let config = load_config(&common)?;
            let seed = seed.unwrap_or(config.ga.seed);
            let mut run = Run::new("optimize", argv, &config, &common.out)?;
            run.manifest.seeds.push(seed);
            let b = bench(config, &common)?;
            let obj = b.objective(&system, &substrate, Mode::Ga)?;
            let (trace, mask) = obj.optimize(&b.ga_config(&system, seed)?)?;
            let p = run.path(&format!("best_{system}_{substrate}.mask"));
            io::write_mask(&p, &mask)?;
            run.artifact(&p)?;
            let p = run.path(&format!("trace_{system}_{substrate}.csv"));
            io::write_trace_csv(&p, &trace)?;
            run.artifact(&p)?;
            let bp = trace.best.params;
            println!(
                "best J {:.6} at A {:.1} fs2, B {:.1} fs3, C {:.1} fs4, w0 {:.5} rad/fs ({} evaluations)",
                trace.best_fitness(),
                bp.a,
                bp.b,
                bp.c,
                bp.omega0,
                trace.evaluations
            );
            run.finish()?;
        }
        Command::Transfer { common, source, system, substrate, policy, seed } => {
            let mut config = load_config(&common)?;
            if let Some(s) = seed {
                config.ga.seed = s;
            }
            let mut run = Run::new("transfer", argv, &config, &common.out)?;
            run.manifest.seeds.push(config.ga.seed);
            let n = config.campaign.reagent_count;
            let repeats = config.campaign.repeats;
            let b = bench(config, &common)?;
            let src = b.system(&source)?;
            let tgt = b.system(&system)?;
            let policy = match policy {
                PolicyArg::Copy => TransferPolicy::copy(),
                PolicyArg::Shift => TransferPolicy::shift(compute_pixel_shift(src.spec(), tgt.spec())?),
                PolicyArg::Resample => TransferPolicy::resample(),
            };
            let from: Vec<PhaseMask> = b.reagents(&source, &substrate, n)?.into_iter().map(|x| x.1).collect();
            let native: Vec<PhaseMask> = b.reagents(&system, &substrate, n)?.into_iter().map(|x| x.1).collect();
            let obj = b.objective(&system, &substrate, Mode::Report)?;
            let rep = transfer_efficacy(&from, &native, src, &obj, policy, repeats)?;
            let s = transfer_summary(&rep);
            print!("{s}");
            run.text(&format!("transfer_{source}_to_{system}_{substrate}.txt"), &s)?;
            run.finish()?;
        }
        Command::Matrix { common, source, system, seed } => {
            let mut config = load_config(&common)?;
            if let Some(s) = seed {
                config.ga.seed = s;
            }
            let mut run = Run::new("matrix", argv, &config, &common.out)?;
            run.manifest.seeds.push(config.ga.seed);
            let b = bench(config, &common)?;
            let bank = b.family_bank_on(&source, &system)?;
            for (name, m) in &bank {
                let p = run.path(&format!("reagent_{source}_{name}.mask"));
                io::write_mask(&p, m)?;
                run.artifact(&p)?;
            }
            let m = family_matrix(b.system(&system)?, &b.panel(), &bank, Mode::Report)?;
            let col = b.substrate_index(acceptance::ANOMALY_SUBSTRATE)?;
            let anomaly = m.column_excess(col);
            let excluded: Vec<(usize, usize)> = anomaly.iter().map(|&r| (r, col)).collect();
            let t = trend_checks(&m, &excluded);
            let p = run.path(&format!("matrix_{system}.csv"));
            io::write_matrix_csv(&p, &m)?;
            run.artifact(&p)?;
            let mut s = format!(
                "trend (i) spearman rho {:.3}: {}\n",
                t.spearman_rho,
                if t.trend_i_pass { "PASS" } else { "FAIL" }
            );
            for (label, f) in m.labels.iter().zip(&t.row_fractions) {
                let _ = writeln!(s, "trend (ii) row {label}: {f:.2}");
            }
            let _ = writeln!(s, "trend (ii): {}", if t.trend_ii_pass { "PASS" } else { "FAIL" });
            let rows: Vec<&str> = anomaly.iter().map(|&r| m.labels[r].as_str()).collect();
            let _ = writeln!(s, "cells above the {} diagonal: [{}]", acceptance::ANOMALY_SUBSTRATE, rows.join(", "));
            print!("{s}");
            run.text(&format!("trends_{system}.txt"), &s)?;
            run.finish()?;
        }
        Command::Demo { common } => {
            let config = load_config(&common)?;
            let mut run = Run::new("demo", argv, &config, &common.out)?;
            run.manifest.seeds.extend([config.ga.seed, config.campaign.calibration_seed]);
            let results = acceptance::run_all(&config, |r| println!("{}", r.line()))?;
            let body: String = results.iter().map(|r| r.line() + "\n").collect();
            run.text("acceptance.txt", &body)?;
            run.finish()?;
            if results.iter().any(|r| !r.pass) {
                return Ok(EXIT_ACCEPTANCE);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let text: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, &text) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}
