//! Mask files and CSV artifacts.

use anyhow::{bail, Context, Result};
use pulselab_core::campaigns::{LandscapeResult, TransferMatrix};
use pulselab_core::ga::OptimizationTrace;
use pulselab_core::phase::PhaseMask;
use pulselab_core::substrate::IonSpectrum;
use std::fmt::Write as _;
use std::path::Path;

const MASK_HEADER: &str = "# grid_tag ";

/// Header line naming the grid, then one phase value (rad) per line.
pub fn mask_to_string(mask: &PhaseMask) -> String {
    let mut s = format!("{MASK_HEADER}{}\n", mask.grid_tag());
    for v in mask.phase() {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

pub fn mask_from_str(text: &str) -> Result<PhaseMask> {
    let mut lines = text.lines();
    let header = lines.next().context("empty mask file")?;
    let Some(tag) = header.strip_prefix(MASK_HEADER) else {
        bail!("mask file must start with '{MASK_HEADER}<tag>'");
    };
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| l.trim().parse::<f64>().with_context(|| format!("mask value {}", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseMask::new(values, tag.trim())?)
}

pub fn write_mask(path: &Path, mask: &PhaseMask) -> Result<()> {
    std::fs::write(path, mask_to_string(mask)).with_context(|| format!("writing {}", path.display()))
}

pub fn read_mask(path: &Path) -> Result<PhaseMask> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    mask_from_str(&text)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

pub fn write_landscape_csv(path: &Path, r: &LandscapeResult) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["A_fs2", "B_fs3", "J"])?;
    for (i, a) in r.a_values.iter().enumerate() {
        for (k, b) in r.b_values.iter().enumerate() {
            w.write_record([a.to_string(), b.to_string(), r.j_grid[i][k].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_csv(path: &Path, m: &TransferMatrix) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["reagent", "substrate", "J_tilde", "thresholded"])?;
    for (r, reagent) in m.labels.iter().enumerate() {
        for (c, substrate) in m.labels.iter().enumerate() {
            w.write_record([
                reagent.clone(),
                substrate.clone(),
                m.cells[r][c].to_string(),
                m.thresholded[r][c].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, t: &OptimizationTrace) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["generation", "best", "mean", "std"])?;
    for g in &t.generations {
        w.write_record([g.generation.to_string(), g.best.to_string(), g.mean.to_string(), g.std.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum_csv(path: &Path, s: &IonSpectrum) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["ion", "q", "flight_time_us", "amplitude", "doublet_split_us"])?;
    for p in &s.peaks {
        w.write_record([
            p.label.clone(),
            p.charge.to_string(),
            p.flight_time_us.to_string(),
            p.amplitude.to_string(),
            p.doublet_split_us.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_round_trip_is_exact() {
        let m = PhaseMask::new(vec![0.0, -1.5, std::f64::consts::PI, 1e-17], "4px@2:800nm/0.1").unwrap();
        let back = mask_from_str(&mask_to_string(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_mask_rejected() {
        assert!(mask_from_str("0.1\n0.2\n").is_err());
        assert!(mask_from_str("# grid_tag x\n0.1\nfoo\n").is_err());
    }
}
