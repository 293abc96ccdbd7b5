//! Landscape scans, transfer studies and the reagent × substrate matrix.

use crate::error::{Error, Result};
use crate::ga::{best_mask, run_ga, GaConfig, OptimizationTrace};
use crate::lab::{compute_pixel_shift, transfer_mask, LaserSystem, TransferPolicy};
use crate::phase::{PhaseMask, PolynomialPhase};
use crate::stats;
use crate::substrate::{
    ion_signals, normalized_j, objective_j, IonSignals, Mode, SubstrateSpec,
};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

/// Shift quoted for the original alignment (pixel 320 → 362).
pub const REFERENCE_SHIFT_PIXELS: i64 = 42;

/// S2 threshold: a fraction of the substrate's TL S2 on the reference system.
pub fn s2_threshold(substrate: &SubstrateSpec, reference: &LaserSystem) -> Result<f64> {
    let field = reference.shape_pulse(&PhaseMask::zero(reference.grid()))?;
    let s = ion_signals(substrate, &field, reference.peak_intensity(&field));
    Ok(substrate.threshold_fraction * s.s2)
}

/// One substrate observed on one calibrated system.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub system: &'a LaserSystem,
    pub substrate: &'a SubstrateSpec,
    pub s2_threshold: f64,
    pub mode: Mode,
}

impl<'a> Objective<'a> {
    pub fn new(system: &'a LaserSystem, substrate: &'a SubstrateSpec, s2_threshold: f64, mode: Mode) -> Self {
        Objective { system, substrate, s2_threshold, mode }
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Objective { mode, ..*self }
    }

    pub fn signals(&self, mask: &PhaseMask) -> Result<IonSignals> {
        let f = self.system.shape_pulse(mask)?;
        Ok(ion_signals(self.substrate, &f, self.system.peak_intensity(&f)))
    }

    pub fn j(&self, mask: &PhaseMask) -> Result<f64> {
        Ok(objective_j(&self.signals(mask)?, self.s2_threshold, self.mode))
    }

    pub fn j_poly(&self, poly: &PolynomialPhase) -> Result<f64> {
        self.j(&self.system.polynomial_mask(poly)?)
    }

    /// Report-mode yield of the TL pulse (the normalization baseline).
    pub fn tl_j(&self) -> Result<f64> {
        let s = self.signals(&PhaseMask::zero(self.system.grid()))?;
        Ok(objective_j(&s, self.s2_threshold, Mode::Report))
    }

    pub fn j_tilde(&self, mask: &PhaseMask) -> Result<f64> {
        normalized_j(self.j(mask)?, self.tl_j()?)
    }

    /// GA search in GA mode; returns the trace and the best mask.
    pub fn optimize(&self, config: &GaConfig) -> Result<(OptimizationTrace, PhaseMask)> {
        let ga = self.with_mode(Mode::Ga);
        let trace = run_ga(|p| ga.j_poly(p).unwrap_or(f64::NAN), config)?;
        let mask = best_mask(&trace, self.system.grid())?;
        Ok((trace, mask))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeResult {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    /// `j_grid[i][k]` is J at `(a_values[i], b_values[k])`.
    pub j_grid: Vec<Vec<f64>>,
    pub system: String,
    pub substrate: String,
}

pub fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (range.0 + range.1)],
        _ => (0..n).map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// J over an (A, B) grid with C = 0 and ω0 at the centre pixel.
pub fn scan_landscape(
    objective: &Objective,
    a_range: (f64, f64),
    b_range: (f64, f64),
    n_a: usize,
    n_b: usize,
) -> Result<LandscapeResult> {
    if n_a == 0 || n_b == 0 {
        return Err(Error::InvalidArgument("landscape needs at least one point per axis".to_string()));
    }
    let a_values = linspace(a_range, n_a);
    let b_values = linspace(b_range, n_b);
    let w0 = objective.system.grid().center_omega();
    let mut j_grid = Vec::with_capacity(n_a);
    for &a in &a_values {
        let row = b_values
            .iter()
            .map(|&b| objective.j_poly(&PolynomialPhase::new(a, b, 0.0, w0)))
            .collect::<Result<Vec<f64>>>()?;
        j_grid.push(row);
    }
    Ok(LandscapeResult {
        a_values,
        b_values,
        j_grid,
        system: objective.system.name().to_string(),
        substrate: objective.substrate.name.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeMaximum {
    pub a: f64,
    pub b: f64,
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeFeatures {
    pub origin_is_near_min: bool,
    pub origin_value: f64,
    pub tenth_percentile: f64,
    /// One entry per 4-connected component of the 90 % superlevel set, best first.
    pub maxima: Vec<LandscapeMaximum>,
    pub global_max_quadrant: (Sign, Sign),
    pub asymmetry_score: f64,
}

fn nearest_index(v: &[f64], x: f64) -> usize {
    (0..v.len()).fold(0, |acc, i| if (v[i] - x).abs() < (v[acc] - x).abs() { i } else { acc })
}

/// Labels 4-connected components of `mask`; returns labels (0 = background) and count.
pub fn label_components(mask: &[Vec<bool>]) -> (Vec<Vec<usize>>, usize) {
    let rows = mask.len();
    let cols = if rows > 0 { mask[0].len() } else { 0 };
    let mut label = vec![vec![0usize; cols]; rows];
    let mut count = 0;
    let mut stack = Vec::new();
    for i in 0..rows {
        for k in 0..cols {
            if !mask[i][k] || label[i][k] != 0 {
                continue;
            }
            count += 1;
            label[i][k] = count;
            stack.push((i, k));
            while let Some((r, c)) = stack.pop() {
                let mut visit = |rr: usize, cc: usize| {
                    if mask[rr][cc] && label[rr][cc] == 0 {
                        label[rr][cc] = count;
                        stack.push((rr, cc));
                    }
                };
                if r > 0 {
                    visit(r - 1, c);
                }
                if r + 1 < rows {
                    visit(r + 1, c);
                }
                if c > 0 {
                    visit(r, c - 1);
                }
                if c + 1 < cols {
                    visit(r, c + 1);
                }
            }
        }
    }
    (label, count)
}

pub fn landscape_features(result: &LandscapeResult) -> Result<LandscapeFeatures> {
    let g = &result.j_grid;
    let flat: Vec<f64> = g.iter().flatten().copied().collect();
    let max = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = flat.iter().copied().fold(f64::INFINITY, f64::min);
    if flat.is_empty() || !(max > min) {
        return Err(Error::DegenerateLandscape);
    }
    let (ia, ib) = (nearest_index(&result.a_values, 0.0), nearest_index(&result.b_values, 0.0));
    let origin_value = g[ia][ib];
    let tenth_percentile = stats::percentile(&flat, 10.0);

    let sup: Vec<Vec<bool>> = g.iter().map(|row| row.iter().map(|&v| v >= 0.9 * max).collect()).collect();
    let (labels, count) = label_components(&sup);
    let mut maxima = vec![LandscapeMaximum { a: 0.0, b: 0.0, j: f64::NEG_INFINITY }; count];
    for (i, row) in g.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let l = labels[i][k];
            if l > 0 && v > maxima[l - 1].j {
                maxima[l - 1] = LandscapeMaximum { a: result.a_values[i], b: result.b_values[k], j: v };
            }
        }
    }
    maxima.sort_by(|x, y| y.j.total_cmp(&x.j));
    let top = maxima[0];

    let mut asym = 0.0f64;
    for (i, row) in g.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let mi = nearest_index(&result.a_values, -result.a_values[i]);
            let mk = nearest_index(&result.b_values, -result.b_values[k]);
            asym = asym.max((v - g[mi][mk]).abs());
        }
    }
    Ok(LandscapeFeatures {
        origin_is_near_min: origin_value <= tenth_percentile,
        origin_value,
        tenth_percentile,
        maxima,
        global_max_quadrant: (Sign::of(top.a), Sign::of(top.b)),
        asymmetry_score: asym / max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReagentStat {
    pub source: String,
    pub j_tilde_mean: f64,
    pub j_tilde_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub transferred: Vec<ReagentStat>,
    pub native: Vec<ReagentStat>,
    pub tl_baseline_j: f64,
    pub best_native_j_tilde: f64,
    /// Transferred J̃ over the best native J̃, per transferred reagent.
    pub efficacies: Vec<f64>,
}

fn repeated_stat(target: &Objective, mask: &PhaseMask, repeats: usize, tl: f64, source: &str) -> Result<ReagentStat> {
    let v = (0..repeats)
        .map(|_| target.j(mask).and_then(|j| normalized_j(j, tl)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ReagentStat { source: source.to_string(), j_tilde_mean: stats::mean(&v), j_tilde_std: stats::std_dev(&v) })
}

/// Relative efficacy of masks carried from `source` onto the target objective's system.
pub fn transfer_efficacy(
    reagents_src: &[PhaseMask],
    reagents_native: &[PhaseMask],
    source: &LaserSystem,
    target: &Objective,
    policy: TransferPolicy,
    repeats: usize,
) -> Result<TransferReport> {
    if reagents_src.is_empty() || reagents_native.is_empty() {
        return Err(Error::InvalidArgument("transfer needs at least one reagent per side".to_string()));
    }
    if repeats < 2 {
        return Err(Error::InvalidArgument("repeats must be >= 2".to_string()));
    }
    let tl = target.tl_j()?;
    let tgrid = target.system.grid();
    let mut transferred = Vec::new();
    for m in reagents_src {
        let t = transfer_mask(m, source.grid(), tgrid, policy)?;
        transferred.push(repeated_stat(target, &t, repeats, tl, source.name())?);
    }
    let native = reagents_native
        .iter()
        .map(|m| repeated_stat(target, m, repeats, tl, target.system.name()))
        .collect::<Result<Vec<_>>>()?;
    let best = native.iter().map(|s| s.j_tilde_mean).fold(f64::NEG_INFINITY, f64::max);
    let efficacies = transferred.iter().map(|s| if best > 0.0 { s.j_tilde_mean / best } else { 0.0 }).collect();
    Ok(TransferReport { transferred, native, tl_baseline_j: tl, best_native_j_tilde: best, efficacies })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftEntry {
    pub copy_j: f64,
    pub shifted_j: f64,
    pub resampled_j: f64,
    /// `shifted_j / copy_j − 1`.
    pub shift_gain: f64,
    pub resample_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    pub shift_pixels: i64,
    pub reference_shift_pixels: i64,
    pub entries: Vec<ShiftEntry>,
}

impl ShiftReport {
    pub fn max_gain(&self) -> f64 {
        self.entries.iter().map(|e| e.shift_gain).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn gain(new: f64, old: f64) -> f64 {
    if old > 0.0 {
        new / old - 1.0
    } else if new > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Default copy versus centre-wavelength-aligned transfer, per reagent.
pub fn shift_study(reagents: &[PhaseMask], source: &LaserSystem, target: &Objective) -> Result<ShiftReport> {
    let shift = compute_pixel_shift(source.spec(), target.system.spec())?;
    let (sg, tg) = (source.grid(), target.system.grid());
    let mut entries = Vec::with_capacity(reagents.len());
    for m in reagents {
        let copy_j = target.j(&transfer_mask(m, sg, tg, TransferPolicy::copy())?)?;
        let shifted_j = target.j(&transfer_mask(m, sg, tg, TransferPolicy::shift(shift))?)?;
        let resampled_j = target.j(&transfer_mask(m, sg, tg, TransferPolicy::resample())?)?;
        entries.push(ShiftEntry {
            copy_j,
            shifted_j,
            resampled_j,
            shift_gain: gain(shifted_j, copy_j),
            resample_gain: gain(resampled_j, copy_j),
        });
    }
    Ok(ShiftReport { shift_pixels: shift, reference_shift_pixels: REFERENCE_SHIFT_PIXELS, entries })
}

/// J̃ for every (reagent, substrate) pair; rows are reagents, columns substrates.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub system: String,
    pub labels: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    pub thresholded: Vec<Vec<bool>>,
}

impl TransferMatrix {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.labels.len()).map(|i| self.cells[i][i]).collect()
    }

    /// Rows whose entry in `column` exceeds that column's diagonal.
    pub fn column_excess(&self, column: usize) -> Vec<usize> {
        let d = self.cells[column][column];
        (0..self.labels.len()).filter(|&r| r != column && self.cells[r][column] > d).collect()
    }
}

/// Substrates with their S2 thresholds, in family order.
#[derive(Debug, Clone)]
pub struct Panel<'a> {
    pub substrates: Vec<(&'a SubstrateSpec, f64)>,
}

impl<'a> Panel<'a> {
    pub fn new(registry: &'a [SubstrateSpec], reference: &LaserSystem) -> Result<Self> {
        let mut substrates = registry
            .iter()
            .map(|s| s2_threshold(s, reference).map(|t| (s, t)))
            .collect::<Result<Vec<_>>>()?;
        substrates.sort_by_key(|(s, _)| s.family_index);
        Ok(Panel { substrates })
    }
}

pub fn family_matrix(
    system: &LaserSystem,
    panel: &Panel,
    reagent_bank: &[(String, PhaseMask)],
    mode: Mode,
) -> Result<TransferMatrix> {
    let labels: Vec<String> = panel.substrates.iter().map(|(s, _)| s.name.clone()).collect();
    let n = labels.len();
    let mut reagents = Vec::with_capacity(n);
    for l in &labels {
        let m = reagent_bank
            .iter()
            .find(|(k, _)| k == l)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::MissingCompound(l.clone()))?;
        reagents.push(m);
    }
    let mut cells = vec![vec![0.0; n]; n];
    let mut thresholded = vec![vec![false; n]; n];
    for (col, &(sub, thr)) in panel.substrates.iter().enumerate() {
        let obj = Objective::new(system, sub, thr, mode);
        let tl = obj.tl_j()?;
        for (row, m) in reagents.iter().enumerate() {
            let s = obj.signals(m)?;
            cells[row][col] = normalized_j(objective_j(&s, thr, mode), tl)?;
            thresholded[row][col] = s.s2 < thr;
        }
    }
    Ok(TransferMatrix { system: system.name().to_string(), labels, cells, thresholded })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub spearman_rho: f64,
    pub row_fractions: Vec<f64>,
    pub trend_i_pass: bool,
    pub trend_ii_pass: bool,
}

/// Fraction of adjacent steps away from the diagonal that do not increase.
/// Steps touching an excluded cell are skipped.
pub fn row_trend_fraction(row: &[f64], diag: usize, excluded: &[usize]) -> f64 {
    let skip = |k: usize| excluded.contains(&k);
    let mut good = 0usize;
    let mut total = 0usize;
    for j in diag + 1..row.len() {
        if skip(j) || skip(j - 1) {
            continue;
        }
        total += 1;
        good += (row[j] <= row[j - 1]) as usize;
    }
    for j in (0..diag).rev() {
        if skip(j) || skip(j + 1) {
            continue;
        }
        total += 1;
        good += (row[j] <= row[j + 1]) as usize;
    }
    if total == 0 {
        1.0
    } else {
        good as f64 / total as f64
    }
}

/// Trend (i): diagonal rank correlation with family order, ρ ≥ 0.8.
/// Trend (ii): every row ≥ 0.75 non-increasing away from the diagonal.
pub fn trend_checks(matrix: &TransferMatrix, excluded: &[(usize, usize)]) -> TrendReport {
    let n = matrix.labels.len();
    let order: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let rho = stats::spearman(&order, &matrix.diagonal());
    let row_fractions: Vec<f64> = (0..n)
        .map(|r| {
            let ex: Vec<usize> = excluded.iter().filter(|(i, _)| *i == r).map(|(_, k)| *k).collect();
            row_trend_fraction(&matrix.cells[r], r, &ex)
        })
        .collect();
    TrendReport {
        spearman_rho: rho,
        trend_i_pass: rho >= 0.8,
        trend_ii_pass: row_fractions.iter().all(|&f| f >= 0.75),
        row_fractions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_result(f: impl Fn(f64, f64) -> f64, n: usize) -> LandscapeResult {
        let a = linspace((-1.0, 1.0), n);
        let b = linspace((-1.0, 1.0), n);
        let j_grid = a.iter().map(|&x| b.iter().map(|&y| f(x, y)).collect()).collect();
        LandscapeResult { a_values: a, b_values: b, j_grid, system: "t".into(), substrate: "t".into() }
    }

    #[test]
    fn symmetric_grid_has_zero_asymmetry() {
        let f = landscape_features(&grid_result(|a, b| a * a + b * b, 21)).unwrap();
        assert!(f.asymmetry_score < 1e-12);
        assert!(f.origin_is_near_min);
    }

    #[test]
    fn single_peak_single_component() {
        let f = landscape_features(&grid_result(|a, b| libm::exp(-(a - 0.3) * (a - 0.3) - b * b), 21)).unwrap();
        assert_eq!(f.maxima.len(), 1);
        assert_eq!(f.global_max_quadrant, (Sign::Positive, Sign::Zero));
    }

    #[test]
    fn two_peaks_two_components() {
        let bump = |a: f64, b: f64, x: f64, y: f64| libm::exp(-((a - x) * (a - x) + (b - y) * (b - y)) / 0.02);
        let f = landscape_features(&grid_result(|a, b| bump(a, b, 0.5, 0.5) + 0.95 * bump(a, b, -0.5, 0.5), 41))
            .unwrap();
        assert_eq!(f.maxima.len(), 2);
        assert_eq!(f.global_max_quadrant, (Sign::Positive, Sign::Positive));
    }

    #[test]
    fn constant_grid_is_degenerate() {
        assert!(matches!(landscape_features(&grid_result(|_, _| 1.0, 5)), Err(Error::DegenerateLandscape)));
    }

    #[test]
    fn diagonal_dominant_rows_score_one() {
        let n = 6;
        let cells: Vec<Vec<f64>> = (0..n)
            .map(|r| (0..n).map(|c| 10.0 - (r as f64 - c as f64).abs()).collect())
            .collect();
        let m = TransferMatrix {
            system: "t".into(),
            labels: (0..n).map(|i| alloc::format!("s{i}")).collect(),
            cells,
            thresholded: vec![vec![false; n]; n],
        };
        let t = trend_checks(&m, &[]);
        assert!(t.row_fractions.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn excluded_cells_skip_steps() {
        let row = [1.0, 5.0, 3.0, 9.0, 1.0];
        assert_eq!(row_trend_fraction(&row, 1, &[]), 3.0 / 4.0);
        assert_eq!(row_trend_fraction(&row, 1, &[3]), 1.0);
    }
}
