//! Real-coded genetic algorithm over `(A, B, C, ω0)`.
//!
//! Tournament selection, blend (BLX-α) crossover, clipped Gaussian mutation
//! and elitism. Each child draws from its own ChaCha stream keyed by
//! `(seed, generation, index)`, so results do not depend on the order in
//! which individuals are evaluated.

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::phase::{eval_polynomial_phase, PhaseMask, PolynomialPhase};
use crate::stats;
use alloc::format;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Gaussian mutation widths for (A, B, C, ω0).
    pub mutation_sigma: [f64; 4],
    /// Multiplier applied to the mutation widths after every generation.
    pub sigma_decay: f64,
    pub elite_count: usize,
    pub tournament_size: usize,
    pub blend_alpha: f64,
    /// Closed intervals for (A, B, C, ω0).
    pub bounds: [(f64, f64); 4],
    pub seed: u64,
}

/// Control-search bounds: A ±2e4 fs², B ±4e5 fs³, C ±4e6 fs⁴, ω0 in the central half of the grid.
pub fn control_bounds(grid: &SpectralGrid) -> [(f64, f64); 4] {
    let n = grid.pixel_count();
    let (w_hi, w_lo) = (grid.omega(n / 4), grid.omega(3 * n / 4));
    [(-2e4, 2e4), (-4e5, 4e5), (-4e6, 4e6), (w_lo, w_hi)]
}

impl GaConfig {
    pub fn control(grid: &SpectralGrid, seed: u64) -> Self {
        let bounds = control_bounds(grid);
        let mut sigma = [0.0; 4];
        for (s, b) in sigma.iter_mut().zip(&bounds) {
            *s = 0.1 * (b.1 - b.0);
        }
        GaConfig {
            population: 40,
            generations: 60,
            crossover_rate: 0.8,
            mutation_rate: 0.2,
            mutation_sigma: sigma,
            sigma_decay: 0.97,
            elite_count: 2,
            tournament_size: 2,
            blend_alpha: 0.5,
            bounds,
            seed,
        }
    }

    /// Narrow box around the flat phase used to null residual dispersion.
    pub fn calibration(grid: &SpectralGrid, seed: u64) -> Self {
        let w0 = grid.center_omega();
        let bounds = [(-2e3, 2e3), (-6e4, 6e4), (-6e5, 6e5), (w0, w0)];
        let mut sigma = [0.0; 4];
        for (s, b) in sigma.iter_mut().zip(&bounds) {
            *s = 0.15 * (b.1 - b.0);
        }
        GaConfig {
            population: 40,
            generations: 120,
            crossover_rate: 0.8,
            mutation_rate: 0.3,
            mutation_sigma: sigma,
            sigma_decay: 0.96,
            elite_count: 2,
            tournament_size: 2,
            blend_alpha: 0.5,
            bounds,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("ga: {m}")));
        if self.population < 4 {
            return bad("population must be >= 4");
        }
        if self.elite_count >= self.population {
            return bad("elite_count must be < population");
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be >= 1");
        }
        for r in [self.crossover_rate, self.mutation_rate] {
            if !(0.0..=1.0).contains(&r) {
                return bad("rates must lie in [0, 1]");
            }
        }
        if !(self.sigma_decay.is_finite() && self.sigma_decay > 0.0) {
            return bad("sigma_decay must be > 0");
        }
        if !(self.blend_alpha.is_finite() && self.blend_alpha >= 0.0) {
            return bad("blend_alpha must be >= 0");
        }
        for (k, b) in self.bounds.iter().enumerate() {
            if !(b.0.is_finite() && b.1.is_finite() && b.0 <= b.1) {
                return bad(&format!("bounds[{k}] empty or non-finite"));
            }
        }
        if self.mutation_sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("mutation_sigma must be finite and >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Individual {
    pub params: PolynomialPhase,
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub generations: Vec<GenerationStats>,
    pub best: Individual,
    pub evaluations: usize,
    pub seed: u64,
}

impl OptimizationTrace {
    pub fn best_fitness(&self) -> f64 {
        self.best.fitness.unwrap_or(f64::NEG_INFINITY)
    }
}

fn stream(seed: u64, generation: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | index as u64);
    rng
}

fn clip(v: f64, b: (f64, f64)) -> f64 {
    v.max(b.0).min(b.1)
}

fn evaluate<F: Fn(&PolynomialPhase) -> f64>(
    f: &F,
    pop: &[[f64; 4]],
    generation: usize,
) -> Result<Vec<f64>> {
    pop.iter()
        .enumerate()
        .map(|(index, p)| {
            let v = f(&PolynomialPhase::from_array(*p));
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Evaluation { generation, index, value: v })
            }
        })
        .collect()
}

fn tournament(rng: &mut ChaCha8Rng, fit: &[f64], size: usize) -> usize {
    let mut best = rng.random_range(0..fit.len());
    for _ in 1..size {
        let c = rng.random_range(0..fit.len());
        if fit[c] > fit[best] || (fit[c] == fit[best] && c < best) {
            best = c;
        }
    }
    best
}

fn gen_stats(generation: usize, fit: &[f64]) -> GenerationStats {
    GenerationStats {
        generation,
        best: fit.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: stats::mean(fit),
        std: stats::std_dev(fit),
    }
}

/// Maximizes `evaluator`. Calls it exactly `population × (generations + 1)` times.
pub fn run_ga<F: Fn(&PolynomialPhase) -> f64>(evaluator: F, config: &GaConfig) -> Result<OptimizationTrace> {
    config.validate()?;
    let n = config.population;
    let b = config.bounds;
    let mut pop: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let mut rng = stream(config.seed, 0, i);
            let mut p = [0.0; 4];
            for k in 0..4 {
                let u: f64 = rng.random();
                p[k] = clip(b[k].0 + u * (b[k].1 - b[k].0), b[k]);
            }
            p
        })
        .collect();
    let mut fit = evaluate(&evaluator, &pop, 0)?;
    let mut evaluations = n;
    let mut trace = Vec::with_capacity(config.generations + 1);
    trace.push(gen_stats(0, &fit));
    let mut sigma = config.mutation_sigma;

    for g in 1..=config.generations {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| fit[y].total_cmp(&fit[x]).then(x.cmp(&y)));
        let mut next: Vec<[f64; 4]> = order[..config.elite_count].iter().map(|&i| pop[i]).collect();
        for idx in config.elite_count..n {
            let mut rng = stream(config.seed, g, idx);
            let pa = pop[tournament(&mut rng, &fit, config.tournament_size)];
            let pb = pop[tournament(&mut rng, &fit, config.tournament_size)];
            let mut child = pa;
            if rng.random::<f64>() < config.crossover_rate {
                for k in 0..4 {
                    let u: f64 = rng.random();
                    let w = -config.blend_alpha + u * (1.0 + 2.0 * config.blend_alpha);
                    child[k] = pa[k] + w * (pb[k] - pa[k]);
                }
            }
            for k in 0..4 {
                if rng.random::<f64>() < config.mutation_rate {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    child[k] += z * sigma[k];
                }
                child[k] = clip(child[k], b[k]);
            }
            next.push(child);
        }
        pop = next;
        fit = evaluate(&evaluator, &pop, g)?;
        evaluations += n;
        trace.push(gen_stats(g, &fit));
        for s in sigma.iter_mut() {
            *s *= config.sigma_decay;
        }
    }

    let bi = (0..n).fold(0, |acc, i| if fit[i] > fit[acc] { i } else { acc });
    Ok(OptimizationTrace {
        generations: trace,
        best: Individual { params: PolynomialPhase::from_array(pop[bi]), fitness: Some(fit[bi]) },
        evaluations,
        seed: config.seed,
    })
}

pub fn best_mask(trace: &OptimizationTrace, grid: &SpectralGrid) -> Result<PhaseMask> {
    eval_polynomial_phase(&trace.best.params, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_config(seed: u64) -> GaConfig {
        GaConfig {
            population: 40,
            generations: 50,
            crossover_rate: 0.8,
            mutation_rate: 0.2,
            mutation_sigma: [0.5, 0.5, 0.5, 0.5],
            sigma_decay: 0.93,
            elite_count: 2,
            tournament_size: 2,
            blend_alpha: 0.5,
            bounds: [(-5.0, 5.0), (-5.0, 5.0), (-5.0, 5.0), (2.0, 2.5)],
            seed,
        }
    }

    #[test]
    fn convex_toy_converges() {
        let t = run_ga(|p| -(p.a * p.a + p.b * p.b + p.c * p.c), &toy_config(3)).unwrap();
        assert!(t.best_fitness() > -1e-3, "best {}", t.best_fitness());
    }

    #[test]
    fn evaluation_count() {
        let cfg = toy_config(1);
        let t = run_ga(|p| -p.a.abs(), &cfg).unwrap();
        assert_eq!(t.evaluations, cfg.population * (cfg.generations + 1));
        assert_eq!(t.generations.len(), cfg.generations + 1);
    }

    #[test]
    fn non_finite_fitness_is_reported() {
        let r = run_ga(|p| if p.a > 0.0 { f64::NAN } else { 0.0 }, &toy_config(2));
        assert!(matches!(r, Err(Error::Evaluation { .. })));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut c = toy_config(0);
        c.elite_count = 40;
        assert!(c.validate().is_err());
        let mut c = toy_config(0);
        c.population = 3;
        c.elite_count = 1;
        assert!(c.validate().is_err());
        let mut c = toy_config(0);
        c.bounds[0] = (1.0, -1.0);
        assert!(c.validate().is_err());
    }
}
