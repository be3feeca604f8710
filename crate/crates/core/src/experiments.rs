//! Scenario presets and comparative studies.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::equilibrium::{solve_mfg, solve_no_dropout_baseline, solve_nplayer, EquilibriumSolution};
use crate::error::{Error, Result};
use crate::model::{
    make_constant_coefficients, make_exponential_sellers, make_two_sided, CoefficientSet,
    DistributionKind, InitialDistribution,
};
use crate::par::{self, Execution};
use crate::strategies::{player_path, PlayerPath};

/// Grid size used by the presets.
pub const DEFAULT_INTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    OneSided,
    TwoSided,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub coeffs: CoefficientSet,
    pub dist: InitialDistribution,
    /// Initial positions of the representative players.
    pub x_samples: Vec<f64>,
}

impl ScenarioSpec {
    /// Sellers only: `η ≡ 5`, `κ ≡ 10`, `λ ≡ 5` and exponential positions with mean 1.5.
    pub fn one_sided(m: usize) -> Result<Self> {
        Ok(ScenarioSpec {
            name: ScenarioName::OneSided,
            coeffs: make_constant_coefficients(5.0, 10.0, 5.0, 1.0, m)?,
            dist: make_exponential_sellers(1.5)?,
            x_samples: vec![0.05, 0.25, 0.5, 0.75, 1.0, 1.5, 3.0],
        })
    }

    /// Same costs; sellers of mass 0.8 with mean 1.5 against buyers of mass
    /// 0.2 with mean 1.
    pub fn two_sided(m: usize) -> Result<Self> {
        Ok(ScenarioSpec {
            name: ScenarioName::TwoSided,
            coeffs: make_constant_coefficients(5.0, 10.0, 5.0, 1.0, m)?,
            dist: make_two_sided(0.8, 1.5, 0.2, 1.0)?,
            x_samples: vec![-1.0, -0.5, -0.05, 0.25, 0.5, 1.0, 2.0],
        })
    }

    pub fn custom(coeffs: CoefficientSet, dist: InitialDistribution, x_samples: Vec<f64>) -> Self {
        ScenarioSpec {
            name: ScenarioName::Custom,
            coeffs,
            dist,
            x_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub dropout: EquilibriumSolution,
    pub baseline: EquilibriumSolution,
    pub dropout_paths: Vec<PlayerPath>,
    pub baseline_paths: Vec<PlayerPath>,
}

/// Both equilibria on the spec's grid and the representative paths under each.
pub fn run_scenario(spec: &ScenarioSpec, exec: Execution) -> Result<ScenarioRun> {
    let dropout = solve_mfg(&spec.coeffs, &spec.dist)?;
    let baseline = solve_no_dropout_baseline(&spec.coeffs, &spec.dist)?;
    let dropout_paths = par::try_map(exec, &spec.x_samples, |&x| player_path(x, &dropout))?;
    let baseline_paths = par::try_map(exec, &spec.x_samples, |&x| player_path(x, &baseline))?;
    Ok(ScenarioRun {
        dropout,
        baseline,
        dropout_paths,
        baseline_paths,
    })
}

/// `N` deterministic positions approximating an analytic measure.
///
/// Players are split between sellers, buyers and the atom at zero by largest
/// remainder; each side then takes the midpoint quantiles of its exponential
/// law, e.g. `−m·ln(1 − (k − ½)/N_s)` for sellers. Returned sorted.
pub fn quantile_positions(dist: &InitialDistribution, n: usize) -> Result<Vec<f64>> {
    let DistributionKind::Analytic(mix) = dist.kind() else {
        return Err(Error::InvalidInput("quantile positions need an analytic measure".into()));
    };
    if n == 0 {
        return Err(Error::InvalidInput("need at least one player".into()));
    }
    let weights = [mix.w_sell, mix.w_buy, mix.atom()];
    let counts = largest_remainder(&weights, n);
    let mut xs = Vec::with_capacity(n);
    for k in 1..=counts[0] {
        let u = (k as f64 - 0.5) / counts[0] as f64;
        xs.push(-mix.mean_sell * (-u).ln_1p());
    }
    for k in 1..=counts[1] {
        let u = (k as f64 - 0.5) / counts[1] as f64;
        xs.push(mix.mean_buy * (-u).ln_1p());
    }
    xs.extend(std::iter::repeat_n(0.0, counts[2]));
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

fn largest_remainder(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let assigned: usize = counts.iter().sum();
    for &i in order.iter().take(n - assigned) {
        counts[i] += 1;
    }
    counts
}

/// One `N`-player run compared with the mean-field equilibrium.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `sup_t |μ^N_t − μ_t|` on the grid.
    pub sup_error: f64,
    pub x_hat_n: f64,
    /// Wall time of the `N`-player solve; ignored by `==`.
    #[serde(skip)]
    pub runtime: Duration,
}

impl PartialEq for ConvergenceRow {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.sup_error == other.sup_error && self.x_hat_n == other.x_hat_n
    }
}

/// `N`-player equilibria at quantile positions against the mean-field
/// equilibrium, one row per `N`, sorted by `N`.
pub fn convergence_study(spec: &ScenarioSpec, ns: &[usize], exec: Execution) -> Result<Vec<ConvergenceRow>> {
    let mfg = solve_mfg(&spec.coeffs, &spec.dist)?;
    convergence_against(&mfg, spec, ns, exec)
}

pub fn convergence_against(
    mfg: &EquilibriumSolution,
    spec: &ScenarioSpec,
    ns: &[usize],
    exec: Execution,
) -> Result<Vec<ConvergenceRow>> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    par::try_map(exec, &ns, |&n| {
        let start = Instant::now();
        let positions = quantile_positions(&spec.dist, n)?;
        let eq = solve_nplayer(&spec.coeffs, &positions)?;
        let runtime = start.elapsed();
        let sup_error = eq
            .mu
            .iter()
            .zip(&mfg.mu)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(ConvergenceRow {
            n,
            sup_error,
            x_hat_n: eq.x_hat,
            runtime,
        })
    })
}

/// Times where the slope of `values` jumps by more than five times the
/// median jump in a surrounding window. Adjacent flagged nodes are merged
/// into one kink located at the largest jump.
pub fn detect_kinks(grid: &[f64], values: &[f64]) -> Vec<f64> {
    const WINDOW: usize = 50;
    const FACTOR: f64 = 5.0;
    let n = values.len();
    if n < 4 {
        return Vec::new();
    }
    let slopes: Vec<f64> = (0..n - 1)
        .map(|i| (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]))
        .collect();
    // jumps[k] sits at node k + 1
    let jumps: Vec<f64> = slopes.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut kinks = Vec::new();
    let mut run: Option<(usize, f64)> = None;
    for k in 0..jumps.len() {
        let lo = k.saturating_sub(WINDOW);
        let hi = (k + WINDOW + 1).min(jumps.len());
        let mut local = jumps[lo..hi].to_vec();
        local.sort_by(f64::total_cmp);
        let median = local[local.len() / 2];
        if jumps[k] > FACTOR * median {
            run = match run {
                Some((i, j)) if jumps[k] <= j => Some((i, j)),
                _ => Some((k, jumps[k])),
            };
        } else if let Some((i, _)) = run.take() {
            kinks.push(grid[i + 1]);
        }
    }
    if let Some((i, _)) = run {
        kinks.push(grid[i + 1]);
    }
    kinks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_allocation() {
        assert_eq!(largest_remainder(&[0.8, 0.2, 0.0], 7), vec![6, 1, 0]);
        assert_eq!(largest_remainder(&[1.0, 0.0, 0.0], 1), vec![1, 0, 0]);
        assert_eq!(largest_remainder(&[0.5, 0.3, 0.2], 10), vec![5, 3, 2]);
    }

    #[test]
    fn single_player_sits_at_the_median() {
        let d = make_exponential_sellers(1.5).unwrap();
        let x = quantile_positions(&d, 1).unwrap();
        assert!((x[0] - 1.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn kink_detector_finds_a_corner() {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let v: Vec<f64> = grid.iter().map(|t| t * t + 2.0 * (t - 0.3037).max(0.0)).collect();
        let k = detect_kinks(&grid, &v);
        assert_eq!(k.len(), 1);
        assert!((k[0] - 0.3037).abs() <= 1e-3);
        let smooth: Vec<f64> = grid.iter().map(|t| (3.0 * t).sin()).collect();
        assert!(detect_kinks(&grid, &smooth).is_empty());
    }
}
