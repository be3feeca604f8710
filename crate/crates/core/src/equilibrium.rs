//! Equilibrium aggregate trading rates.
//!
//! For a trial level `c ≥ 0` the equilibrium equation becomes a purely
//! backward problem. With `v_t = ∫ₜᵀ μ` and `g_t = ∫ₜᵀ κhμ` it is the ODE
//!
//! ```text
//! μ̇ = −(κ/η)(q₀(c−g) + p₀(0))μ − ((λ+δκ̇)/η)v − ((η̇−δκ)/η)μ
//! v̇ = −μ,   ġ = −κhμ,
//! ```
//!
//! started from `μ_T = (α_T/η_T)(E[ν₀] − (1−q₀(0))c − Q₀(c))`, `v_T = g_T = 0`.
//! The equilibrium is the `μ^c` whose forward integral `f(T) = g_0` returns
//! `c` itself, i.e. the root of the strictly increasing map `ψ(c) = c − g_0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{make_empirical, sup_abs, validate_assumptions, CoefficientSet, InitialDistribution};
use crate::par::{self, Execution};
use crate::riccati::{solve_riccati, RiccatiBundle};

/// Whether players leave the market when their inventory hits zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Market {
    DropOut,
    /// Every player stays until `T`; the tails are replaced by `q₀ ≡ 1`, `p₀ ≡ 0`.
    NoDropOut,
}

#[derive(Debug, Clone, Copy)]
struct Tails<'a> {
    dist: &'a InitialDistribution,
    market: Market,
}

impl Tails<'_> {
    fn q0(&self, x: f64) -> f64 {
        match self.market {
            Market::DropOut => self.dist.q0(x),
            Market::NoDropOut => 1.0,
        }
    }

    fn p0_zero(&self) -> f64 {
        match self.market {
            Market::DropOut => self.dist.p0(0.0),
            Market::NoDropOut => 0.0,
        }
    }

    /// `E[ν₀] − (1−q₀(0))c − Q₀(c)`.
    fn terminal_bracket(&self, c: f64) -> f64 {
        match self.market {
            Market::DropOut => {
                self.dist.mean() - (1.0 - self.dist.q0(0.0)) * c - self.dist.integrated_tail(c)
            }
            Market::NoDropOut => self.dist.mean() - c,
        }
    }
}

/// Terminal rate `μ^c_T` of the backward equation for trial level `c`.
pub fn terminal_rate(c: f64, dist: &InitialDistribution, alpha_t: f64, eta_t: f64) -> Result<f64> {
    terminal_rate_in(c, dist, Market::DropOut, alpha_t, eta_t)
}

fn terminal_rate_in(
    c: f64,
    dist: &InitialDistribution,
    market: Market,
    alpha_t: f64,
    eta_t: f64,
) -> Result<f64> {
    if c.is_nan() || c < 0.0 {
        return Err(Error::InvalidInput(format!("trial level must be ≥ 0, got {c}")));
    }
    Ok(alpha_t / eta_t * Tails { dist, market }.terminal_bracket(c))
}

/// Output of one backward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardSolution {
    pub c: f64,
    pub mu: Vec<f64>,
    /// `∫ₜᵀ μ`.
    pub v: Vec<f64>,
    /// `∫ₜᵀ κhμ`.
    pub g: Vec<f64>,
}

impl BackwardSolution {
    /// `g` at `t = 0`, which is `f_{μ^c}(T)`.
    pub fn g0(&self) -> f64 {
        self.g[0]
    }
}

/// Integrates the backward system for a fixed trial level `c`.
pub fn solve_mu_for_c(
    c: f64,
    coeffs: &CoefficientSet,
    dist: &InitialDistribution,
    bundle: &RiccatiBundle,
    market: Market,
) -> Result<BackwardSolution> {
    check_grid(coeffs, bundle)?;
    let tails = Tails { dist, market };
    let m = coeffs.intervals();
    let n = m + 1;
    let dt = coeffs.dt();
    let delta = bundle.delta();
    let mu_t = terminal_rate_in(c, dist, market, bundle.alpha_terminal(), coeffs.eta()[m])?;
    let p0 = tails.p0_zero();

    // With atoms q₀ jumps, and pointwise stage values would make the discrete
    // map c ↦ μ^c discontinuous. Such measures use the mean of q₀ over the
    // level range an Euler predictor says the step will cover instead.
    let averaged = market == Market::DropOut && dist.has_atoms();
    let mean_tail = |i: usize, [mu, _, g]: [f64; 3]| -> f64 {
        let k = coeffs.node(i + 1);
        let a = c - g;
        let b = a - dt * k.kappa * bundle.h[i + 1] * mu;
        if (a - b).abs() <= 1e-14 * (1.0 + a.abs()) {
            dist.q0(a)
        } else {
            (dist.tail_antiderivative(a) - dist.tail_antiderivative(b)) / (a - b)
        }
    };
    let rhs = |i: usize, s: f64, [mu, v, g]: [f64; 3], fixed: Option<f64>| -> [f64; 3] {
        let k = coeffs.in_cell(i, s);
        let h = bundle.h_in_cell(i, s);
        let q = fixed.unwrap_or_else(|| tails.q0(c - g)) + p0;
        [
            -(k.kappa / k.eta) * q * mu
                - (k.lambda + delta * k.kappa_dot) / k.eta * v
                - (k.eta_dot - delta * k.kappa) / k.eta * mu,
            -mu,
            -k.kappa * h * mu,
        ]
    };

    let mut mu = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut g = vec![0.0; n];
    mu[m] = mu_t;
    let mut st = [mu_t, 0.0, 0.0];
    if mu_t != 0.0 {
        let step = -dt;
        for i in (0..m).rev() {
            let fixed = averaged.then(|| mean_tail(i, st));
            let k1 = rhs(i, 1.0, st, fixed);
            let k2 = rhs(i, 0.5, axpy(st, 0.5 * step, k1), fixed);
            let k3 = rhs(i, 0.5, axpy(st, 0.5 * step, k2), fixed);
            let k4 = rhs(i, 0.0, axpy(st, step, k3), fixed);
            for j in 0..3 {
                st[j] += step / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            if !st.iter().all(|x| x.is_finite()) {
                return Err(Error::Numerical(format!(
                    "backward sweep for c = {c} diverged at t = {}",
                    coeffs.grid()[i]
                )));
            }
            mu[i] = st[0];
            v[i] = st[1];
            g[i] = st[2];
        }
    }
    Ok(BackwardSolution { c, mu, v, g })
}

fn axpy(x: [f64; 3], a: f64, v: [f64; 3]) -> [f64; 3] {
    [x[0] + a * v[0], x[1] + a * v[1], x[2] + a * v[2]]
}

fn check_grid(coeffs: &CoefficientSet, bundle: &RiccatiBundle) -> Result<()> {
    if coeffs.grid() != bundle.grid() {
        return Err(Error::InvalidInput(
            "Riccati bundle was solved on a different grid".into(),
        ));
    }
    Ok(())
}

/// `ψ(c) = c − f_{μ^c}(T)`.
pub fn psi(
    c: f64,
    coeffs: &CoefficientSet,
    dist: &InitialDistribution,
    bundle: &RiccatiBundle,
    market: Market,
) -> Result<f64> {
    Ok(c - solve_mu_for_c(c, coeffs, dist, bundle, market)?.g0())
}

/// `ψ` on a list of trial levels; each evaluation is independent.
pub fn psi_curve(
    cs: &[f64],
    coeffs: &CoefficientSet,
    dist: &InitialDistribution,
    bundle: &RiccatiBundle,
    market: Market,
    exec: Execution,
) -> Result<Vec<f64>> {
    par::try_map(exec, cs, |&c| psi(c, coeffs, dist, bundle, market))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative bisection tolerance: stop once `|ψ| ≤ tol·(1 + c_upper)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Equilibrium aggregate trading rate together with everything needed to
/// rebuild individual strategies from it.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    pub delta: f64,
    pub market: Market,
    pub mu: Vec<f64>,
    /// `f(t) = ∫₀ᵗ κhμ`.
    pub f_curve: Vec<f64>,
    pub f_max: Vec<f64>,
    pub f_min: Vec<f64>,
    /// Root of `ψ`, equal to `f(T)`.
    pub x_hat: f64,
    pub mu_terminal: f64,
    pub alpha_terminal: f64,
    pub k1: f64,
    pub k2: f64,
    /// Fixed-point residual `sup|μ − F(μ)|`, filled in by the strategies module.
    pub residual: Option<f64>,
    /// Upper end of the bisection bracket and the number of `ψ` evaluations.
    pub c_upper: f64,
    pub iterations: usize,
    /// Solved through the mirrored measure because `E[ν₀] < 0`.
    pub reflected: bool,
    pub coeffs: CoefficientSet,
    pub dist: InitialDistribution,
    pub bundle: RiccatiBundle,
}

impl EquilibriumSolution {
    pub fn grid(&self) -> &[f64] {
        self.coeffs.grid()
    }

    pub fn mu_initial(&self) -> f64 {
        self.mu[0]
    }

    fn zero(coeffs: &CoefficientSet, dist: &InitialDistribution, bundle: RiccatiBundle, market: Market) -> Self {
        let n = coeffs.grid().len();
        let (k1, k2) = a_priori_bounds(coeffs, bundle.delta());
        EquilibriumSolution {
            delta: bundle.delta(),
            market,
            mu: vec![0.0; n],
            f_curve: vec![0.0; n],
            f_max: vec![0.0; n],
            f_min: vec![0.0; n],
            x_hat: 0.0,
            mu_terminal: 0.0,
            alpha_terminal: bundle.alpha_terminal(),
            k1,
            k2,
            residual: None,
            c_upper: 0.0,
            iterations: 0,
            reflected: false,
            coeffs: coeffs.clone(),
            dist: dist.clone(),
            bundle,
        }
    }

    fn negated(mut self, original: &InitialDistribution) -> Self {
        for v in self.mu.iter_mut().chain(self.f_curve.iter_mut()) {
            *v = -*v;
        }
        std::mem::swap(&mut self.f_max, &mut self.f_min);
        for v in self.f_max.iter_mut().chain(self.f_min.iter_mut()) {
            *v = -*v;
        }
        self.x_hat = -self.x_hat;
        self.mu_terminal = -self.mu_terminal;
        self.reflected = true;
        self.dist = original.clone();
        self
    }
}

/// Constants `(K₁, K₂)` of the two-sided a priori bound on `|μ_t|`.
pub fn a_priori_bounds(coeffs: &CoefficientSet, delta: f64) -> (f64, f64) {
    let inv_eta = coeffs.eta().iter().fold(0.0f64, |m, e| m.max(1.0 / e));
    let kappa = sup_abs(coeffs.kappa());
    let kappa_dot = sup_abs(coeffs.kappa_dot());
    let lambda = sup_abs(coeffs.lambda());
    let eta_dot = sup_abs(coeffs.eta_dot());
    let horizon = coeffs.horizon();
    let k1 = delta * kappa * inv_eta;
    let k2 = inv_eta
        * ((1.0 + delta) * kappa + delta * horizon * kappa_dot + horizon * lambda + eta_dot);
    (k1, k2)
}

fn running_extrema(f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut hi = Vec::with_capacity(f.len());
    let mut lo = Vec::with_capacity(f.len());
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for &x in f {
        a = a.max(x);
        b = b.min(x);
        hi.push(a);
        lo.push(b);
    }
    (hi, lo)
}

/// Finds the root `x̂` of `ψ` by bisection and returns the equilibrium it
/// selects. Requires `E[ν₀] ≥ 0`; a zero mean gives `μ ≡ 0`.
pub fn find_x_hat(
    coeffs: &CoefficientSet,
    dist: &InitialDistribution,
    bundle: &RiccatiBundle,
    market: Market,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    check_grid(coeffs, bundle)?;
    let mean = dist.mean();
    if mean < 0.0 {
        return Err(Error::InvalidInput(
            "negative mean position: solve the reflected measure".into(),
        ));
    }
    if mean == 0.0 {
        return Ok(EquilibriumSolution::zero(coeffs, dist, bundle.clone(), market));
    }

    let tails = Tails { dist, market };
    let mut evals = 0usize;
    let mut eval = |c: f64| -> Result<BackwardSolution> {
        evals += 1;
        solve_mu_for_c(c, coeffs, dist, bundle, market)
    };

    let c_upper = bracket_upper(&tails, dist, &mut eval)?;
    let tol = opts.tol * (1.0 + c_upper);
    let (mut lo, mut hi) = (0.0f64, c_upper);
    let mut best = eval(lo)?;
    if (lo - best.g0()).abs() > tol {
        let upper = eval(hi)?;
        if hi - upper.g0() <= 0.0 {
            return Err(Error::Numerical(format!(
                "ψ does not change sign on [0, {c_upper}]"
            )));
        }
        best = upper;
        for _ in 0..opts.max_iter {
            let mid = 0.5 * (lo + hi);
            let sol = eval(mid)?;
            let p = mid - sol.g0();
            best = sol;
            if p.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * hi.max(1.0) {
                break;
            }
            if p < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = best.c - best.g0();
        if p.abs() > tol {
            return Err(Error::Numerical(format!(
                "bisection stalled with |ψ| = {:e} > {tol:e}",
                p.abs()
            )));
        }
    }

    let g0 = best.g0();
    let f_curve: Vec<f64> = best.g.iter().map(|g| g0 - g).collect();
    let (f_max, f_min) = running_extrema(&f_curve);
    let (k1, k2) = a_priori_bounds(coeffs, bundle.delta());
    let m = coeffs.intervals();
    Ok(EquilibriumSolution {
        delta: bundle.delta(),
        market,
        x_hat: best.c,
        mu_terminal: best.mu[m],
        mu: best.mu,
        f_curve,
        f_max,
        f_min,
        alpha_terminal: bundle.alpha_terminal(),
        k1,
        k2,
        residual: None,
        c_upper,
        iterations: evals,
        reflected: false,
        coeffs: coeffs.clone(),
        dist: dist.clone(),
        bundle: bundle.clone(),
    })
}

/// Upper end of the bisection bracket for `ψ`.
///
/// When some mass sits at or below zero the terminal rate `c ↦ μ^c_T` has a
/// root `c₀` with `ψ(c₀) = c₀ > 0`. Otherwise the support bound is used if
/// finite, and a doubling search on `ψ` if not.
fn bracket_upper(
    tails: &Tails<'_>,
    dist: &InitialDistribution,
    eval: &mut impl FnMut(f64) -> Result<BackwardSolution>,
) -> Result<f64> {
    let mean = dist.mean();
    let q00 = tails.q0(0.0);
    let has_root = tails.market == Market::NoDropOut || q00 < 1.0;
    if has_root {
        // The bracket term is decreasing with slope ≤ −(1 − q₀(0)).
        let mut hi = if tails.market == Market::NoDropOut {
            mean
        } else {
            mean / (1.0 - q00)
        };
        if dist.supp_upper().is_finite() {
            hi = hi.min(dist.supp_upper().max(0.0));
        }
        if tails.terminal_bracket(hi) > 0.0 {
            return Err(Error::Numerical(
                "terminal rate has no root below the support bound".into(),
            ));
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if tails.terminal_bracket(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(hi);
    }
    let sup = dist.supp_upper();
    if sup.is_finite() {
        return Ok(sup);
    }
    let mut c = mean.max(1.0);
    for _ in 0..60 {
        if c - eval(c)?.g0() > 0.0 {
            return Ok(c);
        }
        c *= 2.0;
    }
    Err(Error::Numerical("no positive ψ value found by doubling".into()))
}

/// General entry point: Riccati solve for `delta`, then the root search,
/// reflecting the measure when its mean is negative.
pub fn solve_equilibrium(
    coeffs: &CoefficientSet,
    dist: &InitialDistribution,
    delta: f64,
    market: Market,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    validate_assumptions(coeffs, delta).into_error(false)?;
    let bundle = solve_riccati(coeffs, delta)?;
    if dist.mean() < 0.0 {
        let mirrored = dist.reflect();
        Ok(find_x_hat(coeffs, &mirrored, &bundle, market, opts)?.negated(dist))
    } else {
        find_x_hat(coeffs, dist, &bundle, market, opts)
    }
}

/// Mean-field equilibrium with market drop-out.
pub fn solve_mfg(coeffs: &CoefficientSet, dist: &InitialDistribution) -> Result<EquilibriumSolution> {
    solve_equilibrium(coeffs, dist, 0.0, Market::DropOut, &SolverOptions::default())
}

/// Mean-field equilibrium of the classical model in which nobody drops out.
pub fn solve_no_dropout_baseline(
    coeffs: &CoefficientSet,
    dist: &InitialDistribution,
) -> Result<EquilibriumSolution> {
    solve_equilibrium(coeffs, dist, 0.0, Market::NoDropOut, &SolverOptions::default())
}

/// Nash equilibrium of the `N`-player game with the given initial positions.
pub fn solve_nplayer(coeffs: &CoefficientSet, positions: &[f64]) -> Result<EquilibriumSolution> {
    solve_nplayer_with(coeffs, positions, &SolverOptions::default())
}

pub fn solve_nplayer_with(
    coeffs: &CoefficientSet,
    positions: &[f64],
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    let dist = make_empirical(positions)?;
    let delta = 1.0 / positions.len() as f64;
    validate_assumptions(coeffs, delta).into_error(true)?;
    solve_equilibrium(coeffs, &dist, delta, Market::DropOut, opts)
}
