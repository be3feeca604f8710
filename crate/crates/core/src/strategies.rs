//! Individual equilibrium strategies and the checks built on them.
//!
//! Given an aggregate rate `μ`, a player starting at `x` trades until the
//! liquidation time `τ` fixed by the level crossing `f(τ) = x`, with
//! intercept `B_t = ∫ₜ^τ e^{−∫ₜˢA/η} κ_s μ_s ds`. Inventory and adjoint are
//! evaluated in closed form,
//!
//! ```text
//! X_t = D_t (x − f_t − h_t B_t),   Y_t = α_t (x − f_t − h_t B_t) + B_t,
//! ```
//!
//! which equals `Y = AX + B` but stays finite up to `T` where `A` blows up.

use serde::Serialize;

use crate::equilibrium::{EquilibriumSolution, Market};
use crate::error::{Error, Result};
use crate::model::{CoefficientSet, DistributionKind};
use crate::par::{self, Execution};
use crate::quad;
use crate::riccati::RiccatiBundle;

/// `f(t) = ∫₀ᵗ κhμ` by the trapezoid rule, with its running extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct FCurve {
    pub f: Vec<f64>,
    pub f_max: Vec<f64>,
    pub f_min: Vec<f64>,
}

pub fn f_curve(mu: &[f64], coeffs: &CoefficientSet, bundle: &RiccatiBundle) -> Result<FCurve> {
    if mu.len() != bundle.len() || coeffs.grid() != bundle.grid() {
        return Err(Error::InvalidInput("μ is not on the Riccati grid".into()));
    }
    let integrand: Vec<f64> = mu
        .iter()
        .zip(coeffs.kappa())
        .zip(&bundle.h)
        .map(|((m, k), h)| k * h * m)
        .collect();
    let f = quad::cumulative_trapezoid(&integrand, bundle.dt());
    let mut f_max = Vec::with_capacity(f.len());
    let mut f_min = Vec::with_capacity(f.len());
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for &v in &f {
        hi = hi.max(v);
        lo = lo.min(v);
        f_max.push(hi);
        f_min.push(lo);
    }
    Ok(FCurve { f, f_max, f_min })
}

/// Liquidation time of a player starting at `x`.
///
/// Inside the open range `(f_min(T), f_max(T))` this is the first crossing of
/// `f` with the level `x`, linearly interpolated between nodes. Outside it the
/// player holds inventory until `T`. `x = 0` leaves at once.
pub fn liquidation_time(x: f64, grid: &[f64], f: &[f64], f_max: &[f64], f_min: &[f64]) -> f64 {
    let m = grid.len() - 1;
    let horizon = grid[m];
    if x == 0.0 {
        return 0.0;
    }
    if !(f_min[m] < x && x < f_max[m]) {
        return horizon;
    }
    for i in 0..m {
        let a = f[i] - x;
        let b = f[i + 1] - x;
        if a == 0.0 {
            return grid[i];
        }
        if b == 0.0 {
            return grid[i + 1];
        }
        if (a < 0.0) != (b < 0.0) {
            return grid[i] + (grid[i + 1] - grid[i]) * a / (a - b);
        }
    }
    horizon
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerPath {
    pub x: f64,
    pub tau: f64,
    /// Inventory `X`.
    pub inventory: Vec<f64>,
    /// Adjoint `Y`.
    pub adjoint: Vec<f64>,
    /// Ansatz intercept `B`.
    pub intercept: Vec<f64>,
    /// Trading rate `ξ = (Y − δκX)/η`.
    pub xi: Vec<f64>,
    /// Cost against the equilibrium aggregate rate.
    pub cost: f64,
}

impl PlayerPath {
    fn zero(n: usize) -> Self {
        PlayerPath {
            x: 0.0,
            tau: 0.0,
            inventory: vec![0.0; n],
            adjoint: vec![0.0; n],
            intercept: vec![0.0; n],
            xi: vec![0.0; n],
            cost: 0.0,
        }
    }
}

/// Equilibrium strategy of a player starting at `x`.
pub fn player_path(x: f64, eq: &EquilibriumSolution) -> Result<PlayerPath> {
    player_path_with(x, eq, &eq.f_curve, &eq.f_max, &eq.f_min)
}

/// As [`player_path`], with an explicitly supplied level curve `f`.
pub fn player_path_with(
    x: f64,
    eq: &EquilibriumSolution,
    f: &[f64],
    f_max: &[f64],
    f_min: &[f64],
) -> Result<PlayerPath> {
    let coeffs = &eq.coeffs;
    let bundle = &eq.bundle;
    let grid = coeffs.grid();
    let n = grid.len();
    if bundle.grid() != grid || eq.mu.len() != n || f.len() != n {
        return Err(Error::InvalidInput("path inputs live on different grids".into()));
    }
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("initial position {x} is not finite")));
    }
    let m = n - 1;
    let dt = coeffs.dt();
    let tau = match eq.market {
        Market::DropOut => liquidation_time(x, grid, f, f_max, f_min),
        Market::NoDropOut => grid[m],
    };
    if tau == 0.0 {
        return Ok(PlayerPath::zero(n));
    }

    // Nodes strictly before τ carry the strategy; `end` is the first node at
    // or after it.
    let (cell, frac) = quad::locate(0.0, dt, n, tau);
    let end = if frac == 0.0 { cell } else { cell + 1 };
    let integrand: Vec<f64> = (0..n)
        .map(|i| bundle.efac[i] * coeffs.kappa()[i] * eq.mu[i])
        .collect();
    // S_i = ∫_{t_i}^τ Efac·κμ, trapezoid with a partial last cell.
    let mut tail = vec![0.0; n];
    if end > cell {
        let at_tau = quad::lerp(integrand[cell], integrand[cell + 1], frac);
        tail[cell] = 0.5 * frac * dt * (integrand[cell] + at_tau);
    }
    for i in (0..cell).rev() {
        tail[i] = tail[i + 1] + 0.5 * dt * (integrand[i] + integrand[i + 1]);
    }

    let mut path = PlayerPath::zero(n);
    path.x = x;
    path.tau = tau;
    let delta = bundle.delta();
    let last = if tau >= grid[m] { n } else { end };
    for i in 0..last {
        let b = if bundle.efac[i] > 0.0 {
            tail[i] / bundle.efac[i]
        } else {
            0.0
        };
        let z = x - f[i] - bundle.h[i] * b;
        let inv = bundle.d[i] * z;
        let adj = bundle.alpha[i] * z + b;
        path.inventory[i] = inv;
        path.adjoint[i] = adj;
        path.intercept[i] = b;
        path.xi[i] = (adj - delta * coeffs.kappa()[i] * inv) / coeffs.eta()[i];
    }
    path.inventory[0] = x;
    path.inventory[m] = 0.0;
    path.cost = cost(&path.xi, &path.inventory, eq, CostMode::MeanField);
    Ok(path)
}

/// Which aggregate a cost is computed against.
#[derive(Debug, Clone, Copy)]
pub enum CostMode<'a> {
    /// `κμX` with the equilibrium aggregate `μ`.
    MeanField,
    /// `(κX/N)Σⱼξʲ`, where `others` is the summed rate of the other `N − 1` players.
    NPlayer { others: &'a [f64], n: usize },
}

/// Trapezoid quadrature of the running cost.
pub fn cost(xi: &[f64], inventory: &[f64], eq: &EquilibriumSolution, mode: CostMode<'_>) -> f64 {
    let c = &eq.coeffs;
    let running: Vec<f64> = (0..xi.len())
        .map(|i| {
            let impact = match mode {
                CostMode::MeanField => eq.mu[i],
                CostMode::NPlayer { others, n } => (others[i] + xi[i]) / n as f64,
            };
            0.5 * c.eta()[i] * xi[i] * xi[i]
                + c.kappa()[i] * impact * inventory[i]
                + 0.5 * c.lambda()[i] * inventory[i] * inventory[i]
        })
        .collect();
    quad::trapezoid(&running, c.dt())
}

/// Deviation strategies the equilibrium is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum CompetitorSpec {
    /// Constant rate `x/T`.
    TwapFullHorizon,
    /// Constant rate `x/τ*` with the equilibrium liquidation time.
    TwapToTau,
    /// `f·X* + (1 − f)·x(1 − t/T)`, absorbed at its first zero.
    ScaledEquilibrium(f64),
    /// Equilibrium until `fraction·τ*`, then linear down to zero at the
    /// midpoint between that time and `τ*`.
    EarlyStop(f64),
}

impl CompetitorSpec {
    pub fn battery() -> Vec<CompetitorSpec> {
        use CompetitorSpec::*;
        vec![
            TwapFullHorizon,
            TwapToTau,
            ScaledEquilibrium(0.5),
            ScaledEquilibrium(0.9),
            ScaledEquilibrium(1.1),
            ScaledEquilibrium(1.5),
            EarlyStop(0.25),
            EarlyStop(0.5),
            EarlyStop(0.75),
        ]
    }

    /// Inventory and rate of the competitor against `path` on `grid`.
    pub fn generate(&self, path: &PlayerPath, grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = grid.len();
        let horizon = grid[n - 1];
        let x = path.x;
        if x == 0.0 {
            return (vec![0.0; n], vec![0.0; n]);
        }
        match *self {
            CompetitorSpec::TwapFullHorizon => linear(x, 0.0, horizon, grid),
            CompetitorSpec::TwapToTau => linear(x, 0.0, path.tau, grid),
            CompetitorSpec::ScaledEquilibrium(s) => {
                let mut inv: Vec<f64> = grid
                    .iter()
                    .zip(&path.inventory)
                    .map(|(t, xs)| s * xs + (1.0 - s) * x * (1.0 - t / horizon))
                    .collect();
                inv[0] = x;
                let mut xi: Vec<f64> = path.xi.iter().map(|r| s * r + (1.0 - s) * x / horizon).collect();
                if let Some(hit) = (1..n - 1).find(|&i| inv[i] * x.signum() <= 0.0) {
                    inv[hit..].fill(0.0);
                    xi[hit..].fill(0.0);
                }
                (inv, xi)
            }
            CompetitorSpec::EarlyStop(frac) => {
                let ts = frac * path.tau;
                let te = 0.5 * (ts + path.tau);
                let dt = grid[1] - grid[0];
                let xs = quad::interp(&path.inventory, 0.0, dt, ts);
                let (mut inv, mut xi) = linear(xs, ts, te, grid);
                for (i, &t) in grid.iter().enumerate() {
                    if t <= ts {
                        inv[i] = path.inventory[i];
                        xi[i] = path.xi[i];
                    }
                }
                (inv, xi)
            }
        }
    }
}

/// Straight line from `level` at `start` to zero at `end`; `x` fixes the sign
/// convention and the value before `start` is irrelevant to callers.
fn linear(level: f64, start: f64, end: f64, grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let span = end - start;
    let rate = level / span;
    let mut inv = Vec::with_capacity(grid.len());
    let mut xi = Vec::with_capacity(grid.len());
    for &t in grid {
        if t < end {
            inv.push(level * (1.0 - (t - start) / span));
            xi.push(rate);
        } else {
            inv.push(0.0);
            xi.push(0.0);
        }
    }
    (inv, xi)
}

/// `true` for a path that starts at `x`, keeps its sign until it reaches zero
/// and stays there.
pub fn is_admissible(x: f64, inventory: &[f64]) -> bool {
    if inventory.first() != Some(&x) || inventory.last() != Some(&0.0) {
        return false;
    }
    if !inventory.iter().all(|v| v.is_finite()) {
        return false;
    }
    match inventory.iter().position(|&v| v == 0.0) {
        Some(k) => {
            inventory[..k].iter().all(|&v| v * x > 0.0) && inventory[k..].iter().all(|&v| v == 0.0)
        }
        None => false,
    }
}

/// Cost gap `J(competitor) − J(equilibrium)` for one competitor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margin {
    pub competitor: CompetitorSpec,
    pub cost: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerMargins {
    pub player: usize,
    pub x: f64,
    pub equilibrium_cost: f64,
    pub margins: Vec<Margin>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashReport {
    pub players: Vec<PlayerMargins>,
    /// Competitors beating the equilibrium by more than `1e-8·(1 + |J|)`.
    pub violations: usize,
}

impl NashReport {
    pub fn min_margin(&self) -> f64 {
        self.players
            .iter()
            .flat_map(|p| p.margins.iter().map(|m| m.margin))
            .fold(f64::INFINITY, f64::min)
    }

    fn from_players(players: Vec<PlayerMargins>) -> Self {
        let violations = players
            .iter()
            .flat_map(|p| {
                let tol = 1e-8 * (1.0 + p.equilibrium_cost.abs());
                p.margins.iter().filter(move |m| m.margin < -tol)
            })
            .count();
        NashReport { players, violations }
    }
}

/// Equilibrium vs `battery` for single players facing the mean-field rate.
pub fn optimality_check(
    xs: &[f64],
    eq: &EquilibriumSolution,
    battery: &[CompetitorSpec],
    exec: Execution,
) -> Result<NashReport> {
    let paths = par::try_map(exec, xs, |&x| player_path(x, eq))?;
    let grid = eq.grid();
    let players = paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let eq_cost = cost(&p.xi, &p.inventory, eq, CostMode::MeanField);
            let margins = battery
                .iter()
                .map(|spec| {
                    let (inv, xi) = spec.generate(p, grid);
                    let c = cost(&xi, &inv, eq, CostMode::MeanField);
                    Margin {
                        competitor: *spec,
                        cost: c,
                        margin: c - eq_cost,
                    }
                })
                .collect();
            PlayerMargins {
                player: i,
                x: p.x,
                equilibrium_cost: eq_cost,
                margins,
            }
        })
        .collect();
    Ok(NashReport::from_players(players))
}

/// Unilateral deviations in the `N`-player game: each player's competitors are
/// costed against the other players' equilibrium rates.
pub fn nash_check(
    positions: &[f64],
    eq: &EquilibriumSolution,
    battery: &[CompetitorSpec],
    exec: Execution,
) -> Result<NashReport> {
    let n = positions.len();
    if n == 0 {
        return Err(Error::InvalidInput("no players".into()));
    }
    if (eq.delta - 1.0 / n as f64).abs() > 1e-15 {
        return Err(Error::InvalidInput(format!(
            "equilibrium solved with δ = {}, expected 1/{n}",
            eq.delta
        )));
    }
    let paths = par::try_map(exec, positions, |&x| player_path(x, eq))?;
    let len = eq.grid().len();
    let mut total = vec![0.0; len];
    for p in &paths {
        for (t, r) in total.iter_mut().zip(&p.xi) {
            *t += r;
        }
    }
    let grid = eq.grid();
    let players = par::map(exec, &paths.iter().enumerate().collect::<Vec<_>>(), |&(i, p)| {
        let others: Vec<f64> = total.iter().zip(&p.xi).map(|(t, r)| t - r).collect();
        let mode = CostMode::NPlayer { others: &others, n };
        let eq_cost = cost(&p.xi, &p.inventory, eq, mode);
        let margins = battery
            .iter()
            .map(|spec| {
                let (inv, xi) = spec.generate(p, grid);
                let c = cost(&xi, &inv, eq, mode);
                Margin {
                    competitor: *spec,
                    cost: c,
                    margin: c - eq_cost,
                }
            })
            .collect();
        PlayerMargins {
            player: i,
            x: p.x,
            equilibrium_cost: eq_cost,
            margins,
        }
    });
    Ok(NashReport::from_players(players))
}

/// Aggregate `F(μ)_t = ∫ ξ^x_t ν₀(dx)` rebuilt from individual strategies.
///
/// Atoms of an empirical measure are summed exactly. For an analytic measure
/// the early-exit range `(f_min(T), f_max(T))` is integrated by the trapezoid
/// rule in `x` with `nodes` points shared by the two sides in proportion to
/// their mass. Outside that range every player holds until `T`, her rate is
/// affine in `x`, and the tails are integrated exactly from two anchor paths.
/// The level curve is recomputed by the trapezoid rule instead of reusing the
/// solver's.
pub fn aggregate_rate(eq: &EquilibriumSolution, nodes: usize, exec: Execution) -> Result<Vec<f64>> {
    let fc = f_curve(&eq.mu, &eq.coeffs, &eq.bundle)?;
    let path = |x: f64| player_path_with(x, eq, &fc.f, &fc.f_max, &fc.f_min).map(|p| p.xi);
    let len = eq.grid().len();
    let mut out = vec![0.0; len];
    let mix = match eq.dist.kind() {
        DistributionKind::Empirical(xs) => {
            let w = 1.0 / xs.len() as f64;
            for xi in par::try_map(exec, xs, |&x| path(x))? {
                axpy(&mut out, w, &xi);
            }
            return Ok(out);
        }
        DistributionKind::Analytic(mix) => *mix,
    };

    let (lo, hi) = match eq.market {
        Market::DropOut => (fc.f_min[len - 1].min(0.0), fc.f_max[len - 1].max(0.0)),
        Market::NoDropOut => (0.0, 0.0),
    };
    let sell_mass = mix.seller_tail(0.0).0 - mix.seller_tail(hi).0;
    let buy_mass = mix.buyer_tail(0.0).0 - mix.buyer_tail(lo).0;
    let n = nodes.max(4);
    let n_sell = if buy_mass == 0.0 {
        n
    } else if sell_mass == 0.0 {
        0
    } else {
        ((n as f64 * sell_mass / (sell_mass + buy_mass)).round() as usize).clamp(2, n - 2)
    };

    let mut points = Vec::with_capacity(n + 5);
    if sell_mass > 0.0 {
        trapezoid_nodes(&mut points, 0.0, hi, n_sell, |x| mix.seller_density(x));
    }
    if buy_mass > 0.0 {
        trapezoid_nodes(&mut points, lo, 0.0, n - n_sell, |x| mix.buyer_density(x));
    }
    if mix.atom() > 0.0 {
        points.push((0.0, mix.atom()));
    }
    // Anchors for the affine tails: two positions past each end of the range.
    let anchors = [hi + 1.0, hi + 2.0, lo - 1.0, lo - 2.0];
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.extend_from_slice(&anchors);
    let rates = par::try_map(exec, &xs, |&x| path(x))?;
    for ((_, w), xi) in points.iter().zip(&rates) {
        axpy(&mut out, *w, xi);
    }
    let k = points.len();
    for (side, (mass, excess)) in [(0, mix.seller_tail(hi)), (2, mix.buyer_tail(lo))] {
        if mass == 0.0 {
            continue;
        }
        // ξ(x) = ξ₁ + (ξ₂ − ξ₁)(|x − end| − 1) on the tail.
        let (r1, r2) = (&rates[k + side], &rates[k + side + 1]);
        for ((o, a), b) in out.iter_mut().zip(r1).zip(r2) {
            *o += mass * a + (b - a) * (excess - mass);
        }
    }
    Ok(out)
}

fn axpy(out: &mut [f64], w: f64, v: &[f64]) {
    for (o, x) in out.iter_mut().zip(v) {
        *o += w * x;
    }
}

fn trapezoid_nodes(out: &mut Vec<(f64, f64)>, a: f64, b: f64, n: usize, density: impl Fn(f64) -> f64) {
    let n = n.max(2);
    let h = (b - a) / (n - 1) as f64;
    for k in 0..n {
        let x = if k == n - 1 { b } else { a + k as f64 * h };
        let w = if k == 0 || k == n - 1 { 0.5 * h } else { h };
        out.push((x, w * density(x)));
    }
}

/// `sup_t |μ_t − F(μ)_t|`.
pub fn fixed_point_residual(eq: &EquilibriumSolution, nodes: usize, exec: Execution) -> Result<f64> {
    let f = aggregate_rate(eq, nodes, exec)?;
    Ok(eq
        .mu
        .iter()
        .zip(&f)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Default number of quadrature nodes for analytic measures.
pub const RESIDUAL_NODES: usize = 400;

/// Fills `eq.residual` with [`fixed_point_residual`].
pub fn attach_residual(eq: &mut EquilibriumSolution, exec: Execution) -> Result<f64> {
    let nodes = match eq.dist.kind() {
        DistributionKind::Empirical(xs) => xs.len(),
        DistributionKind::Analytic(_) => RESIDUAL_NODES,
    };
    let r = fixed_point_residual(eq, nodes, exec)?;
    eq.residual = Some(r);
    Ok(r)
}
