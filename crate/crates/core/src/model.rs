//! Cost coefficients, initial-position distributions and the standing
//! admissibility conditions on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

/// Mass below which an exponential tail counts as negligible.
pub const TAIL_CUTOFF: f64 = 1e-12;

/// Time-dependent cost coefficients sampled on a uniform grid `0 = t_0 < … < t_M = T`.
///
/// Values between nodes are linear interpolants of the samples. The derivative
/// samples are exact for the analytic presets and finite differences otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    horizon: f64,
    dt: f64,
    grid: Vec<f64>,
    eta: Vec<f64>,
    kappa: Vec<f64>,
    lambda: Vec<f64>,
    eta_dot: Vec<f64>,
    kappa_dot: Vec<f64>,
}

/// Coefficient values at a single (possibly off-grid) time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSample {
    pub eta: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub eta_dot: f64,
    pub kappa_dot: f64,
}

pub fn make_constant_coefficients(
    eta: f64,
    kappa: f64,
    lambda: f64,
    horizon: f64,
    m: usize,
) -> Result<CoefficientSet> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidCoefficients(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidCoefficients(format!(
            "grid needs at least 2 intervals, got {m}"
        )));
    }
    let n = m + 1;
    CoefficientSet::from_parts(
        horizon,
        vec![eta; n],
        vec![kappa; n],
        vec![lambda; n],
        vec![0.0; n],
        vec![0.0; n],
    )
}

impl CoefficientSet {
    fn from_parts(
        horizon: f64,
        eta: Vec<f64>,
        kappa: Vec<f64>,
        lambda: Vec<f64>,
        eta_dot: Vec<f64>,
        kappa_dot: Vec<f64>,
    ) -> Result<Self> {
        let n = eta.len();
        let m = n - 1;
        let dt = horizon / m as f64;
        let grid = (0..n)
            .map(|i| if i == m { horizon } else { i as f64 * dt })
            .collect();
        let set = CoefficientSet {
            horizon,
            dt,
            grid,
            eta,
            kappa,
            lambda,
            eta_dot,
            kappa_dot,
        };
        set.check_basic()?;
        Ok(set)
    }

    /// Builds a coefficient set from samples on an arbitrary increasing time
    /// grid starting at 0, resampled linearly onto a uniform grid with `m`
    /// intervals. Missing derivatives are taken from centred differences of
    /// the resampled values.
    pub fn from_samples(
        times: &[f64],
        eta: &[f64],
        kappa: &[f64],
        lambda: &[f64],
        derivatives: Option<(&[f64], &[f64])>,
        m: usize,
    ) -> Result<Self> {
        let k = times.len();
        if k < 2 || [eta.len(), kappa.len(), lambda.len()].iter().any(|&l| l != k) {
            return Err(Error::InvalidCoefficients(
                "coefficient columns must have equal length ≥ 2".into(),
            ));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::InvalidCoefficients(
                "sample times must start at 0 and increase strictly".into(),
            ));
        }
        if m < 2 {
            return Err(Error::InvalidCoefficients(format!(
                "grid needs at least 2 intervals, got {m}"
            )));
        }
        let horizon = times[k - 1];
        let dt = horizon / m as f64;
        let resample = |col: &[f64]| -> Vec<f64> {
            (0..=m)
                .map(|i| {
                    let t = (i as f64 * dt).min(horizon);
                    let j = times.partition_point(|&s| s <= t).clamp(1, k - 1);
                    let s = (t - times[j - 1]) / (times[j] - times[j - 1]);
                    quad::lerp(col[j - 1], col[j], s)
                })
                .collect()
        };
        let (eta_u, kappa_u, lambda_u) = (resample(eta), resample(kappa), resample(lambda));
        let (eta_dot, kappa_dot) = match derivatives {
            Some((ed, kd)) => {
                if ed.len() != k || kd.len() != k {
                    return Err(Error::InvalidCoefficients(
                        "derivative columns must match the sample times".into(),
                    ));
                }
                (resample(ed), resample(kd))
            }
            None => (finite_difference(&eta_u, dt), finite_difference(&kappa_u, dt)),
        };
        CoefficientSet::from_parts(horizon, eta_u, kappa_u, lambda_u, eta_dot, kappa_dot)
    }

    fn check_basic(&self) -> Result<()> {
        let all_finite = [
            &self.eta,
            &self.kappa,
            &self.lambda,
            &self.eta_dot,
            &self.kappa_dot,
        ]
        .iter()
        .all(|c| c.iter().all(|v| v.is_finite()));
        if !all_finite {
            return Err(Error::InvalidCoefficients("non-finite coefficient".into()));
        }
        if let Some(i) = self.eta.iter().position(|&e| e <= 0.0) {
            return Err(Error::InvalidCoefficients(format!(
                "eta must be positive (eta[{i}] = {})",
                self.eta[i]
            )));
        }
        if let Some(i) = self.kappa.iter().position(|&k| k < 0.0) {
            return Err(Error::InvalidCoefficients(format!(
                "kappa must be non-negative (kappa[{i}] = {})",
                self.kappa[i]
            )));
        }
        if let Some(i) = self.lambda.iter().position(|&l| l < 0.0) {
            return Err(Error::InvalidCoefficients(format!(
                "lambda must be non-negative (lambda[{i}] = {})",
                self.lambda[i]
            )));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    /// Number of grid intervals `M`.
    pub fn intervals(&self) -> usize {
        self.grid.len() - 1
    }
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }
    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }
    pub fn eta_dot(&self) -> &[f64] {
        &self.eta_dot
    }
    pub fn kappa_dot(&self) -> &[f64] {
        &self.kappa_dot
    }

    /// Coefficients at node `i`.
    pub fn node(&self, i: usize) -> CoefficientSample {
        CoefficientSample {
            eta: self.eta[i],
            kappa: self.kappa[i],
            lambda: self.lambda[i],
            eta_dot: self.eta_dot[i],
            kappa_dot: self.kappa_dot[i],
        }
    }

    /// Coefficients at fraction `s` of the cell `[t_i, t_{i+1}]`.
    pub fn in_cell(&self, i: usize, s: f64) -> CoefficientSample {
        if s == 0.0 {
            return self.node(i);
        }
        let l = |v: &[f64]| quad::lerp(v[i], v[i + 1], s);
        CoefficientSample {
            eta: l(&self.eta),
            kappa: l(&self.kappa),
            lambda: l(&self.lambda),
            eta_dot: l(&self.eta_dot),
            kappa_dot: l(&self.kappa_dot),
        }
    }

    pub fn at(&self, t: f64) -> CoefficientSample {
        let (i, s) = quad::locate(0.0, self.dt, self.grid.len(), t);
        self.in_cell(i, s)
    }

    /// Same coefficients on a uniform grid with `m` intervals.
    pub fn regrid(&self, m: usize) -> Result<Self> {
        if m == self.intervals() {
            return Ok(self.clone());
        }
        CoefficientSet::from_samples(
            &self.grid,
            &self.eta,
            &self.kappa,
            &self.lambda,
            Some((&self.eta_dot, &self.kappa_dot)),
            m,
        )
    }
}

fn finite_difference(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (v[1] - v[0]) / dt
            } else if i == n - 1 {
                (v[n - 1] - v[n - 2]) / dt
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

pub(crate) fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Mixture of a seller exponential on `[0,∞)`, a mirrored buyer exponential on
/// `(−∞,0]` and an atom at zero carrying the remaining mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialMixture {
    pub w_sell: f64,
    pub mean_sell: f64,
    pub w_buy: f64,
    pub mean_buy: f64,
}

impl ExponentialMixture {
    /// Mass at zero; rounding residue below `1e-12` counts as none.
    pub fn atom(&self) -> f64 {
        let a = 1.0 - self.w_sell - self.w_buy;
        if a < 1e-12 {
            0.0
        } else {
            a
        }
    }

    /// Position beyond which the seller tail is below [`TAIL_CUTOFF`].
    pub fn seller_cutoff(&self) -> f64 {
        if self.w_sell <= TAIL_CUTOFF {
            0.0
        } else {
            self.mean_sell * (self.w_sell / TAIL_CUTOFF).ln()
        }
    }

    /// Seller density `w·e^{−x/m}/m` for `x > 0`.
    pub fn seller_density(&self, x: f64) -> f64 {
        self.w_sell * (-x / self.mean_sell).exp() / self.mean_sell
    }

    /// Buyer density at `x < 0`.
    pub fn buyer_density(&self, x: f64) -> f64 {
        self.w_buy * (x / self.mean_buy).exp() / self.mean_buy
    }

    /// `(ν₀((a,∞)), ∫_{(a,∞)} (x − a) ν₀(dx))` for `a ≥ 0`.
    pub fn seller_tail(&self, a: f64) -> (f64, f64) {
        let mass = self.w_sell * (-a / self.mean_sell).exp();
        (mass, mass * self.mean_sell)
    }

    /// `(ν₀((−∞,b)), ∫_{(−∞,b)} (b − x) ν₀(dx))` for `b ≤ 0`.
    pub fn buyer_tail(&self, b: f64) -> (f64, f64) {
        let mass = self.w_buy * (b / self.mean_buy).exp();
        (mass, mass * self.mean_buy)
    }

    pub fn buyer_cutoff(&self) -> f64 {
        if self.w_buy <= TAIL_CUTOFF {
            0.0
        } else {
            -self.mean_buy * (self.w_buy / TAIL_CUTOFF).ln()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    Analytic(ExponentialMixture),
    /// Sorted atom positions, each with mass `1/N`.
    Empirical(Vec<f64>),
}

/// Initial-position measure `ν₀`, accessed through its tails
/// `q₀(x) = ν₀([x,∞))` and `p₀(x) = ν₀((−∞,x])`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution {
    kind: DistributionKind,
    mean: f64,
}

pub fn make_exponential_sellers(mean_pos: f64) -> Result<InitialDistribution> {
    if !(mean_pos.is_finite() && mean_pos > 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "mean must be positive, got {mean_pos}"
        )));
    }
    make_two_sided(1.0, mean_pos, 0.0, 1.0)
}

pub fn make_two_sided(
    w_sell: f64,
    mean_sell: f64,
    w_buy: f64,
    mean_buy: f64,
) -> Result<InitialDistribution> {
    if !(w_sell >= 0.0 && w_buy >= 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "weights must be non-negative, got {w_sell} and {w_buy}"
        )));
    }
    if w_sell + w_buy > 1.0 + 1e-12 {
        return Err(Error::InvalidDistribution(format!(
            "weights sum to {} > 1",
            w_sell + w_buy
        )));
    }
    if !(mean_sell.is_finite() && mean_sell > 0.0 && mean_buy.is_finite() && mean_buy > 0.0) {
        return Err(Error::InvalidDistribution(
            "side means must be positive".into(),
        ));
    }
    let mix = ExponentialMixture {
        w_sell,
        mean_sell,
        w_buy,
        mean_buy,
    };
    Ok(InitialDistribution {
        mean: w_sell * mean_sell - w_buy * mean_buy,
        kind: DistributionKind::Analytic(mix),
    })
}

pub fn make_empirical(positions: &[f64]) -> Result<InitialDistribution> {
    if positions.is_empty() {
        return Err(Error::InvalidDistribution("empty position list".into()));
    }
    if positions.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidDistribution("non-finite position".into()));
    }
    let mut sorted = positions.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Ok(InitialDistribution {
        kind: DistributionKind::Empirical(sorted),
        mean,
    })
}

impl InitialDistribution {
    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn is_empirical(&self) -> bool {
        matches!(self.kind, DistributionKind::Empirical(_))
    }

    /// `ν₀([x,∞))`.
    pub fn q0(&self, x: f64) -> f64 {
        match &self.kind {
            DistributionKind::Analytic(m) => {
                if x > 0.0 {
                    m.w_sell * (-x / m.mean_sell).exp()
                } else if x == 0.0 {
                    m.w_sell + m.atom()
                } else {
                    m.w_sell + m.atom() + m.w_buy * (-(x / m.mean_buy).exp_m1())
                }
            }
            DistributionKind::Empirical(xs) => {
                let below = xs.partition_point(|&p| p < x);
                (xs.len() - below) as f64 / xs.len() as f64
            }
        }
    }

    /// `ν₀((−∞,x])`.
    pub fn p0(&self, x: f64) -> f64 {
        match &self.kind {
            DistributionKind::Analytic(m) => {
                if x < 0.0 {
                    m.w_buy * (x / m.mean_buy).exp()
                } else if x == 0.0 {
                    m.w_buy + m.atom()
                } else {
                    m.w_buy + m.atom() + m.w_sell * (-(-x / m.mean_sell).exp_m1())
                }
            }
            DistributionKind::Empirical(xs) => {
                xs.partition_point(|&p| p <= x) as f64 / xs.len() as f64
            }
        }
    }

    /// Integrated seller tail `Q₀(x) = ∫₀ˣ q₀(y) dy` for `x ≥ 0`.
    pub fn integrated_tail(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match &self.kind {
            DistributionKind::Analytic(m) => {
                m.w_sell * m.mean_sell * (-(-x / m.mean_sell).exp_m1())
            }
            DistributionKind::Empirical(xs) => {
                xs.iter().map(|&p| p.clamp(0.0, x)).sum::<f64>() / xs.len() as f64
            }
        }
    }

    /// `∫₀ʸ q₀(u) du` for any real `y` (negative below zero).
    pub fn tail_antiderivative(&self, y: f64) -> f64 {
        match &self.kind {
            DistributionKind::Analytic(m) => {
                if y >= 0.0 {
                    self.integrated_tail(y)
                } else {
                    y - m.w_buy * m.mean_buy * (y / m.mean_buy).exp_m1()
                }
            }
            DistributionKind::Empirical(xs) => {
                let n = xs.len() as f64;
                if y >= 0.0 {
                    xs.iter().map(|&p| p.clamp(0.0, y)).sum::<f64>() / n
                } else {
                    -xs.iter().map(|&p| p.clamp(y, 0.0) - y).sum::<f64>() / n
                }
            }
        }
    }

    /// Whether `q₀` has jumps.
    pub fn has_atoms(&self) -> bool {
        match &self.kind {
            DistributionKind::Analytic(m) => m.atom() > 0.0,
            DistributionKind::Empirical(_) => true,
        }
    }

    /// `sup supp(ν₀)`, possibly `+∞`.
    pub fn supp_upper(&self) -> f64 {
        match &self.kind {
            DistributionKind::Analytic(m) => {
                if m.w_sell > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            DistributionKind::Empirical(xs) => xs[xs.len() - 1],
        }
    }

    /// Mirror image `x ↦ −x` of the measure.
    pub fn reflect(&self) -> Self {
        let kind = match &self.kind {
            DistributionKind::Analytic(m) => DistributionKind::Analytic(ExponentialMixture {
                w_sell: m.w_buy,
                mean_sell: m.mean_buy,
                w_buy: m.w_sell,
                mean_buy: m.mean_sell,
            }),
            DistributionKind::Empirical(xs) => {
                DistributionKind::Empirical(xs.iter().rev().map(|x| -x).collect())
            }
        };
        InitialDistribution {
            kind,
            mean: -self.mean,
        }
    }
}

/// Named assumption on the cost coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assumption {
    /// `η > 0`, `κ ≥ 0`, `λ ≥ 0`.
    Coefficients,
    /// `λ + δκ̇ ≥ 0`.
    MeanField,
    /// `η − δκ > 0` and `λ − δκ ≥ 0`.
    NPlayer,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub delta: f64,
    pub coefficients: bool,
    pub mean_field: bool,
    pub n_player: bool,
    /// `(assumption, grid index)` for every failed pointwise inequality.
    pub violations: Vec<(Assumption, usize)>,
}

impl AssumptionReport {
    pub fn is_pass(&self) -> bool {
        self.coefficients && self.mean_field && self.n_player
    }

    /// Conditions needed by the mean-field solver (the `N`-player ones are ignored).
    pub fn mean_field_pass(&self) -> bool {
        self.coefficients && self.mean_field
    }

    pub(crate) fn into_error(self, need_n_player: bool) -> Result<()> {
        let ok = if need_n_player {
            self.is_pass()
        } else {
            self.mean_field_pass()
        };
        if ok {
            return Ok(());
        }
        let failed: Vec<_> = self
            .violations
            .iter()
            .filter(|(a, _)| need_n_player || *a != Assumption::NPlayer)
            .collect();
        let (a, i) = failed[0];
        Err(Error::Assumption(format!(
            "{a:?} fails at grid index {i} (delta = {}, {} violations)",
            self.delta,
            failed.len()
        )))
    }
}

pub fn validate_assumptions(coeffs: &CoefficientSet, delta: f64) -> AssumptionReport {
    let mut violations = Vec::new();
    for i in 0..coeffs.grid.len() {
        let c = coeffs.node(i);
        if !(c.eta > 0.0 && c.kappa >= 0.0 && c.lambda >= 0.0) {
            violations.push((Assumption::Coefficients, i));
        }
        if c.lambda + delta * c.kappa_dot < 0.0 {
            violations.push((Assumption::MeanField, i));
        }
        if !(c.eta - delta * c.kappa > 0.0 && c.lambda - delta * c.kappa >= 0.0) {
            violations.push((Assumption::NPlayer, i));
        }
    }
    let has = |a| violations.iter().any(|(b, _)| *b == a);
    AssumptionReport {
        delta,
        coefficients: !has(Assumption::Coefficients),
        mean_field: !has(Assumption::MeanField),
        n_player: !has(Assumption::NPlayer),
        violations,
    }
}
