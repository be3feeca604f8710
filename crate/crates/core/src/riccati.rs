//! The singular terminal-value Riccati equation and the deterministic
//! quantities derived from it.
//!
//! `A` blows up at the horizon, so the solver integrates its reciprocal
//! `y = 1/A`, which satisfies the regular equation
//! `ẏ = −1/η + δκy/η + λy²` with `y(T) = 0`. Three quadratures ride along in
//! the same backward sweep:
//!
//! * `w(t) = ∫ₜᵀ λy`, which gives `α_t = A₀·exp(−∫₀ᵗ λy)`,
//! * `ℓ(t) = ∫ₜᵀ δκ/η`,
//! * `k(t) = ∫ₜᵀ λ·exp(−ℓ − 2w)`, which feeds the closed form of `h`.
//!
//! With `D = αy`, `E = D·exp(−∫₀ᵗ δκ/η)` and
//! `S_t = 1/A₀ + ∫₀ᵗ λ exp(∫₀ˢ δκ/η)/α² ds` one has
//! `h = 1/α − E·S` and `ḣ = α·S·exp(−∫₀ᵗ δκ/η)/η`, both finite up to and
//! including `t = T`.

use crate::error::{Error, Result};
use crate::model::{validate_assumptions, CoefficientSet};
use crate::quad;

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiBundle {
    delta: f64,
    dt: f64,
    grid: Vec<f64>,
    /// `1/A`, zero at `T`.
    pub y: Vec<f64>,
    /// `A`, `+∞` at `T`.
    pub a: Vec<f64>,
    /// `α_t = A_t exp(−∫₀ᵗ (A−δκ)/η)`.
    pub alpha: Vec<f64>,
    /// `exp(−∫₀ᵗ (A−δκ)/η) = α·y`.
    pub d: Vec<f64>,
    /// `exp(−∫₀ᵗ A/η)`.
    pub efac: Vec<f64>,
    /// Time derivative of `efac`, `−α exp(−∫₀ᵗ δκ/η)/η`.
    pub efac_dot: Vec<f64>,
    /// `∫₀ᵗ δκ/η`.
    pub kappa_int: Vec<f64>,
    pub h: Vec<f64>,
    pub h_dot: Vec<f64>,
}

/// Solves for `A^δ` on the coefficient grid with classical RK4.
pub fn solve_riccati(coeffs: &CoefficientSet, delta: f64) -> Result<RiccatiBundle> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidInput(format!("delta must lie in [0,1], got {delta}")));
    }
    let report = validate_assumptions(coeffs, delta);
    if !report.coefficients {
        return Err(Error::InvalidInput(format!(
            "cost coefficients violate positivity at grid index {}",
            report.violations[0].1
        )));
    }

    let m = coeffs.intervals();
    let n = m + 1;
    let dt = coeffs.dt();

    let rhs = |i: usize, s: f64, st: [f64; 4]| -> [f64; 4] {
        let c = coeffs.in_cell(i, s);
        let [y, w, l, _] = st;
        [
            -1.0 / c.eta + delta * c.kappa * y / c.eta + c.lambda * y * y,
            -c.lambda * y,
            -delta * c.kappa / c.eta,
            -c.lambda * (-l - 2.0 * w).exp(),
        ]
    };

    let mut states = vec![[0.0f64; 4]; n];
    for i in (0..m).rev() {
        // Step from t_{i+1} back to t_i; `s` is the position inside cell i.
        let st = states[i + 1];
        let h = -dt;
        let k1 = rhs(i, 1.0, st);
        let k2 = rhs(i, 0.5, axpy(st, 0.5 * h, k1));
        let k3 = rhs(i, 0.5, axpy(st, 0.5 * h, k2));
        let k4 = rhs(i, 0.0, axpy(st, h, k3));
        let mut next = st;
        for j in 0..4 {
            next[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if !next.iter().all(|v| v.is_finite()) || next[0] <= 0.0 {
            return Err(Error::Numerical(format!(
                "Riccati sweep broke down at t = {} (y = {})",
                coeffs.grid()[i],
                next[0]
            )));
        }
        states[i] = next;
    }

    let [y0, w0, l0, k0] = states[0];
    let a0 = 1.0 / y0;
    let scale = (l0 + 2.0 * w0).exp() / (a0 * a0);

    let mut b = RiccatiBundle {
        delta,
        dt,
        grid: coeffs.grid().to_vec(),
        y: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        alpha: Vec::with_capacity(n),
        d: Vec::with_capacity(n),
        efac: Vec::with_capacity(n),
        efac_dot: Vec::with_capacity(n),
        kappa_int: Vec::with_capacity(n),
        h: Vec::with_capacity(n),
        h_dot: Vec::with_capacity(n),
    };
    for (i, &[y, w, l, k]) in states.iter().enumerate() {
        let y = if i == m { 0.0 } else { y };
        let eta = coeffs.eta()[i];
        let alpha = a0 * (w - w0).exp();
        let lcum = l0 - l;
        let d = alpha * y;
        let efac = d * (-lcum).exp();
        let s = 1.0 / a0 + scale * (k0 - k);
        b.y.push(y);
        b.a.push(if i == m { f64::INFINITY } else { 1.0 / y });
        b.alpha.push(alpha);
        b.d.push(d);
        b.efac.push(efac);
        b.efac_dot.push(-alpha * (-lcum).exp() / eta);
        b.kappa_int.push(lcum);
        b.h.push(1.0 / alpha - efac * s);
        b.h_dot.push(alpha * s * (-lcum).exp() / eta);
    }
    // Exact endpoint values.
    b.h[0] = 0.0;
    b.efac[m] = 0.0;
    b.d[m] = 0.0;
    Ok(b)
}

fn axpy(x: [f64; 4], a: f64, v: [f64; 4]) -> [f64; 4] {
    [x[0] + a * v[0], x[1] + a * v[1], x[2] + a * v[2], x[3] + a * v[3]]
}

impl RiccatiBundle {
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
    pub fn horizon(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// `α^δ_T`, the terminal value of the forward `α` integration.
    pub fn alpha_terminal(&self) -> f64 {
        self.alpha[self.alpha.len() - 1]
    }

    /// `h^δ_T`, equal to `1/α^δ_T`.
    pub fn h_terminal(&self) -> f64 {
        self.h[self.h.len() - 1]
    }

    /// `h` at fraction `s` of cell `i`, cubic Hermite in `(h, ḣ)`.
    pub fn h_in_cell(&self, i: usize, s: f64) -> f64 {
        if s == 0.0 {
            return self.h[i];
        }
        quad::hermite(self.h[i], self.h[i + 1], self.h_dot[i], self.h_dot[i + 1], self.dt, s)
    }

    pub fn h_at(&self, t: f64) -> f64 {
        let (i, s) = quad::locate(0.0, self.dt, self.len(), t);
        self.h_in_cell(i, s)
    }

    pub fn efac_at(&self, t: f64) -> f64 {
        let (i, s) = quad::locate(0.0, self.dt, self.len(), t);
        if s == 0.0 {
            return self.efac[i];
        }
        quad::hermite(
            self.efac[i],
            self.efac[i + 1],
            self.efac_dot[i],
            self.efac_dot[i + 1],
            self.dt,
            s,
        )
        .max(0.0)
    }

    /// `exp(−∫ₛᵗ A/η)` for `0 ≤ s ≤ t ≤ T`.
    pub fn discount(&self, s: f64, t: f64) -> Result<f64> {
        let horizon = self.horizon();
        if !(0.0 <= s && s <= t && t <= horizon) {
            return Err(Error::InvalidInput(format!(
                "discount needs 0 ≤ s ≤ t ≤ T, got s = {s}, t = {t}"
            )));
        }
        if s == t {
            return Ok(1.0);
        }
        if t == horizon {
            return Ok(0.0);
        }
        Ok((self.efac_at(t) / self.efac_at(s)).clamp(0.0, 1.0))
    }

    /// `exp(−∫ A/η)` between grid nodes `i ≤ j`.
    pub fn discount_nodes(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i <= j);
        if i == j {
            1.0
        } else {
            self.efac[j] / self.efac[i]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_constant_coefficients;
    use approx::assert_abs_diff_eq;

    fn section5(m: usize) -> CoefficientSet {
        make_constant_coefficients(5.0, 10.0, 5.0, 1.0, m).unwrap()
    }

    #[test]
    fn coth_closed_form() {
        let c = section5(2000);
        let b = solve_riccati(&c, 0.0).unwrap();
        assert_abs_diff_eq!(b.a[0], 5.0 / 1f64.tanh(), epsilon = 1e-10);
        for (i, &t) in c.grid().iter().enumerate().take(2000) {
            let exact = 5.0 / (1.0 - t).tanh();
            assert!(((b.a[i] - exact) / exact).abs() < 1e-9, "t = {t}");
            assert_abs_diff_eq!(b.h[i], t.sinh() / 5.0, epsilon = 1e-12);
            assert_abs_diff_eq!(b.h_dot[i], t.cosh() / 5.0, epsilon = 1e-12);
            assert_abs_diff_eq!(b.efac[i], (1.0 - t).sinh() / 1f64.sinh(), epsilon = 1e-12);
        }
        assert!(b.a[2000].is_infinite());
        assert_abs_diff_eq!(b.alpha_terminal(), 5.0 / 1f64.sinh(), epsilon = 1e-10);
        assert_abs_diff_eq!(b.h_terminal() * b.alpha_terminal(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.h_dot[2000], 1f64.cosh() / 5.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_case_is_exact() {
        let c = make_constant_coefficients(1.0, 0.0, 0.0, 1.0, 2).unwrap();
        for delta in [0.0, 0.5, 1.0] {
            let b = solve_riccati(&c, delta).unwrap();
            assert_eq!(b.y, vec![1.0, 0.5, 0.0]);
            assert_eq!(&b.a[..2], &[1.0, 2.0]);
            assert_abs_diff_eq!(b.h[1], 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(b.discount(0.0, 0.5).unwrap(), 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(b.discount(0.0, 0.25).unwrap(), 0.75, epsilon = 1e-15);
        }
    }

    #[test]
    fn discount_arguments() {
        let b = solve_riccati(&section5(200), 0.0).unwrap();
        assert_eq!(b.discount(0.3, 0.3).unwrap(), 1.0);
        assert_eq!(b.discount(0.3, 1.0).unwrap(), 0.0);
        assert!(matches!(b.discount(0.5, 0.2), Err(Error::InvalidInput(_))));
        let t: f64 = 0.4137;
        assert_abs_diff_eq!(
            b.discount(0.0, t).unwrap(),
            (1.0 - t).sinh() / 1f64.sinh(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn comparison_principle_and_alpha_monotone() {
        let c = section5(2000);
        let b0 = solve_riccati(&c, 0.0).unwrap();
        let b7 = solve_riccati(&c, 1.0 / 7.0).unwrap();
        for i in 0..2000 {
            assert!(b0.a[i] <= b7.a[i]);
        }
        for b in [&b0, &b7] {
            assert!(b.alpha.windows(2).all(|w| w[1] <= w[0]));
            assert!(b.h.windows(2).all(|w| w[1] > w[0]));
            assert!(b.alpha_terminal() > 0.0);
        }
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(matches!(
            solve_riccati(&section5(10), 1.5),
            Err(Error::InvalidInput(_))
        ));
    }
}
