//! Quadrature and interpolation helpers on uniform grids.

/// Composite trapezoid rule over samples spaced `dt` apart.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Running trapezoid integral, `out[i] = ∫_{t_0}^{t_i}`.
pub fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * dt * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Integral over the single cell `[t_i, t_{i+1}]` from a local cubic through
/// four neighbouring samples. Falls back to the trapezoid rule on grids with
/// fewer than four points.
pub fn cell_integral(values: &[f64], dt: f64, i: usize) -> f64 {
    let n = values.len();
    debug_assert!(i + 1 < n);
    if n < 4 {
        return 0.5 * dt * (values[i] + values[i + 1]);
    }
    let v = values;
    if i == 0 {
        dt * (9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3]) / 24.0
    } else if i + 2 == n {
        dt * (v[n - 4] - 5.0 * v[n - 3] + 19.0 * v[n - 2] + 9.0 * v[n - 1]) / 24.0
    } else {
        dt * (-v[i - 1] + 13.0 * v[i] + 13.0 * v[i + 1] - v[i + 2]) / 24.0
    }
}

/// Fourth-order running integral from the left end, `out[i] = ∫_{t_0}^{t_i}`.
pub fn cumulative(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for i in 1..values.len() {
        out[i] = out[i - 1] + cell_integral(values, dt, i - 1);
    }
    out
}

/// Fourth-order running integral from the right end, `out[i] = ∫_{t_i}^{t_M}`.
pub fn cumulative_from_right(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        out[i] = out[i + 1] + cell_integral(values, dt, i);
    }
    out
}

/// Cubic Hermite interpolation on a cell of width `dt` at fraction `s ∈ [0,1]`.
#[inline]
pub fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, dt: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * dt * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * dt * d1
}

#[inline]
pub fn lerp(a: f64, b: f64, s: f64) -> f64 {
    a + (b - a) * s
}

/// Cell index and in-cell fraction of `t` on the uniform grid `t0 + i*dt`,
/// `i = 0..n`. Times outside the grid are clamped to its ends.
pub fn locate(t0: f64, dt: f64, n: usize, t: f64) -> (usize, f64) {
    debug_assert!(n >= 2);
    let x = (t - t0) / dt;
    if x <= 0.0 {
        return (0, 0.0);
    }
    let last = n - 2;
    let i = (x.floor() as usize).min(last);
    let s = (x - i as f64).clamp(0.0, 1.0);
    (i, s)
}

/// Piecewise-linear interpolation of grid samples at time `t`.
pub fn interp(values: &[f64], t0: f64, dt: f64, t: f64) -> f64 {
    let (i, s) = locate(t0, dt, values.len(), t);
    lerp(values[i], values[i + 1], s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn samples(n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, f64) {
        let dt = 1.0 / (n - 1) as f64;
        ((0..n).map(|i| f(i as f64 * dt)).collect(), dt)
    }

    #[test]
    fn cubic_rule_is_exact_on_cubics() {
        let p = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t - 4.0 * t * t * t;
        let (v, dt) = samples(11, p);
        let c = cumulative(&v, dt);
        for (i, ci) in c.iter().enumerate() {
            let t = i as f64 * dt;
            let exact = t - t * t + t.powi(3) - t.powi(4);
            assert_abs_diff_eq!(*ci, exact, epsilon = 1e-14);
        }
        let r = cumulative_from_right(&v, dt);
        assert_abs_diff_eq!(r[0], c[10], epsilon = 1e-14);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |n| {
            let (v, dt) = samples(n, f64::exp);
            (cumulative(&v, dt)[n - 1] - (1f64.exp() - 1.0)).abs()
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn trapezoid_matches_cumulative_end() {
        let (v, dt) = samples(101, |t| t.sin());
        let c = cumulative_trapezoid(&v, dt);
        assert_abs_diff_eq!(c[100], trapezoid(&v, dt), epsilon = 1e-15);
        assert_abs_diff_eq!(c[100], 1.0 - 1f64.cos(), epsilon = 1e-5);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |t: f64| t * t * t - t;
        let df = |t: f64| 3.0 * t * t - 1.0;
        let (a, b) = (0.3, 0.55);
        let dt = b - a;
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let v = hermite(f(a), f(b), df(a), df(b), dt, s);
            assert_abs_diff_eq!(v, f(a + s * dt), epsilon = 1e-14);
        }
    }

    #[test]
    fn locate_clamps() {
        assert_eq!(locate(0.0, 0.5, 3, -1.0), (0, 0.0));
        assert_eq!(locate(0.0, 0.5, 3, 2.0), (1, 1.0));
        let (i, s) = locate(0.0, 0.5, 3, 0.75);
        assert_eq!(i, 1);
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-15);
    }
}
