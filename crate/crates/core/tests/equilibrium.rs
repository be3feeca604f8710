use approx::assert_abs_diff_eq;
use dropout_mfg::equilibrium::{psi_curve, solve_equilibrium, Market, SolverOptions};
use dropout_mfg::quad;
use dropout_mfg::*;
use proptest::prelude::*;

fn section5(m: usize) -> CoefficientSet {
    make_constant_coefficients(5.0, 10.0, 5.0, 1.0, m).unwrap()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn grid_refinement() {
    for d in [make_exponential_sellers(1.5).unwrap(), make_two_sided(0.8, 1.5, 0.2, 1.0).unwrap()] {
        let a = solve_mfg(&section5(2000), &d).unwrap();
        let b = solve_mfg(&section5(4000), &d).unwrap();
        let fine: Vec<f64> = b.mu.iter().step_by(2).copied().collect();
        assert!(sup_diff(&a.mu, &fine) <= 1e-6);
    }
}

/// Right side of the backward integral equation for `μ`, evaluated by nested
/// trapezoid sums on the solved trajectory.
#[test]
fn backward_integral_equation_holds() {
    let c = section5(4000);
    for d in [make_exponential_sellers(1.5).unwrap(), make_two_sided(0.8, 1.5, 0.2, 1.0).unwrap()] {
        let eq = solve_mfg(&c, &d).unwrap();
        let dt = c.dt();
        let n = eq.mu.len();
        let kappa_h_mu: Vec<f64> = (0..n).map(|i| 10.0 * eq.bundle.h[i] * eq.mu[i]).collect();
        let from_right = |v: &[f64]| {
            let mut out = vec![0.0; v.len()];
            for i in (0..v.len() - 1).rev() {
                out[i] = out[i + 1] + 0.5 * dt * (v[i] + v[i + 1]);
            }
            out
        };
        let g = from_right(&kappa_h_mu);
        let v = from_right(&eq.mu);
        let integrand: Vec<f64> = (0..n)
            .map(|i| {
                let tails = d.q0(eq.x_hat - g[i]) + d.p0(0.0);
                10.0 / 5.0 * tails * eq.mu[i] + 5.0 / 5.0 * v[i]
            })
            .collect();
        let rhs = from_right(&integrand);
        let err = (0..n)
            .map(|i| (eq.mu[n - 1] + rhs[i] - eq.mu[i]).abs())
            .fold(0.0f64, f64::max);
        assert!(err <= 1e-6, "max error {err:e}");
    }
}

#[test]
fn terminal_rate_matches_limit_formula() {
    let c = section5(2000);
    let d = make_exponential_sellers(1.5).unwrap();
    let eq = solve_mfg(&c, &d).unwrap();
    assert_eq!(
        eq.mu_terminal,
        terminal_rate(eq.x_hat, &d, eq.alpha_terminal, 5.0).unwrap()
    );
    // (α_T/η_T) ∫_{x ≥ x̂} (x − x̂) ν₀(dx) by Simpson on the truncated density
    let n = 200_000;
    let (a, b) = (eq.x_hat, 60.0);
    let h = (b - a) / n as f64;
    let g = |x: f64| (x - eq.x_hat) * (-x / 1.5).exp() / 1.5;
    let mut s = g(a) + g(b);
    for k in 1..n {
        s += g(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let limit = eq.alpha_terminal / 5.0 * s * h / 3.0;
    assert_abs_diff_eq!(eq.mu_terminal, limit, epsilon = 1e-6);
}

#[test]
fn a_priori_bounds() {
    let c = section5(2000);
    for d in [make_exponential_sellers(1.5).unwrap(), make_two_sided(0.8, 1.5, 0.2, 1.0).unwrap()] {
        for delta in [0.0, 1.0 / 7.0] {
            let eq = solve_equilibrium(&c, &d, delta, Market::DropOut, &SolverOptions::default()).unwrap();
            let mu_t = eq.mu_terminal.abs();
            for (i, &t) in c.grid().iter().enumerate() {
                let v = eq.mu[i].abs();
                assert!(eq.mu[i] > 0.0);
                assert!(v >= (-eq.k1 * (1.0 - t)).exp() * mu_t * (1.0 - 1e-12));
                assert!(v <= mu_t * (eq.k2 * (1.0 - t)).exp() * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn baseline_uses_linear_terminal_map() {
    let c = section5(2000);
    let d = make_exponential_sellers(1.5).unwrap();
    let base = solve_no_dropout_baseline(&c, &d).unwrap();
    assert!(base.iterations <= 60, "{} evaluations", base.iterations);
    assert_abs_diff_eq!(
        base.mu_terminal,
        base.alpha_terminal / 5.0 * (1.5 - base.x_hat),
        epsilon = 1e-14
    );
    let drop = solve_mfg(&c, &d).unwrap();
    assert!(base.mu[0] > drop.mu[0]);
    assert!(base.mu[2000] < drop.mu[2000]);
}

#[test]
fn nplayer_with_duplicate_positions() {
    let c = section5(1000);
    let dup = solve_nplayer(&c, &[1.0; 5]).unwrap();
    let again = solve_nplayer(&c, &[1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
    assert_eq!(dup.mu, again.mu);
    assert!(dup.mu.iter().all(|&m| m > 0.0));
    assert!(dup.x_hat < 1.0);
}

#[test]
fn single_player_game() {
    // With one player her own impact enters at full weight, so κ must stay below η.
    let c = make_constant_coefficients(5.0, 2.0, 5.0, 1.0, 2000).unwrap();
    let eq = solve_nplayer(&c, &[1.0]).unwrap();
    assert_eq!(eq.delta, 1.0);
    let p = player_path(1.0, &eq).unwrap();
    assert!(sup_diff(&p.xi, &eq.mu) <= 1e-6);
    assert!(matches!(solve_nplayer(&section5(100), &[1.0]), Err(Error::Assumption(_))));
}

#[test]
fn negative_mean_is_solved_by_reflection() {
    let c = section5(2000);
    let d = make_two_sided(0.2, 1.0, 0.8, 1.5).unwrap();
    let mirrored = make_two_sided(0.8, 1.5, 0.2, 1.0).unwrap();
    let a = solve_mfg(&c, &d).unwrap();
    let b = solve_mfg(&c, &mirrored).unwrap();
    assert!(a.reflected);
    assert_eq!(a.x_hat, -b.x_hat);
    assert!(sup_diff(&a.mu, &b.mu.iter().map(|v| -v).collect::<Vec<_>>()) <= 1e-12);
    assert!(a.mu.iter().all(|&m| m < 0.0));
    assert_eq!(a.dist, d);
}

#[test]
fn psi_curve_modes_agree() {
    let c = section5(500);
    let d = make_two_sided(0.8, 1.5, 0.2, 1.0).unwrap();
    let b = solve_riccati(&c, 0.0).unwrap();
    let cs: Vec<f64> = (0..16).map(|k| k as f64 * 0.1).collect();
    let p = psi_curve(&cs, &c, &d, &b, Market::DropOut, Execution::Parallel).unwrap();
    let s = psi_curve(&cs, &c, &d, &b, Market::DropOut, Execution::Sequential).unwrap();
    assert_eq!(p, s);
}

#[test]
fn f_curve_ends_at_x_hat() {
    let c = section5(2000);
    let d = make_exponential_sellers(1.5).unwrap();
    let eq = solve_mfg(&c, &d).unwrap();
    let integrand: Vec<f64> = (0..=2000).map(|i| 10.0 * eq.bundle.h[i] * eq.mu[i]).collect();
    let f = quad::cumulative_trapezoid(&integrand, c.dt());
    assert_abs_diff_eq!(f[2000], eq.x_hat, epsilon = 1e-6);
    assert!(sup_diff(&f, &eq.f_curve) <= 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn psi_increases_and_root_is_interior(mean in 0.2f64..4.0, w_buy in 0.0f64..0.45) {
        let c = section5(300);
        let d = make_two_sided(1.0 - w_buy, mean, w_buy, 1.0).unwrap();
        prop_assume!(d.mean() > 0.05);
        let b = solve_riccati(&c, 0.0).unwrap();
        let eq = find_x_hat(&c, &d, &b, Market::DropOut, &SolverOptions::default()).unwrap();
        let cs: Vec<f64> = (0..20).map(|k| eq.c_upper * k as f64 / 19.0).collect();
        let ps = psi_curve(&cs, &c, &d, &b, Market::DropOut, Execution::Sequential).unwrap();
        prop_assert!(ps.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(eq.x_hat > 0.0);
        prop_assert!(eq.mu.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn nplayer_is_permutation_invariant(mut xs in prop::collection::vec(0.01f64..4.0, 3..9), seed in 0usize..1000) {
        let c = section5(200);
        let a = solve_nplayer(&c, &xs).unwrap();
        let k = seed % xs.len();
        xs.rotate_left(k);
        xs.reverse();
        let b = solve_nplayer(&c, &xs).unwrap();
        prop_assert_eq!(a.mu, b.mu);
        prop_assert_eq!(a.x_hat, b.x_hat);
    }
}
