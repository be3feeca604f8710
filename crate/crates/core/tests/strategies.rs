use approx::assert_abs_diff_eq;
use dropout_mfg::experiments::{quantile_positions, ScenarioSpec};
use dropout_mfg::quad;
use dropout_mfg::strategies::*;
use dropout_mfg::*;
use proptest::prelude::*;

fn one_sided() -> EquilibriumSolution {
    let spec = ScenarioSpec::one_sided(2000).unwrap();
    solve_mfg(&spec.coeffs, &spec.dist).unwrap()
}

/// Inventory from the nested double-integral representation, with every
/// exponential weight rebuilt from `A` by the trapezoid rule.
fn inventory_by_double_integral(eq: &EquilibriumSolution, x: f64, tau: f64, k: usize) -> f64 {
    let c = &eq.coeffs;
    let dt = c.dt();
    let last = ((tau / dt).floor() as usize).min(c.intervals() - 1);
    let a_eta: Vec<f64> = (0..=last).map(|i| eq.bundle.a[i] / c.eta()[i]).collect();
    let p = quad::cumulative_trapezoid(&a_eta, dt);
    let q_int: Vec<f64> = (0..=last)
        .map(|i| (eq.bundle.a[i] - eq.bundle.delta() * c.kappa()[i]) / c.eta()[i])
        .collect();
    let q = quad::cumulative_trapezoid(&q_int, dt);
    // inner(s) = ∫ₛ^τ κμ e^{−∫ₛᵘ A/η} du, as e^{P_s} ∫ₛ^τ κμ e^{−P_u} du
    let w: Vec<f64> = (0..=last).map(|u| c.kappa()[u] * eq.mu[u] * (-p[u]).exp()).collect();
    let mut tail = vec![0.0; last + 1];
    let frac = tau / dt - last as f64;
    let w_tau = if last + 1 < eq.mu.len() && frac > 0.0 {
        let a_next = eq.bundle.a[last + 1] / c.eta()[last + 1];
        let p_tau = p[last] + 0.5 * frac * dt * (a_eta[last] + quad::lerp(a_eta[last], a_next, frac));
        quad::lerp(c.kappa()[last] * eq.mu[last], c.kappa()[last + 1] * eq.mu[last + 1], frac) * (-p_tau).exp()
    } else {
        w[last]
    };
    tail[last] = 0.5 * frac * dt * (w[last] + w_tau);
    for i in (0..last).rev() {
        tail[i] = tail[i + 1] + 0.5 * dt * (w[i] + w[i + 1]);
    }
    let outer: Vec<f64> = (0..=k)
        .map(|s| (q[s]).exp() / c.eta()[s] * p[s].exp() * tail[s])
        .collect();
    (-q[k]).exp() * (x - quad::trapezoid(&outer, dt))
}

#[test]
fn inventory_matches_double_integral() {
    let eq = one_sided();
    for x in [0.25, 0.75, 1.5] {
        let p = player_path(x, &eq).unwrap();
        let horizon_node = ((p.tau.min(0.95)) * 2000.0) as usize;
        for j in 1..=10 {
            let k = j * horizon_node / 11;
            let oracle = inventory_by_double_integral(&eq, x, p.tau, k);
            assert_abs_diff_eq!(p.inventory[k], oracle, epsilon = 2e-5);
        }
    }
}

#[test]
fn adjoint_solves_costate_equation() {
    // Y_t = Y_τ + ∫ₜ^τ (λX + κμ), checked on nodes before τ.
    let eq = one_sided();
    let dt = eq.coeffs.dt();
    for x in [0.25, 1.0, 3.0] {
        let p = player_path(x, &eq).unwrap();
        let end = ((p.tau / dt).floor() as usize).min(2000);
        let integrand: Vec<f64> = (0..=end).map(|i| 5.0 * p.inventory[i] + 10.0 * eq.mu[i]).collect();
        let cum = quad::cumulative_trapezoid(&integrand, dt);
        let frac_tail = p.tau - end as f64 * dt;
        let y_tau = if p.tau >= 1.0 { p.adjoint[2000] } else { 0.0 };
        for i in (0..end).step_by(97) {
            let expected = y_tau + (cum[end] - cum[i]) + frac_tail * integrand[end];
            assert_abs_diff_eq!(p.adjoint[i], expected, epsilon = 1e-4);
        }
    }
}

#[test]
fn liquidation_time_cases() {
    let eq = one_sided();
    let grid = eq.grid();
    let lt = |x: f64| liquidation_time(x, grid, &eq.f_curve, &eq.f_max, &eq.f_min);
    assert_eq!(lt(-0.5), 1.0);
    assert_eq!(lt(eq.f_max[2000]), 1.0);
    assert!(lt(eq.x_hat) > 1.0 - 1e-8);
    assert_eq!(lt(2.0 * eq.x_hat), 1.0);
    assert_eq!(lt(0.0), 0.0);
    let node = 700;
    assert_eq!(lt(eq.f_curve[node]), grid[node]);
    let taus: Vec<f64> = (1..50).map(|k| lt(eq.x_hat * k as f64 / 50.0)).collect();
    assert!(taus.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn f_curve_cases() {
    let eq = one_sided();
    let zero = f_curve(&vec![0.0; 2001], &eq.coeffs, &eq.bundle).unwrap();
    assert!(zero.f.iter().all(|&v| v == 0.0));
    let fc = f_curve(&eq.mu, &eq.coeffs, &eq.bundle).unwrap();
    assert_eq!(fc.f_max, fc.f);
    assert!(fc.f_min.iter().all(|&v| v == 0.0));
    assert_abs_diff_eq!(fc.f[2000], eq.x_hat, epsilon = 1e-6);
}

#[test]
fn zero_position_gives_zero_path() {
    let eq = one_sided();
    let p = player_path(0.0, &eq).unwrap();
    assert!(p.inventory.iter().chain(&p.xi).all(|&v| v == 0.0));
    assert_eq!(p.cost, 0.0);
    assert_eq!(cost(&p.xi, &p.inventory, &eq, CostMode::MeanField), 0.0);
}

#[test]
fn linear_growth_of_rates() {
    let eq = one_sided();
    let ratios: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&x| {
            let p = player_path(x, &eq).unwrap();
            p.xi.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (1.0 + x)
        })
        .collect();
    let c = ratios.iter().cloned().fold(0.0, f64::max);
    // a single constant covers the whole range and the ratio settles for large x
    assert!(c < 10.0);
    assert!((ratios[4] - ratios[3]).abs() < 0.1 * ratios[3]);
}

#[test]
fn competitors_are_admissible_and_self_margin_is_zero() {
    let eq = one_sided();
    let grid = eq.grid();
    for x in [0.1, 0.75, 1.5, 3.0] {
        let p = player_path(x, &eq).unwrap();
        for spec in CompetitorSpec::battery() {
            let (inv, _) = spec.generate(&p, grid);
            assert!(is_admissible(x, &inv), "{spec:?} for x = {x}");
        }
        let (inv, xi) = CompetitorSpec::ScaledEquilibrium(1.0).generate(&p, grid);
        assert_eq!(inv, p.inventory);
        assert_eq!(xi, p.xi);
        let report = optimality_check(&[x], &eq, &[CompetitorSpec::ScaledEquilibrium(1.0)], Execution::Sequential).unwrap();
        assert_eq!(report.min_margin(), 0.0);
    }
}

#[test]
fn equilibrium_beats_twap_and_scaled() {
    let eq = one_sided();
    let report = optimality_check(
        &[1.5],
        &eq,
        &[CompetitorSpec::TwapFullHorizon, CompetitorSpec::ScaledEquilibrium(1.1)],
        Execution::Parallel,
    )
    .unwrap();
    assert_eq!(report.violations, 0);
    assert!(report.min_margin() > 0.0);
}

#[test]
fn nash_check_for_seven_players() {
    let spec = ScenarioSpec::one_sided(2000).unwrap();
    let positions = quantile_positions(&spec.dist, 7).unwrap();
    let eq = solve_nplayer(&spec.coeffs, &positions).unwrap();
    let report = nash_check(&positions, &eq, &CompetitorSpec::battery(), Execution::Parallel).unwrap();
    assert_eq!(report.players.len(), 7);
    assert_eq!(report.violations, 0);
    assert!(nash_check(&positions[..3], &eq, &CompetitorSpec::battery(), Execution::Parallel).is_err());
}

#[test]
fn single_player_beats_twap() {
    let c = make_constant_coefficients(5.0, 2.0, 5.0, 1.0, 2000).unwrap();
    let eq = solve_nplayer(&c, &[1.0]).unwrap();
    let report = nash_check(&[1.0], &eq, &[CompetitorSpec::TwapFullHorizon], Execution::Sequential).unwrap();
    assert!(report.min_margin() > 0.0);
    assert!(fixed_point_residual(&eq, 1, Execution::Sequential).unwrap() <= 1e-6);
}

#[test]
fn residual_separates_perturbed_rates() {
    let mut eq = one_sided();
    let r = attach_residual(&mut eq, Execution::Parallel).unwrap();
    assert_eq!(eq.residual, Some(r));
    assert!(r <= 5e-4);
    for v in eq.mu.iter_mut() {
        *v += 0.1;
    }
    assert!(fixed_point_residual(&eq, 400, Execution::Parallel).unwrap() > 0.05);
}

#[test]
fn residual_modes_agree() {
    let eq = one_sided();
    let a = aggregate_rate(&eq, 200, Execution::Parallel).unwrap();
    let b = aggregate_rate(&eq, 200, Execution::Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn two_sided_buyers_sell_first() {
    let spec = ScenarioSpec::two_sided(2000).unwrap();
    let eq = solve_mfg(&spec.coeffs, &spec.dist).unwrap();
    let p = player_path(-0.05, &eq).unwrap();
    assert_eq!(p.tau, 1.0);
    assert!(p.xi[0] > 0.0);
    assert!(p.inventory[2000] == 0.0);
    assert!(fixed_point_residual(&eq, 400, Execution::Parallel).unwrap() <= 5e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn path_invariants(x in -3.0f64..5.0) {
        let spec = ScenarioSpec::two_sided(400).unwrap();
        let eq = solve_mfg(&spec.coeffs, &spec.dist).unwrap();
        let p = player_path(x, &eq).unwrap();
        prop_assert_eq!(p.inventory[0], x);
        prop_assert_eq!(p.inventory[400], 0.0);
        prop_assert!(p.tau > 0.0 && p.tau <= 1.0);
        let integral = quad::trapezoid(&p.xi, eq.coeffs.dt());
        prop_assert!((integral - x).abs() <= 2e-5 * (1.0 + x.abs()));
        for (i, &t) in eq.grid().iter().enumerate() {
            if t > p.tau {
                prop_assert_eq!(p.xi[i], 0.0);
            }
        }
        if x > 0.0 {
            prop_assert!(p.xi.iter().all(|&r| r >= 0.0));
        }
    }
}
