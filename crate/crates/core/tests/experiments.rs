use dropout_mfg::experiments::*;
use dropout_mfg::*;

#[test]
fn quantile_positions_approximate_the_measure() {
    let d = make_exponential_sellers(1.5).unwrap();
    let x7 = quantile_positions(&d, 7).unwrap();
    assert_eq!(x7.len(), 7);
    assert!(x7.windows(2).all(|w| w[0] <= w[1]));
    let mean = x7.iter().sum::<f64>() / 7.0;
    assert!((mean - 1.5).abs() < 1.5 / 7.0 * 3.0, "mean {mean}");

    let sup_err = |n: usize| {
        let xs = quantile_positions(&d, n).unwrap();
        let emp = make_empirical(&xs).unwrap();
        (0..20_000)
            .map(|k| k as f64 * 0.001)
            .map(|x| (emp.q0(x) - d.q0(x)).abs())
            .fold(0.0f64, f64::max)
    };
    let (e7, e15, e100) = (sup_err(7), sup_err(15), sup_err(100));
    assert!(e7 > e15 && e15 > e100, "{e7} {e15} {e100}");
    assert!((e7 - 1.0 / 14.0).abs() < 1e-3);
}

#[test]
fn two_sided_allocation() {
    let d = make_two_sided(0.8, 1.5, 0.2, 1.0).unwrap();
    let xs = quantile_positions(&d, 10).unwrap();
    assert_eq!(xs.iter().filter(|&&x| x < 0.0).count(), 2);
    assert!(quantile_positions(&make_empirical(&[1.0]).unwrap(), 3).is_err());
}

#[test]
fn seven_player_game_structure() {
    let spec = ScenarioSpec::one_sided(2000).unwrap();
    let positions = quantile_positions(&spec.dist, 7).unwrap();
    let eq = solve_nplayer(&spec.coeffs, &positions).unwrap();
    let taus: Vec<f64> = positions
        .iter()
        .map(|&x| player_path(x, &eq).unwrap().tau)
        .collect();
    assert!(taus.windows(2).all(|w| w[0] <= w[1]));
    assert!(taus[0] < 1.0 && taus[1] < 1.0);
    assert!(taus[2..].iter().all(|&t| t >= taus[1]));

    // each early exit leaves a kink in the aggregate rate
    let kinks = detect_kinks(eq.grid(), &eq.mu);
    let early: Vec<f64> = taus.iter().copied().filter(|&t| t < 1.0).collect();
    assert_eq!(kinks.len(), early.len());
    for (k, t) in kinks.iter().zip(&early) {
        assert!((k - t).abs() <= 2.0 * spec.coeffs.dt(), "kink {k} vs tau {t}");
    }
    let mfg = solve_mfg(&spec.coeffs, &spec.dist).unwrap();
    assert!(detect_kinks(mfg.grid(), &mfg.mu).is_empty());
}

#[test]
fn convergence_rows_are_sorted_and_deterministic() {
    let spec = ScenarioSpec::one_sided(1000).unwrap();
    let a = convergence_study(&spec, &[100, 7, 15], Execution::Parallel).unwrap();
    let b = convergence_study(&spec, &[7, 15, 100], Execution::Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().map(|r| r.n).collect::<Vec<_>>(), vec![7, 15, 100]);
    assert!(a[0].sup_error > a[1].sup_error && a[1].sup_error > a[2].sup_error);
    let twice = convergence_study(&spec, &[15, 15], Execution::Parallel).unwrap();
    assert_eq!(twice[0], twice[1]);
}

#[test]
fn scenarios_compare_dropout_with_baseline() {
    let run = run_scenario(&ScenarioSpec::one_sided(2000).unwrap(), Execution::Parallel).unwrap();
    assert_eq!(run.dropout.grid(), run.baseline.grid());
    assert!(run.dropout.mu[0] < run.baseline.mu[0]);
    assert!(run.dropout.mu[2000] > run.baseline.mu[2000]);
    for (d, b) in run.dropout_paths.iter().zip(&run.baseline_paths) {
        assert!(d.inventory.iter().all(|&v| v >= 0.0));
        if d.x <= 0.25 {
            assert!(b.inventory.iter().any(|&v| v < 0.0), "x = {}", d.x);
        }
    }
    let two = run_scenario(&ScenarioSpec::two_sided(2000).unwrap(), Execution::Sequential).unwrap();
    assert!(two.dropout.mu.iter().all(|&m| m > 0.0));
}

#[test]
fn sequential_and_parallel_runs_are_identical() {
    let spec = ScenarioSpec::two_sided(500).unwrap();
    let a = run_scenario(&spec, Execution::Parallel).unwrap();
    let b = run_scenario(&spec, Execution::Sequential).unwrap();
    assert_eq!(a, b);
}
