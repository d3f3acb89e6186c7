use sopchart_core::*;

/// Memoryless charts have geometric run lengths.
#[test]
fn shewhart_bootstrap_is_geometric() {
    let pool = BootstrapPool::new((0..20).map(|i| i as f64).collect()).unwrap();
    // Mean 9.5; deviations above 8 come from the values 0, 1, 18, 19.
    let mon = BootstrapMonitor::new(pool, 1.0).unwrap();
    let est = estimate_arl_with(&mon, 8.0, &SimOptions::new(40_000, 8)).unwrap();
    let p: f64 = 4.0 / 20.0;
    let sd = ((1.0 - p) / (p * p)).sqrt();
    assert!((est.mean - 1.0 / p).abs() < 4.0 * sd / 200.0, "{est:?}");
    assert!((est.stderr - sd / 200.0).abs() < 0.05 * sd / 200.0, "{est:?}");
}

#[test]
fn bootstrap_calibration_meets_target() {
    let pool = BootstrapPool::new((0..96).map(|i| ((i as f64) * 0.61).sin() * 0.004).collect()).unwrap();
    let opts = CalibrationOptions::new(20.0, SimOptions::new(20_000, 3));
    let res = bootstrap_calibrate(&pool, 0.1, &opts).unwrap();
    assert!(((res.achieved_arl.mean - 20.0) / 20.0).abs() <= opts.rel_tol);
    let check = estimate_arl_with(&BootstrapMonitor::new(pool, 0.1).unwrap(), res.limit, &opts.sim).unwrap();
    assert_eq!(check, res.achieved_arl);
    assert!(!res.iterations.is_empty() && res.iterations.len() <= DEFAULT_BUDGET);
}

#[test]
fn strong_dependence_alarms_fast() {
    let s = Scenario {
        chart: ChartConfig::new(ChartKind::TauTilde, 0.1, 0.03174),
        dgp: DgpSpec::sar([0.4, 0.3, 0.1]),
        m: 10,
        n: 10,
        jitter_scale: None,
    };
    let est = estimate_arl(&s, &SimOptions::new(500, 1)).unwrap();
    assert!(est.mean < 10.0, "{est:?}");
}
