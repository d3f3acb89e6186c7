//! Results must not depend on the number of worker threads.

use sopchart_core::*;

fn scenario() -> Scenario {
    Scenario {
        chart: ChartConfig::new(ChartKind::TauTilde, 0.1, 0.06),
        dgp: DgpSpec::iid(MarginalSpec::Poisson { mu: 5.0 }),
        m: 6,
        n: 6,
        jitter_scale: Some(1.0),
    }
}

#[test]
fn arl_is_identical_across_worker_counts() {
    let base = SimOptions::new(400, 77).with_cap(50_000);
    let one = estimate_arl(&scenario(), &base.with_workers(1)).unwrap();
    let three = estimate_arl(&scenario(), &base.with_workers(3)).unwrap();
    let global = estimate_arl(&scenario(), &base).unwrap();
    assert_eq!(one, three);
    assert_eq!(one, global);
}

#[test]
fn calibration_is_identical_across_worker_counts() {
    let pool = BootstrapPool::new((0..96).map(|i| ((i * 37 % 96) as f64 / 96.0 - 0.5) * 0.01).collect()).unwrap();
    let opts = CalibrationOptions::new(20.0, SimOptions::new(3000, 5));
    let a = bootstrap_calibrate(&pool, 0.1, &CalibrationOptions { sim: opts.sim.with_workers(1), ..opts }).unwrap();
    let b = bootstrap_calibrate(&pool, 0.1, &CalibrationOptions { sim: opts.sim.with_workers(4), ..opts }).unwrap();
    assert_eq!(a, b);
}

#[test]
fn same_seed_same_frames() {
    let spec: DgpSpec = DgpModel::BilateralSar {
        a: [0.2, 0.1, 0.1, 0.2],
        buffer: 10,
        tol: 1e-10,
        innovation: MarginalSpec::STANDARD_NORMAL,
    }
    .into();
    let a = spec.generate(7, 5, &mut stream_rng(3, 9)).unwrap();
    let b = spec.generate(7, 5, &mut stream_rng(3, 9)).unwrap();
    let c = spec.generate(7, 5, &mut stream_rng(3, 10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
