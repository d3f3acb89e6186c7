use proptest::prelude::*;
use sopchart_core::*;

fn grid() -> impl Strategy<Value = RealGrid> {
    (2usize..8, 2usize..8).prop_flat_map(|(r, c)| {
        prop::collection::vec(-100.0f64..100.0, r * c).prop_map(move |v| RealGrid::new(r, c, v).unwrap())
    })
}

fn count_grid() -> impl Strategy<Value = CountGrid> {
    (2usize..7, 2usize..7).prop_flat_map(|(r, c)| {
        prop::collection::vec(0u64..6, r * c).prop_map(move |v| CountGrid::new(r, c, v).unwrap())
    })
}

proptest! {
    #[test]
    fn types_survive_monotone_maps(g in grid(), a in 0.1f64..5.0, b in -3.0f64..3.0) {
        let h = g.map(|x| (a * x + b).atan() + 3.0 * (a * x + b)).unwrap();
        prop_assert_eq!(sops(&g, Delay::UNIT).unwrap(), sops(&h, Delay::UNIT).unwrap());
    }

    #[test]
    fn frequencies_lie_on_the_simplex(g in grid()) {
        let c = type_counts(&g, Delay::UNIT).unwrap();
        prop_assert_eq!(c.total() as usize, g.m() * g.n());
        let p = c.frequencies().p();
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_identity(g in grid()) {
        // Exact on the integer numerators, a few ulps in floating point.
        let c = type_counts(&g, Delay::UNIT).unwrap().0;
        let (c1, c2, c3) = (c[0] as i64, c[1] as i64, c[2] as i64);
        prop_assert_eq!((c2 - c3) + (c1 - c2), c1 - c3);
        let s = dependence_stats(&type_frequencies(&g, Delay::UNIT).unwrap());
        prop_assert!(((s.kappa_hat + s.kappa_tilde) - (s.tau_hat - s.tau_tilde)).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn acf_is_bounded_and_symmetric(g in grid(), h1 in -3i64..4, h2 in -3i64..4) {
        prop_assume!((h1, h2) != (0, 0));
        prop_assume!(h1.unsigned_abs() < g.rows() as u64 && h2.unsigned_abs() < g.cols() as u64);
        let acf = match AcfFrame::new(&g) { Ok(a) => a, Err(_) => return Ok(()) };
        let r = acf.acf(SpatialLag::new(h1, h2).unwrap()).unwrap();
        prop_assert!(r.abs() <= 1.0 + 1e-12);
        prop_assert_eq!(r.to_bits(), acf.acf(SpatialLag::new(-h1, -h2).unwrap()).unwrap().to_bits());
    }

    #[test]
    fn jitter_keeps_strict_order(g in count_grid(), seed in any::<u64>(), scale in 0.01f64..1.0) {
        let j = jitter(&g, scale, &mut stream_rng(seed, 0)).unwrap();
        for a in 0..g.values().len() {
            for b in 0..g.values().len() {
                if g.values()[a] < g.values()[b] {
                    prop_assert!(j.values()[a] < j.values()[b]);
                }
            }
        }
    }

    #[test]
    fn smoothed_types_stay_on_the_simplex(frames in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 9), 1..20), lambda in 0.01f64..1.0) {
        let mut chart = init_chart(ChartConfig::new(ChartKind::KappaTilde, lambda, 1.0)).unwrap();
        for v in frames {
            update_chart(&mut chart, &RealGrid::new(3, 3, v).unwrap()).unwrap();
            let p = chart.type_channels().unwrap()[0];
            prop_assert!(p.iter().all(|&x| (-1e-15..=1.0 + 1e-15).contains(&x)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shewhart_plots_the_raw_statistic(frames in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 12), 1..10)) {
        let mut chart = init_chart(ChartConfig::new(ChartKind::TauHat, 1.0, 0.5)).unwrap();
        for v in frames {
            let pt = update_chart(&mut chart, &RealGrid::new(3, 4, v).unwrap()).unwrap();
            prop_assert_eq!(pt.raw, pt.smoothed);
        }
    }

    #[test]
    fn delayed_counts_cover_every_square(g in grid(), d1 in 1usize..4, d2 in 1usize..4) {
        prop_assume!(d1 <= g.m() && d2 <= g.n());
        let c = type_counts(&g, Delay::new(d1, d2).unwrap()).unwrap();
        prop_assert_eq!(c.total() as usize, (g.m() - d1 + 1) * (g.n() - d2 + 1));
    }
}
