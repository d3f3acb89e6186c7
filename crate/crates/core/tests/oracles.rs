//! Worked examples with known answers, reproduced cell for cell.

use sopchart_core::*;

fn bottle() -> RealGrid {
    validate_grid(&[
        vec![0.0598, 0.0591, 0.0587, 0.0582, 0.0576],
        vec![0.0600, 0.0597, 0.0590, 0.0583, 0.0581],
        vec![0.0602, 0.0596, 0.0594, 0.0581, 0.0570],
        vec![0.0598, 0.0596, 0.0589, 0.0585, 0.0571],
        vec![0.0600, 0.0593, 0.0587, 0.0584, 0.0569],
    ])
    .unwrap()
}

#[test]
fn bottle_patterns_and_types() {
    let want: [[[u8; 4]; 4]; 4] = [
        [[3, 1, 4, 2]; 4],
        [[3, 2, 4, 1], [4, 1, 3, 2], [3, 2, 4, 1], [4, 2, 3, 1]],
        [[4, 1, 3, 2], [3, 2, 4, 1], [4, 1, 3, 2], [3, 1, 4, 2]],
        [[3, 2, 4, 1], [4, 2, 3, 1], [4, 2, 3, 1], [4, 2, 3, 1]],
    ];
    let want_types = [[1, 1, 1, 1], [2, 2, 2, 1], [2, 2, 2, 1], [2, 1, 1, 1]];
    let got = sops(&bottle(), Delay::UNIT).unwrap();
    assert_eq!(got.len(), 16);
    for (k, pi) in got.iter().enumerate() {
        let (r, c) = (k / 4, k % 4);
        assert_eq!(pi.ranks(), want[r][c], "pattern at ({}, {})", r + 1, c + 1);
        assert_eq!(pi.sop_type().value(), want_types[r][c], "type at ({}, {})", r + 1, c + 1);
    }
}

#[test]
fn bottle_statistics() {
    let g = bottle();
    let p = type_frequencies(&g, Delay::UNIT).unwrap();
    assert_eq!(p.p(), [0.5625, 0.4375, 0.0]);
    let s = dependence_stats(&p);
    let round4 = |x: f64| (x * 1e4).round() / 1e4;
    assert_eq!(
        [round4(s.tau_hat), round4(s.kappa_hat), round4(s.tau_tilde), round4(s.kappa_tilde)],
        [0.2292, 0.4375, -0.3333, 0.125]
    );
    let rho = spatial_acf(&g, SpatialLag::UNIT).unwrap();
    assert!((rho - 0.301).abs() <= 0.001, "rho = {rho}");
}

#[test]
fn clay_flats_ewma_table() {
    let squares = [
        [[3.30, 3.95], [5.89, 3.20]],
        [[0.27, 3.71], [0.39, 4.33]],
        [[3.06, 1.66], [2.93, 2.12]],
        [[2.74, 2.86], [1.31, 2.10]],
        [[1.36, 3.42], [2.21, 1.80]],
        [[2.00, 2.44], [3.65, 1.64]],
    ];
    let sops_want = [[2, 3, 4, 1], [1, 3, 2, 4], [4, 1, 3, 2], [3, 4, 1, 2], [1, 4, 3, 2], [2, 3, 4, 1]];
    let types_want = [3, 1, 2, 1, 3, 3];
    let ewma_want = [
        [0.300, 0.300, 0.400],
        [0.370, 0.270, 0.360],
        [0.333, 0.343, 0.324],
        [0.400, 0.309, 0.292],
        [0.360, 0.278, 0.362],
        [0.324, 0.250, 0.426],
    ];
    let mut chart = init_chart(ChartConfig::new(ChartKind::TauTilde, 0.1, 1.0)).unwrap();
    for (t, sq) in squares.iter().enumerate() {
        let g = validate_grid(&[sq[0].to_vec(), sq[1].to_vec()]).unwrap();
        let pi = sops(&g, Delay::UNIT).unwrap()[0];
        assert_eq!(pi.ranks(), sops_want[t]);
        assert_eq!(pi.sop_type().value(), types_want[t]);
        update_chart(&mut chart, &g).unwrap();
        let p = chart.type_channels().unwrap()[0];
        for k in 0..3 {
            assert!((p[k] - ewma_want[t][k]).abs() < 5e-4, "t={} k={k}: {}", t + 1, p[k]);
        }
    }
}

#[test]
fn type_listing() {
    let listing: [[[u8; 4]; 8]; 3] = [
        [[1, 2, 3, 4], [1, 3, 2, 4], [2, 1, 4, 3], [2, 4, 1, 3], [3, 1, 4, 2], [3, 4, 1, 2], [4, 2, 3, 1], [4, 3, 2, 1]],
        [[1, 2, 4, 3], [1, 4, 2, 3], [2, 1, 3, 4], [2, 3, 1, 4], [3, 2, 4, 1], [3, 4, 2, 1], [4, 1, 3, 2], [4, 3, 1, 2]],
        [[1, 3, 4, 2], [1, 4, 3, 2], [2, 3, 4, 1], [2, 4, 3, 1], [3, 1, 2, 4], [3, 2, 1, 4], [4, 1, 2, 3], [4, 2, 1, 3]],
    ];
    let mut seen = 0;
    for (k, block) in listing.iter().enumerate() {
        for ranks in block {
            assert_eq!(type_of_sop(&Sop::new(*ranks).unwrap()).value() as usize, k + 1, "{ranks:?}");
            seen += 1;
        }
    }
    assert_eq!(seen, 24);
    let mut per_type = [0; 3];
    for pi in Sop::all() {
        per_type[pi.sop_type().index()] += 1;
    }
    assert_eq!(per_type, [8, 8, 8]);
}
