use rand_distr::{Distribution, StandardNormal};
use sopchart_core::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn iid_squares_give_uniform_patterns() {
    let mut rng = stream_rng(2024, 0);
    let mut counts = [0u64; 24];
    let n = 1_000_000u64;
    for _ in 0..n {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        counts[sop_of_square(q).unwrap().lehmer_code()] += 1;
    }
    let expected = n as f64 / 24.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = ChiSquared::new(23.0).unwrap().sf(chi2);
    assert!(p > 1e-4, "chi2 = {chi2}, p = {p}");
}
