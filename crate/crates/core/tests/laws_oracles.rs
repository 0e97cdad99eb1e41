//! Quadrature and sampling oracles for the magnitude and triggering laws.

mod common;

use common::{simpson, NumericCdf, TestRng};
use etaskit_core::laws::{ConditionalLaw, GrLaw, OmoriLaw};
use etaskit_core::stats::{ks_pvalue, ks_statistic};

const LN10: f64 = std::f64::consts::LN_10;

#[test]
fn gr_density_integrates_to_one() {
    let law = GrLaw::from_b_value(1.0, 1.5).unwrap();
    let integral = simpson(|m| law.density(m).unwrap(), 1.5, 31.5, 30_000);
    assert!((integral - 1.0).abs() < 1e-9, "integral = {integral}");
}

#[test]
fn gr_sampler_passes_ks_against_analytic_cdf() {
    let law = GrLaw::from_b_value(1.0, 1.5).unwrap();
    let mut rng = TestRng::new(777);
    let n = 100_000;
    let samples: Vec<f64> = (0..n)
        .map(|_| law.sample(rng.uniform().max(1e-300)).unwrap())
        .collect();
    let d = ks_statistic(&samples, |m| law.cdf(m));
    let p = ks_pvalue(d, n);
    assert!(p > 0.01, "KS p = {p}, D = {d}");
}

#[test]
fn conditional_density_normalizes_for_all_settings() {
    for &c1 in &[0.0, 0.3, 0.8, 0.99] {
        let law = ConditionalLaw::new(LN10, 1.72, c1, 1.5).unwrap();
        for k in 0..=6 {
            let m_prime = 1.5 + k as f64;
            let integral =
                simpson(|m| law.density(m, m_prime).unwrap(), 1.5, 31.5, 30_000);
            assert!(
                (integral - 1.0).abs() < 1e-9,
                "c1 = {c1}, m' = {m_prime}: integral = {integral}"
            );
        }
    }
}

#[test]
fn conditional_sampler_passes_ks_against_quadrature_cdf() {
    for &(m_prime, c1) in &[(2.0, 0.8), (4.5, 0.8), (3.0, 0.3)] {
        let law = ConditionalLaw::new(LN10, 1.72, c1, 1.5).unwrap();
        let cdf = NumericCdf::build(|m| law.density(m, m_prime).unwrap(), 1.5, 31.5, 60_000);
        let mut rng = TestRng::new(4242);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| law.sample(rng.uniform().max(1e-300), m_prime).unwrap())
            .collect();
        let d = ks_statistic(&samples, |m| cdf.eval(m));
        let p = ks_pvalue(d, n);
        assert!(p > 0.01, "m' = {m_prime}, c1 = {c1}: KS p = {p}, D = {d}");
    }
}

#[test]
fn conditional_cdf_is_stochastically_ordered_in_mother_magnitude() {
    let law = ConditionalLaw::new(LN10, 1.72, 0.8, 1.5).unwrap();
    let mothers = [1.5, 2.0, 2.5, 3.0, 4.0, 5.5];
    for pair in mothers.windows(2) {
        for k in 1..200 {
            let m = 1.5 + 8.0 * k as f64 / 200.0;
            let lo = law.cdf(m, pair[1]);
            let hi = law.cdf(m, pair[0]);
            assert!(
                lo <= hi + 1e-12,
                "CDF order violated at m = {m} for mothers {:?}",
                pair
            );
        }
    }
}

#[test]
fn conditional_mean_is_nondecreasing_in_mother_magnitude() {
    let law = ConditionalLaw::new(LN10, 1.72, 0.8, 1.5).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for k in 0..=20 {
        let m_prime = 1.5 + 5.0 * k as f64 / 20.0;
        let mean = simpson(|m| m * law.density(m, m_prime).unwrap(), 1.5, 31.5, 20_000);
        assert!(mean >= prev - 1e-10, "mean dropped at m' = {m_prime}");
        prev = mean;
    }
}

#[test]
fn conditional_sampler_histogram_matches_density() {
    let law = ConditionalLaw::new(LN10, 1.72, 0.8, 1.5).unwrap();
    let m_prime = 3.0;
    let n = 1_000_000usize;
    let mut rng = TestRng::new(2024);
    let edges: Vec<f64> = (0..=40).map(|i| 1.5 + 0.1 * i as f64).collect();
    let mut observed = vec![0u64; 41]; // last bin is the open tail
    for _ in 0..n {
        let m = law.sample(rng.uniform().max(1e-300), m_prime).unwrap();
        let bin = ((m - 1.5) / 0.1).floor() as usize;
        observed[bin.min(40)] += 1;
    }
    // Expected probabilities by quadrature of the density over each bin.
    for k in 0..40 {
        let p = simpson(|m| law.density(m, m_prime).unwrap(), edges[k], edges[k + 1], 200);
        let expect = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let diff = observed[k] as f64 - expect;
        assert!(
            diff.abs() <= 3.0 * sigma,
            "bin {k}: observed {} vs expected {expect:.1} (3 sigma = {:.1})",
            observed[k],
            3.0 * sigma
        );
    }
}

#[test]
fn omori_truncated_integral_matches_quadrature() {
    for &(c, p) in &[(0.013, 1.11), (0.1, 1.8), (0.104, 1.39), (0.2, 1.0)] {
        let law = OmoriLaw::new(c, p).unwrap();
        for &s in &[0.5, 5.0, 120.0] {
            let quad = common::adaptive_simpson(&|t: f64| law.rate(t).unwrap(), 0.0, s, 1e-12);
            let closed = law.integral(s);
            assert!(
                (quad - closed).abs() <= 1e-8 * closed.abs().max(1.0),
                "c = {c}, p = {p}, s = {s}: quad {quad} vs closed {closed}"
            );
        }
    }
}

#[test]
fn omori_infinite_mass_matches_closed_form_for_p_above_one() {
    let law = OmoriLaw::new(0.1_f64, 1.8).unwrap();
    let analytic = 0.1_f64.powf(-0.8) / 0.8;
    let truncated = law.integral(1e9);
    assert!(
        (truncated - analytic).abs() < 1e-6 * analytic,
        "truncated {truncated} vs analytic {analytic}"
    );
}
