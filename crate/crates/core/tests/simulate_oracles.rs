//! Statistical oracles for the branching simulator: Poisson background
//! counts, analytic offspring expectations, and the magnitude-correlation
//! contrast between the two magnitude modes.

mod common;

use etaskit_core::catalog::Parent;
use etaskit_core::etas::EtasParams;
use etaskit_core::laws::{ConditionalLaw, GrLaw};
use etaskit_core::simulate::{simulate, MagnitudeMode, SimConfig};

#[test]
fn background_only_counts_form_a_poisson_ensemble() {
    // kappa -> 0 leaves a homogeneous Poisson process of rate mu; the total
    // over 100 seeded runs of 1000 days at mu = 0.62 is Poisson(62000).
    let mut total = 0u64;
    for seed in 0..100 {
        let cat = common::poisson_catalog(seed, 0.62, 1000.0);
        total += cat.len() as u64;
    }
    let expect: f64 = 0.62 * 1000.0 * 100.0;
    let sigma = expect.sqrt();
    assert!(
        (total as f64 - expect).abs() <= 3.0 * sigma,
        "total {total} vs expected {expect} (3 sigma = {:.0})",
        3.0 * sigma
    );
}

#[test]
fn per_event_offspring_counts_match_the_analytic_mean() {
    // Fast-decaying kernel so early parents see effectively the full Omori
    // mass; the direct-offspring count of a magnitude-m parent is Poisson
    // with mean kappa e^{a(m-m0)} c^{1-p}/(p-1).
    let params = EtasParams::new(100.0, 0.05, 0.1, 1.0, 1.8).unwrap();
    let cfg = SimConfig {
        params,
        gr: GrLaw::from_b_value(1.0, 1.5).unwrap(),
        mode: MagnitudeMode::GutenbergRichter,
        window: (0.0, 200.0),
        seed: 60,
        learning_period: 0.0,
    };
    let cat = simulate(&cfg).unwrap();

    let mut direct_children = vec![0u64; cat.len()];
    for e in cat.events() {
        if let Parent::Index(j) = e.parent {
            direct_children[j] += 1;
        }
    }

    let full_mass = 0.1_f64.powf(-0.8) / 0.8;
    let mut parents = 0usize;
    let mut observed = 0.0;
    let mut expected = 0.0;
    for (i, e) in cat.events().iter().enumerate() {
        if e.time <= 100.0 {
            parents += 1;
            observed += direct_children[i] as f64;
            expected += 0.05 * f64::exp(e.magnitude - 1.5) * full_mass;
        }
    }
    assert!(parents >= 10_000, "only {parents} early parents");
    // Counts are Poisson, so the variance of the sum is its expectation.
    let sigma = expected.sqrt();
    assert!(
        (observed - expected).abs() <= 3.0 * sigma,
        "offspring total {observed} vs analytic {expected} (3 sigma = {:.1})",
        3.0 * sigma
    );
}

fn parent_child_magnitude_correlation(mode: MagnitudeMode<f64>, seeds: &[u64]) -> (f64, usize) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &seed in seeds {
        let cat = simulate(&common::classic_config(seed, 1500.0, mode.clone())).unwrap();
        for e in cat.events() {
            if let Parent::Index(j) = e.parent {
                xs.push(cat.events()[j].magnitude);
                ys.push(e.magnitude);
            }
        }
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
        sxy += (x - mx) * (y - my);
    }
    (sxy / (sxx * syy).sqrt(), xs.len())
}

#[test]
fn parent_child_magnitudes_uncorrelated_in_gr_mode() {
    let (corr, n) = parent_child_magnitude_correlation(MagnitudeMode::GutenbergRichter, &[71, 72, 73]);
    assert!(n >= 10_000, "only {n} pairs");
    let bound = 3.0 / (n as f64).sqrt();
    assert!(corr.abs() < bound, "corr = {corr:.4}, bound = {bound:.4}");
}

#[test]
fn parent_child_magnitudes_positively_correlated_in_conditional_mode() {
    let law = ConditionalLaw::new(std::f64::consts::LN_10, 1.72, 0.8, 1.5).unwrap();
    let (corr, n) =
        parent_child_magnitude_correlation(MagnitudeMode::Conditional(law), &[71, 72, 73]);
    assert!(n >= 10_000, "only {n} pairs");
    let bound = 3.0 / (n as f64).sqrt();
    assert!(corr > bound, "corr = {corr:.4} not above {bound:.4}");
}
