//! Autocorrelation of daily counts, two-parameter power-law fit, and
//! selection of the causal time window delta-star.

use serde::Serialize;

use crate::catalog::CountSeries;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats::normal_two_sided_p;

pub const DELTA_STAR_THRESHOLD: f64 = 0.05;

/// Sample autocorrelation estimate at integer lags 0..=L.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfEstimate<R> {
    pub lags: Vec<u32>,
    pub values: Vec<R>,
    pub n: usize,
}

/// Power-law model `A * delta^{-b}` fitted to positive autocorrelations,
/// with the lag `delta_star` past which the model stays below the reporting
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit<R> {
    pub amplitude: R,
    pub exponent: R,
    pub delta_star: u32,
    pub sse: R,
}

/// Autocorrelation estimator
/// `R(d) = sum_{t=1}^{n-d} (X_t - mean)(X_{t+d} - mean) / ((n-d) var)`
/// with the n-denominator mean and the (n-1)-denominator variance.
/// `R(0) = (n-1)/n` by construction.
pub fn autocorrelation<R: Real>(series: &CountSeries, max_lag: usize) -> Result<AcfEstimate<R>> {
    let xs: Vec<R> = series.counts().iter().map(|&c| R::of(c as f64)).collect();
    let n = xs.len();
    if n < max_lag + 2 {
        return Err(Error::invalid(format!(
            "series of length {n} too short for max lag {max_lag}"
        )));
    }
    let nf = R::of_usize(n);
    let mean = xs.iter().copied().sum::<R>() / nf;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<R>() / (nf - R::one());
    if !(var > R::zero()) {
        return Err(Error::numeric("zero variance: constant count series"));
    }
    let mut lags = Vec::with_capacity(max_lag + 1);
    let mut values = Vec::with_capacity(max_lag + 1);
    for d in 0..=max_lag {
        let mut acc = R::zero();
        for t in 0..n - d {
            acc = acc + (xs[t] - mean) * (xs[t + d] - mean);
        }
        lags.push(d as u32);
        values.push(acc / (R::of_usize(n - d) * var));
    }
    Ok(AcfEstimate { lags, values, n })
}

/// Default upper fit lag: min(50, n/4).
pub fn default_fit_lag(n: usize) -> usize {
    (n / 4).clamp(1, 50)
}

/// Least-squares fit of `log R(d) = log A - b log d` over lags in
/// `[1, max_lag]` with positive autocorrelation. Needs at least 3 such lags.
pub fn fit_power_law<R: Real>(acf: &AcfEstimate<R>, max_lag: usize) -> Result<PowerLawFit<R>> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&lag, &value) in acf.lags.iter().zip(&acf.values) {
        if lag >= 1 && (lag as usize) <= max_lag && value > R::zero() {
            xs.push(R::of(lag as f64).ln());
            ys.push(value.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::invalid(format!(
            "power-law fit needs >= 3 positive autocorrelations in 1..={max_lag}, found {}",
            xs.len()
        )));
    }
    let nf = R::of_usize(xs.len());
    let xbar = xs.iter().copied().sum::<R>() / nf;
    let ybar = ys.iter().copied().sum::<R>() / nf;
    let mut sxx = R::zero();
    let mut sxy = R::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx = sxx + (x - xbar) * (x - xbar);
        sxy = sxy + (x - xbar) * (y - ybar);
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let amplitude = intercept.exp();
    let exponent = -slope;
    let mut sse = R::zero();
    for (&x, &y) in xs.iter().zip(&ys) {
        let r = y - (intercept + slope * x);
        sse = sse + r * r;
    }
    let mut fit = PowerLawFit { amplitude, exponent, delta_star: 0, sse };
    fit.delta_star = select_delta_star(&fit, R::of(DELTA_STAR_THRESHOLD))?;
    Ok(fit)
}

/// Smallest positive integer d* such that `A d^{-b} < threshold` for every
/// d > d*; closed form `ceil((A/threshold)^{1/b})`, floored at one day.
pub fn select_delta_star<R: Real>(fit: &PowerLawFit<R>, threshold: R) -> Result<u32> {
    if !(threshold > R::zero()) {
        return Err(Error::invalid("threshold must be positive"));
    }
    if !(fit.amplitude > R::zero() && fit.exponent > R::zero()) {
        return Err(Error::invalid(format!(
            "power-law fit not usable: A = {}, b = {}",
            fit.amplitude, fit.exponent
        )));
    }
    let x = (fit.amplitude / threshold).powf(fit.exponent.recip());
    let d = x.ceil().as_f64();
    Ok((d.max(1.0)) as u32)
}

/// Two-sided p-values of the lag-1..=delta_star autocorrelations under the
/// white-noise null `R(d) ~ Normal(0, 1/n)`.
pub fn acf_significance<R: Real>(acf: &AcfEstimate<R>, delta_star: u32) -> Result<Vec<R>> {
    if acf.n < 100 {
        return Err(Error::invalid(format!(
            "significance needs a long series (n >= 100), got {}",
            acf.n
        )));
    }
    let sqrt_n = R::of_usize(acf.n).sqrt();
    let mut ps = Vec::new();
    for (&lag, &value) in acf.lags.iter().zip(&acf.values) {
        if lag >= 1 && lag <= delta_star {
            ps.push(normal_two_sided_p(value * sqrt_n));
        }
    }
    Ok(ps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::CountSeries;
    use approx::assert_relative_eq;

    #[test]
    fn lag_zero_is_n_minus_one_over_n() {
        let s = CountSeries::new(vec![3, 1, 4, 1, 5, 9, 2, 6]).unwrap();
        let acf: AcfEstimate<f64> = autocorrelation(&s, 3).unwrap();
        assert_relative_eq!(acf.values[0], 7.0 / 8.0, epsilon = 1e-14);
    }

    #[test]
    fn alternating_series_matches_hand_computation() {
        // 0,1,0,1,... with n = 6: mean 1/2, var = (6 * 1/4) / 5 = 0.3;
        // lag 1: sum of 5 products each -1/4 -> -1.25 / (5 * 0.3) = -5/6.
        let s = CountSeries::new(vec![0, 1, 0, 1, 0, 1]).unwrap();
        let acf: AcfEstimate<f64> = autocorrelation(&s, 1).unwrap();
        assert_relative_eq!(acf.values[1], -5.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_series_is_an_error() {
        let s = CountSeries::new(vec![4, 4, 4, 4, 4]).unwrap();
        assert!(autocorrelation::<f64>(&s, 1).is_err());
    }

    #[test]
    fn short_series_is_an_error() {
        let s = CountSeries::new(vec![1, 2, 3]).unwrap();
        assert!(autocorrelation::<f64>(&s, 2).is_err());
    }

    #[test]
    fn exact_power_law_recovers_parameters() {
        let lags: Vec<u32> = (0..=40).collect();
        let values: Vec<f64> =
            lags.iter().map(|&d| if d == 0 { 1.0 } else { 0.9 * (d as f64).powf(-1.2) }).collect();
        let acf = AcfEstimate { lags, values, n: 2000 };
        let fit = fit_power_law(&acf, 40).unwrap();
        assert_relative_eq!(fit.amplitude, 0.9, epsilon = 1e-10);
        assert_relative_eq!(fit.exponent, 1.2, epsilon = 1e-10);
        assert!(fit.sse < 1e-18);
    }

    #[test]
    fn all_nonpositive_acf_is_an_error() {
        let lags: Vec<u32> = (0..=10).collect();
        let values: Vec<f64> = lags.iter().map(|&d| if d == 0 { 0.9 } else { -0.01 }).collect();
        let acf = AcfEstimate { lags, values, n: 500 };
        assert!(fit_power_law(&acf, 10).is_err());
    }

    #[test]
    fn delta_star_reference_values() {
        let fit = PowerLawFit { amplitude: 1.0, exponent: 1.0, delta_star: 0, sse: 0.0 };
        assert_eq!(select_delta_star(&fit, 0.05_f64).unwrap(), 20);
        let small = PowerLawFit { amplitude: 0.04, exponent: 1.0, delta_star: 0, sse: 0.0 };
        assert_eq!(select_delta_star(&small, 0.05_f64).unwrap(), 1);
    }

    #[test]
    fn delta_star_monotone_in_threshold_and_amplitude() {
        let fit = PowerLawFit { amplitude: 0.7_f64, exponent: 0.9, delta_star: 0, sse: 0.0 };
        let mut prev = u32::MAX;
        for th in [0.01, 0.02, 0.05, 0.1, 0.5] {
            let d = select_delta_star(&fit, th).unwrap();
            assert!(d <= prev);
            prev = d;
        }
        let mut prev = 0u32;
        for amp in [0.05, 0.1, 0.4, 0.9, 2.0] {
            let f = PowerLawFit { amplitude: amp, exponent: 0.9, delta_star: 0, sse: 0.0 };
            let d = select_delta_star(&f, 0.05).unwrap();
            assert!(d >= prev);
            prev = d;
        }
    }

    #[test]
    fn significance_reference_points() {
        let n = 10_000usize;
        let lags: Vec<u32> = (0..=2).collect();
        let values = vec![(n as f64 - 1.0) / n as f64, 0.0, 3.0 / (n as f64).sqrt()];
        let acf = AcfEstimate { lags, values, n };
        let ps = acf_significance(&acf, 2).unwrap();
        assert_eq!(ps[0], 1.0);
        assert!((ps[1] - 0.0027).abs() < 1e-4, "p = {}", ps[1]);
    }
}
