//! Shared oracles for the integration tests: quadrature, brute-force
//! re-implementations, and reference catalogs. Everything here is kept
//! independent of the library's own closed-form code paths.

#![allow(dead_code)]

use etaskit_core::catalog::{Catalog, Event};
use etaskit_core::etas::EtasParams;
use etaskit_core::laws::GrLaw;
use etaskit_core::simulate::{simulate, MagnitudeMode, SimConfig};

/// Composite Simpson quadrature with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0 && n >= 2);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Numerically integrated CDF of a density on [lo, hi]: returns an evaluator
/// built from a fine Simpson grid with linear interpolation.
pub struct NumericCdf {
    lo: f64,
    step: f64,
    cumulative: Vec<f64>,
}

impl NumericCdf {
    pub fn build(density: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> Self {
        assert!(panels % 2 == 0);
        // Simpson on each pair of panels, accumulated.
        let step = (hi - lo) / panels as f64;
        let mut cumulative = Vec::with_capacity(panels / 2 + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        let mut x = lo;
        for _ in 0..panels / 2 {
            let f0 = density(x);
            let f1 = density(x + step);
            let f2 = density(x + 2.0 * step);
            acc += step / 3.0 * (f0 + 4.0 * f1 + f2);
            cumulative.push(acc);
            x += 2.0 * step;
        }
        NumericCdf { lo, step: 2.0 * step, cumulative }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let total = *self.cumulative.last().unwrap();
        if x <= self.lo {
            return 0.0;
        }
        let pos = (x - self.lo) / self.step;
        let idx = pos.floor() as usize;
        if idx + 1 >= self.cumulative.len() {
            return 1.0;
        }
        let frac = pos - idx as f64;
        let v = self.cumulative[idx] * (1.0 - frac) + self.cumulative[idx + 1] * frac;
        (v / total).clamp(0.0, 1.0)
    }
}

/// Naive O(pairs) ETAS intensity, written as an independent route
/// (exp/ln composition, reversed summation order).
pub fn naive_intensity(t: f64, cat: &Catalog<f64>, params: &EtasParams<f64>) -> f64 {
    let m0 = cat.m0();
    let mut terms: Vec<f64> = cat
        .events()
        .iter()
        .filter(|e| e.time < t)
        .map(|e| {
            (params.kappa.ln() + params.a * (e.magnitude - m0) - params.p * (t - e.time + params.c).ln())
                .exp()
        })
        .collect();
    terms.reverse();
    params.mu + terms.iter().sum::<f64>()
}

/// Brute-force autocorrelation straight from the estimator definition.
pub fn naive_autocorrelation(counts: &[u64], lag: usize) -> f64 {
    let n = counts.len();
    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let mut acc = 0.0;
    for t in 0..n - lag {
        acc += (xs[t] - mean) * (xs[t + lag] - mean);
    }
    acc / ((n - lag) as f64 * var)
}

fn gaussian_kernel(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Brute-force frequency-weighted kernel estimate at a single point.
pub fn naive_kde_point(mags: &[f64], freqs: &[f64], m: f64, gamma: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (mi, fi) in mags.iter().zip(freqs) {
        let k = gaussian_kernel((m - mi) / gamma);
        num += fi * k;
        den += k;
    }
    num / den
}

/// Brute-force leave-one-out score for one bandwidth.
pub fn naive_loocv_score(mags: &[f64], freqs: &[f64], gamma: f64) -> f64 {
    let mut score = 0.0;
    for i in 0..mags.len() {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..mags.len() {
            if i == j {
                continue;
            }
            let k = gaussian_kernel((mags[i] - mags[j]) / gamma);
            num += freqs[j] * k;
            den += k;
        }
        score += (num / den - freqs[i]).abs();
    }
    score
}

/// Independent Pearson/OLS computation on four points.
pub fn naive_regression(x: &[f64; 4], y: &[f64; 4]) -> (f64, f64, f64) {
    let n = 4.0;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
    (slope, intercept, r)
}

/// Classic simulation tuple used by the reference runs.
pub fn classic_params() -> EtasParams<f64> {
    EtasParams::new(0.62, 0.02, 0.013, 1.72, 1.11).unwrap()
}

pub fn classic_config(seed: u64, t_end: f64, mode: MagnitudeMode<f64>) -> SimConfig<f64> {
    SimConfig {
        params: classic_params(),
        gr: GrLaw::from_b_value(1.0, 1.5).unwrap(),
        mode,
        window: (0.0, t_end),
        seed,
        learning_period: 0.0,
    }
}

pub fn classic_catalog(seed: u64, t_end: f64) -> Catalog<f64> {
    simulate(&classic_config(seed, t_end, MagnitudeMode::GutenbergRichter)).unwrap()
}

/// Homogeneous Poisson catalog via a vanishing productivity amplitude.
pub fn poisson_catalog(seed: u64, mu: f64, t_end: f64) -> Catalog<f64> {
    let mut cfg = classic_config(seed, t_end, MagnitudeMode::GutenbergRichter);
    cfg.params = EtasParams::new(mu, 1e-12, 0.013, 1.72, 1.11).unwrap();
    simulate(&cfg).unwrap()
}

/// Uniform pseudo-random numbers for test data; deterministic and tiny.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        // splitmix64
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// Sorted random event history for intensity/likelihood oracles.
pub fn random_history(seed: u64, n: usize, t_end: f64) -> Catalog<f64> {
    let mut rng = TestRng::new(seed);
    let mut times: Vec<f64> = (0..n).map(|_| rng.range(0.0, t_end)).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let events: Vec<Event<f64>> = times
        .into_iter()
        .map(|t| Event::new(t, 1.5 - (1.0 - rng.uniform()).ln() / 2.302585092994046))
        .collect();
    Catalog::new(events, 1.5, (0.0, t_end)).unwrap()
}
