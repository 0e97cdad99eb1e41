//! Frequency-weighted Gaussian kernel density estimation on a magnitude grid
//! with leave-one-out cross-validated bandwidth.
//!
//! The estimator is the Nadaraya-Watson-normalized weighting of frequencies
//! `M(m) = sum_i f_i K((m - m_i)/gamma) / sum_i K((m - m_i)/gamma)`; the
//! normalizer depends on the evaluation point, so the estimate is a convex
//! combination of the frequencies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of grid points used by the standard magnitude grid.
pub const GRID_POINTS: usize = 1000;

/// Default magnitude binning resolution for building frequency tables.
pub const DEFAULT_MAGNITUDE_RESOLUTION: f64 = 0.1;

/// Distinct magnitudes with their observation counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTable<R> {
    magnitudes: Vec<R>,
    frequencies: Vec<R>,
}

impl<R: Real> FrequencyTable<R> {
    pub fn new(magnitudes: Vec<R>, frequencies: Vec<R>) -> Result<Self> {
        if magnitudes.len() != frequencies.len() {
            return Err(Error::invalid("magnitudes and frequencies differ in length"));
        }
        if magnitudes.len() < 2 {
            return Err(Error::invalid("frequency table needs at least 2 magnitudes"));
        }
        for w in magnitudes.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::invalid("magnitudes must be strictly increasing"));
            }
        }
        if frequencies.iter().any(|&f| !(f >= R::one()) || !f.is_finite()) {
            return Err(Error::invalid("frequencies must be counts >= 1"));
        }
        Ok(FrequencyTable { magnitudes, frequencies })
    }

    /// Builds the table by binning raw magnitudes at `resolution` (bin
    /// centers at integer multiples of the resolution).
    pub fn from_magnitudes(samples: &[R], resolution: R) -> Result<Self> {
        if !(resolution > R::zero()) {
            return Err(Error::invalid("resolution must be positive"));
        }
        let mut bins: std::collections::BTreeMap<i64, u64> = std::collections::BTreeMap::new();
        for &m in samples {
            let key = (m / resolution).round().as_f64() as i64;
            *bins.entry(key).or_insert(0) += 1;
        }
        let magnitudes: Vec<R> = bins.keys().map(|&k| R::of(k as f64) * resolution).collect();
        let frequencies: Vec<R> = bins.values().map(|&c| R::of(c as f64)).collect();
        Self::new(magnitudes, frequencies)
    }

    pub fn magnitudes(&self) -> &[R] {
        &self.magnitudes
    }

    pub fn frequencies(&self) -> &[R] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }
}

/// Density estimate on a magnitude grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate<R> {
    pub grid: Vec<R>,
    pub values: Vec<R>,
    pub bandwidth: R,
}

/// The standard evaluation grid: `GRID_POINTS` equispaced magnitudes from the
/// completeness magnitude to the maximum one (inclusive).
pub fn magnitude_grid<R: Real>(m0: R, m_max: R) -> Result<Vec<R>> {
    if !(m_max > m0) {
        return Err(Error::invalid(format!("empty magnitude range [{m0}, {m_max}]")));
    }
    let step = (m_max - m0) / R::of_usize(GRID_POINTS - 1);
    Ok((0..GRID_POINTS).map(|i| m0 + step * R::of_usize(i)).collect())
}

fn gaussian<R: Real>(x: R) -> R {
    let norm = R::of(1.0 / (2.0 * std::f64::consts::PI).sqrt());
    norm * (-x * x / R::of(2.0)).exp()
}

/// Evaluates the frequency-weighted estimator on `grid` at bandwidth `gamma`.
pub fn estimate_density<R: Real>(
    table: &FrequencyTable<R>,
    grid: &[R],
    gamma: R,
) -> Result<DensityEstimate<R>> {
    if !(gamma > R::zero()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {gamma}")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for &m in grid {
        let mut num = R::zero();
        let mut den = R::zero();
        for (&mi, &fi) in table.magnitudes().iter().zip(table.frequencies()) {
            let k = gaussian((m - mi) / gamma);
            num = num + fi * k;
            den = den + k;
        }
        if den == R::zero() {
            return Err(Error::numeric(format!(
                "all kernel weights underflow at grid point {m} (bandwidth {gamma} too small)"
            )));
        }
        values.push(num / den);
    }
    Ok(DensityEstimate { grid: grid.to_vec(), values, bandwidth: gamma })
}

/// Default bandwidth search grid: 60 log-spaced values in [0.01, 1.5].
pub fn default_bandwidth_candidates<R: Real>() -> Vec<R> {
    let (lo, hi, n) = (0.01_f64, 1.5_f64, 60usize);
    let ratio = (hi / lo).ln() / (n as f64 - 1.0);
    (0..n).map(|i| R::of(lo * (ratio * i as f64).exp())).collect()
}

/// Leave-one-out cross-validation: scores each candidate bandwidth by
/// `sum_i |f_hat_i - f_i|` where `f_hat_i` is the leave-one-out estimate at
/// `m_i`, and returns the argmin (ties resolved toward the smaller
/// bandwidth) together with all scores. Candidates whose leave-one-out
/// normalizer underflows for some i score +inf.
pub fn loocv_bandwidth<R: Real>(
    table: &FrequencyTable<R>,
    candidates: &[R],
) -> Result<(R, Vec<R>)> {
    if candidates.is_empty() {
        return Err(Error::invalid("no bandwidth candidates"));
    }
    if candidates.iter().any(|&g| !(g > R::zero())) {
        return Err(Error::invalid("bandwidth candidates must be positive"));
    }
    for w in candidates.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::invalid("bandwidth candidates must be strictly increasing"));
        }
    }
    if table.len() < 3 {
        return Err(Error::invalid("leave-one-out needs at least 3 table entries"));
    }

    let mut scores = Vec::with_capacity(candidates.len());
    for &gamma in candidates {
        let mut score = R::zero();
        let mut usable = true;
        for i in 0..table.len() {
            let mi = table.magnitudes()[i];
            let mut num = R::zero();
            let mut den = R::zero();
            for j in 0..table.len() {
                if j == i {
                    continue;
                }
                let k = gaussian((mi - table.magnitudes()[j]) / gamma);
                num = num + table.frequencies()[j] * k;
                den = den + k;
            }
            if den == R::zero() {
                usable = false;
                break;
            }
            score = score + (num / den - table.frequencies()[i]).abs();
        }
        scores.push(if usable { score } else { R::infinity() });
    }

    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    if scores[best].is_infinite() {
        return Err(Error::numeric(
            "every candidate bandwidth underflows the leave-one-out normalizer",
        ));
    }
    Ok((candidates[best], scores))
}
