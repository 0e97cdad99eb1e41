//! Subinterval construction, the two pairing analyses (time-window pairing
//! and mother attribution), and trend regression of normalized follower
//! magnitude means against trigger magnitudes.

use serde::Serialize;

use crate::catalog::{Catalog, Parent};
use crate::error::{Error, Result};
use crate::etas::Attribution;
use crate::scalar::Real;
use crate::stats::t2_two_sided_p;

/// Closed magnitude interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagnitudeInterval<R> {
    pub lo: R,
    pub hi: R,
}

impl<R: Real> MagnitudeInterval<R> {
    pub fn contains(&self, m: R) -> bool {
        m >= self.lo && m <= self.hi
    }
}

/// Four disjoint trigger-magnitude subintervals with their pool membership
/// counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubintervalScheme<R> {
    pub intervals: [MagnitudeInterval<R>; 4],
    pub member_counts: [usize; 4],
}

/// Follower magnitudes collected for one trigger subinterval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagnitudeGroup<R> {
    pub interval: MagnitudeInterval<R>,
    /// One entry per (trigger, follower) pair; duplicates kept.
    pub members: Vec<R>,
    /// Mean magnitude of the triggering events in the interval.
    pub trigger_mean: R,
}

/// Regression of normalized follower-magnitude means on trigger means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendResult<R> {
    pub trigger_means: [R; 4],
    pub raw_means: [R; 4],
    /// Raw means divided by their own average; they average to exactly 1.
    pub normalized_means: [R; 4],
    /// Standard errors of the normalized means.
    pub standard_errors: [R; 4],
    pub slope: R,
    pub intercept: R,
    pub r: R,
    pub p_value: R,
}

/// Builds four disjoint subintervals over the trigger-magnitude pool.
///
/// With `manual` intervals they are validated verbatim; otherwise boundaries
/// are placed at empirical quartiles of the pool (ties kept together) so the
/// four membership counts stay comparable.
pub fn make_subintervals<R: Real>(
    pool: &[R],
    manual: Option<[MagnitudeInterval<R>; 4]>,
) -> Result<SubintervalScheme<R>> {
    if let Some(intervals) = manual {
        let lo = pool.iter().copied().reduce(|a, b| a.min(b));
        let hi = pool.iter().copied().reduce(|a, b| a.max(b));
        let (lo, hi) = match (lo, hi) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(Error::invalid("empty trigger pool")),
        };
        for (k, iv) in intervals.iter().enumerate() {
            if !(iv.lo <= iv.hi) {
                return Err(Error::invalid(format!("interval {k} has lo > hi")));
            }
            if iv.hi < lo || iv.lo > hi {
                return Err(Error::invalid(format!(
                    "interval {k} [{}, {}] lies outside the pool range [{lo}, {hi}]",
                    iv.lo, iv.hi
                )));
            }
        }
        for k in 0..3 {
            if !(intervals[k].hi < intervals[k + 1].lo) {
                return Err(Error::invalid(format!(
                    "intervals {k} and {} overlap or touch",
                    k + 1
                )));
            }
        }
        let mut counts = [0usize; 4];
        for &m in pool {
            for (k, iv) in intervals.iter().enumerate() {
                if iv.contains(m) {
                    counts[k] += 1;
                }
            }
        }
        if counts.contains(&0) {
            return Err(Error::invalid(format!(
                "every subinterval needs pool members, got counts {counts:?}"
            )));
        }
        return Ok(SubintervalScheme { intervals, member_counts: counts });
    }

    if pool.len() < 40 {
        return Err(Error::invalid(format!(
            "automatic subintervals need a pool of >= 40 trigger magnitudes, got {}",
            pool.len()
        )));
    }
    let mut sorted = pool.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite magnitudes"));

    // Distinct values with multiplicities, cut as close to the quantile
    // targets as the ties allow.
    let mut distinct: Vec<(R, usize)> = Vec::new();
    for &m in &sorted {
        match distinct.last_mut() {
            Some((v, c)) if *v == m => *c += 1,
            _ => distinct.push((m, 1)),
        }
    }
    if distinct.len() < 4 {
        return Err(Error::invalid(format!(
            "pool has only {} distinct magnitudes; need at least 4",
            distinct.len()
        )));
    }
    let n = sorted.len();
    let mut intervals = Vec::with_capacity(4);
    let mut counts = Vec::with_capacity(4);
    let mut start = 0usize; // index into distinct
    let mut cum = 0usize;
    for k in 0..3 {
        let target = (n * (k + 1)) / 4;
        let mut end = start;
        let mut count = 0usize;
        // Leave enough distinct values for the remaining intervals.
        let reserve = 3 - k;
        while end < distinct.len() - reserve {
            count += distinct[end].1;
            cum += distinct[end].1;
            end += 1;
            if cum >= target {
                break;
            }
        }
        intervals.push(MagnitudeInterval { lo: distinct[start].0, hi: distinct[end - 1].0 });
        counts.push(count);
        start = end;
    }
    // Last interval: capped at the TOP_QUANTILE pool quantile so a handful
    // of extreme magnitudes cannot stretch it across the whole upper tail.
    let cap = ((n as f64) * TOP_QUANTILE).ceil() as usize;
    let mut end = start;
    let mut count = 0usize;
    while end < distinct.len() && (count == 0 || cum + distinct[end].1 <= cap) {
        count += distinct[end].1;
        cum += distinct[end].1;
        end += 1;
    }
    intervals.push(MagnitudeInterval { lo: distinct[start].0, hi: distinct[end - 1].0 });
    counts.push(count);

    Ok(SubintervalScheme {
        intervals: [intervals[0], intervals[1], intervals[2], intervals[3]],
        member_counts: [counts[0], counts[1], counts[2], counts[3]],
    })
}

/// Pool quantile bounding the automatic top subinterval (the heaviest few
/// percent of trigger magnitudes are left out of it).
pub const TOP_QUANTILE: f64 = 0.92;

/// First analysis: for every event whose magnitude falls in subinterval k
/// (a "starter"), collect the magnitudes of all events in `(t, t + delta]`;
/// one group entry per (starter, follower) pair. A starter near the catalog
/// end keeps its truncated window. `trigger_mean` is the mean magnitude of
/// the starters.
pub fn windowed_groups<R: Real>(
    cat: &Catalog<R>,
    delta: R,
    scheme: &SubintervalScheme<R>,
) -> [MagnitudeGroup<R>; 4] {
    let events = cat.events();
    let groups: Vec<MagnitudeGroup<R>> = scheme
        .intervals
        .iter()
        .map(|&interval| {
            let mut members = Vec::new();
            let mut trigger_sum = R::zero();
            let mut trigger_count = 0usize;
            let mut lo = 0usize; // first follower candidate, advanced monotonically
            for (i, e) in events.iter().enumerate() {
                if !interval.contains(e.magnitude) {
                    continue;
                }
                trigger_sum = trigger_sum + e.magnitude;
                trigger_count += 1;
                // Followers strictly after t up to and including t + delta.
                let mut j = lo.max(i);
                while j < events.len() && events[j].time <= e.time {
                    j += 1;
                }
                lo = j;
                while j < events.len() && events[j].time <= e.time + delta {
                    members.push(events[j].magnitude);
                    j += 1;
                }
            }
            let trigger_mean = if trigger_count == 0 {
                R::nan()
            } else {
                trigger_sum / R::of_usize(trigger_count)
            };
            MagnitudeGroup { interval, members, trigger_mean }
        })
        .collect();
    groups.try_into().expect("exactly four groups")
}

/// Second analysis: group the magnitudes of triggered events by the
/// subinterval their attributed mother's magnitude falls in. `trigger_mean`
/// is the mean magnitude of the distinct mothers with attributed offspring
/// in the interval.
pub fn mother_groups<R: Real>(
    cat: &Catalog<R>,
    attribution: &Attribution<R>,
    scheme: &SubintervalScheme<R>,
) -> [MagnitudeGroup<R>; 4] {
    let events = cat.events();
    let groups: Vec<MagnitudeGroup<R>> = scheme
        .intervals
        .iter()
        .map(|&interval| {
            let mut members = Vec::new();
            let mut is_mother = vec![false; events.len()];
            for (i, mother) in attribution.mothers.iter().enumerate() {
                if let Parent::Index(j) = mother {
                    if interval.contains(events[*j].magnitude) {
                        members.push(events[i].magnitude);
                        is_mother[*j] = true;
                    }
                }
            }
            let mut trigger_sum = R::zero();
            let mut trigger_count = 0usize;
            for (j, flag) in is_mother.iter().enumerate() {
                if *flag {
                    trigger_sum = trigger_sum + events[j].magnitude;
                    trigger_count += 1;
                }
            }
            let trigger_mean = if trigger_count == 0 {
                R::nan()
            } else {
                trigger_sum / R::of_usize(trigger_count)
            };
            MagnitudeGroup { interval, members, trigger_mean }
        })
        .collect();
    groups.try_into().expect("exactly four groups")
}

/// Trigger-magnitude multiset for the windowed analysis: one entry (the
/// starter's magnitude) per (starter, follower) pair, so that quantile
/// subintervals balance downstream group sizes.
pub fn windowed_trigger_pool<R: Real>(cat: &Catalog<R>, delta: R) -> Vec<R> {
    let events = cat.events();
    let mut pool = Vec::new();
    let mut lo = 0usize;
    for (i, e) in events.iter().enumerate() {
        let mut j = lo.max(i);
        while j < events.len() && events[j].time <= e.time {
            j += 1;
        }
        lo = j;
        while j < events.len() && events[j].time <= e.time + delta {
            pool.push(e.magnitude);
            j += 1;
        }
    }
    pool
}

/// Trigger-magnitude multiset for the mother analysis: one entry (the
/// mother's magnitude) per attributed daughter.
pub fn mother_trigger_pool<R: Real>(cat: &Catalog<R>, attribution: &Attribution<R>) -> Vec<R> {
    attribution
        .mothers
        .iter()
        .filter_map(|m| match m {
            Parent::Index(j) => Some(cat.events()[*j].magnitude),
            _ => None,
        })
        .collect()
}

/// Per-group means and standard errors, normalization by the average of the
/// four means, and OLS/Pearson regression of the normalized means on the
/// trigger means (two-sided p from the t statistic with 2 degrees of
/// freedom).
pub fn trend<R: Real>(groups: &[MagnitudeGroup<R>; 4]) -> Result<TrendResult<R>> {
    let mut raw_means = [R::zero(); 4];
    let mut stderr = [R::zero(); 4];
    let mut trigger_means = [R::zero(); 4];
    for (k, g) in groups.iter().enumerate() {
        if g.members.len() < 2 {
            return Err(Error::invalid(format!(
                "group {k} has {} follower magnitudes; need >= 2 for a standard error",
                g.members.len()
            )));
        }
        if !g.trigger_mean.is_finite() {
            return Err(Error::invalid(format!("group {k} has no triggering events")));
        }
        let n = R::of_usize(g.members.len());
        let mean = g.members.iter().copied().sum::<R>() / n;
        let var =
            g.members.iter().map(|&m| (m - mean) * (m - mean)).sum::<R>() / (n - R::one());
        raw_means[k] = mean;
        stderr[k] = (var / n).sqrt();
        trigger_means[k] = g.trigger_mean;
    }
    trend_from_summaries(trigger_means, raw_means, stderr)
}

/// Regression stage on precomputed summaries; usable directly when only
/// group means and standard errors are at hand.
pub fn trend_from_summaries<R: Real>(
    trigger_means: [R; 4],
    raw_means: [R; 4],
    raw_standard_errors: [R; 4],
) -> Result<TrendResult<R>> {
    let four = R::of(4.0);
    let normalizer = raw_means.iter().copied().sum::<R>() / four;
    if !(normalizer > R::zero()) {
        return Err(Error::numeric("mean of group means must be positive"));
    }
    let normalized_means = raw_means.map(|m| m / normalizer);
    let standard_errors = raw_standard_errors.map(|s| s / normalizer);

    let xbar = trigger_means.iter().copied().sum::<R>() / four;
    let ybar = normalized_means.iter().copied().sum::<R>() / four;
    let mut sxx = R::zero();
    let mut syy = R::zero();
    let mut sxy = R::zero();
    for k in 0..4 {
        let dx = trigger_means[k] - xbar;
        let dy = normalized_means[k] - ybar;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    if !(sxx > R::zero()) {
        return Err(Error::numeric("trigger means are all identical"));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let (r, p_value) = if syy > R::zero() {
        let r = sxy / (sxx * syy).sqrt();
        let r2 = (r * r).min(R::one());
        let p = if r2 == R::one() {
            R::zero()
        } else {
            let t = r.abs() * (R::of(2.0) / (R::one() - r2)).sqrt();
            t2_two_sided_p(t)
        };
        (r, p)
    } else {
        // Flat response: no correlation.
        (R::zero(), R::one())
    };

    Ok(TrendResult {
        trigger_means,
        raw_means,
        normalized_means,
        standard_errors,
        slope,
        intercept,
        r,
        p_value,
    })
}
