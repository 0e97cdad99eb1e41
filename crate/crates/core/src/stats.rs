//! Small statistical helpers: tail probabilities and the one-sample
//! Kolmogorov-Smirnov test used by residual analysis.

use crate::scalar::Real;

/// Two-sided tail probability of a standard normal variate.
pub fn normal_two_sided_p<R: Real>(z: R) -> R {
    let z = z.as_f64().abs();
    R::of(libm::erfc(z / std::f64::consts::SQRT_2))
}

/// Two-sided p-value of a Student-t statistic with 2 degrees of freedom.
///
/// The df = 2 CDF has the closed form F(t) = 1/2 + t / (2 sqrt(2 + t^2)),
/// so p = 1 - |t| / sqrt(2 + |t|^2).
pub fn t2_two_sided_p<R: Real>(t: R) -> R {
    if t.is_infinite() {
        return R::zero();
    }
    let t = t.as_f64().abs();
    R::of((1.0 - t / (2.0 + t * t).sqrt()).max(0.0))
}

/// Two-sided p-value of a Student-t statistic with `df` degrees of freedom,
/// via the regularized incomplete beta function.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Lentz's continued fraction for the incomplete beta function.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// One-sample Kolmogorov-Smirnov statistic of `samples` against the CDF `f`.
///
/// `samples` need not be sorted; a sorted copy is made internally.
pub fn ks_statistic<R: Real>(samples: &[R], f: impl Fn(R) -> R) -> R {
    assert!(!samples.is_empty(), "ks_statistic needs at least one sample");
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let n = R::of_usize(xs.len());
    let mut d = R::zero();
    for (i, &x) in xs.iter().enumerate() {
        let cdf = f(x);
        let hi = R::of_usize(i + 1) / n - cdf;
        let lo = cdf - R::of_usize(i) / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Asymptotic p-value for a one-sample KS statistic `d` at sample size `n`.
///
/// Uses the Kolmogorov distribution with the small-sample correction
/// lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) * d.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sqn = (n as f64).sqrt();
    kolmogorov_q((sqn + 0.12 + 0.11 / sqn) * d)
}

/// Survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Empirical quantile at fraction `q` of already-sorted data (nearest-rank).
pub fn sorted_quantile<R: Real>(sorted: &[R], q: f64) -> R {
    assert!(!sorted.is_empty());
    let idx = ((sorted.len() as f64) * q).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tail_matches_reference() {
        // 2 * (1 - Phi(3)) = 0.002699796...
        let p: f64 = normal_two_sided_p(3.0);
        assert!((p - 0.0026998).abs() < 1e-6, "p = {p}");
        let one: f64 = normal_two_sided_p(0.0);
        assert_eq!(one, 1.0);
    }

    #[test]
    fn t2_reference_points() {
        // t = 0 -> p = 1; large t -> p -> 0.
        assert_eq!(t2_two_sided_p(0.0_f64), 1.0);
        let p: f64 = t2_two_sided_p(15.671);
        assert!((p - 0.00403).abs() < 1e-4, "p = {p}");
        assert_eq!(t2_two_sided_p(f64::INFINITY), 0.0);
    }

    #[test]
    fn student_t_reference_points() {
        // Classic two-sided critical value: t = 2.228, df = 10 -> p = 0.05.
        let p = student_t_two_sided_p(2.228, 10.0);
        assert!((p - 0.05).abs() < 2e-4, "p = {p}");
        // df = 2 agrees with the closed form.
        for t in [0.5, 2.0, 9.925] {
            let closed: f64 = t2_two_sided_p(t);
            let general = student_t_two_sided_p(t, 2.0);
            assert!((closed - general).abs() < 1e-10, "t = {t}: {closed} vs {general}");
        }
    }

    #[test]
    fn ks_uniform_exact_fit() {
        // Samples at the empirical midpoints minimize D for U(0,1).
        let n = 100usize;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x);
        assert!((d - 0.005).abs() < 1e-12, "d = {d}");
        assert!(ks_pvalue(d, n) > 0.999);
    }

    #[test]
    fn ks_detects_gross_mismatch() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 4000.0).collect();
        let d = ks_statistic(&xs, |x| x);
        assert!(ks_pvalue(d, 1000) < 1e-6);
    }
}
