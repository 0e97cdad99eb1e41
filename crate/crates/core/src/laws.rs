//! Magnitude and triggering laws: Gutenberg-Richter, the mother-conditional
//! magnitude density, the Omori-Utsu decay, and the productivity law.
//!
//! All densities are per magnitude unit above the completeness magnitude
//! `m0`; samplers are exact inverse-CDF transforms of a uniform draw so the
//! caller controls seeding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gutenberg-Richter magnitude law `beta * exp(-beta (m - m0))` for m >= m0,
/// with `beta = b ln 10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrLaw<R> {
    pub beta: R,
    pub m0: R,
}

impl<R: Real> GrLaw<R> {
    pub fn new(beta: R, m0: R) -> Result<Self> {
        if !(beta.is_finite() && beta > R::zero()) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        if !m0.is_finite() {
            return Err(Error::invalid("m0 must be finite"));
        }
        Ok(GrLaw { beta, m0 })
    }

    /// Law with slope `b` (common seismological parameterization).
    pub fn from_b_value(b: R, m0: R) -> Result<Self> {
        Self::new(b * R::of(std::f64::consts::LN_10), m0)
    }

    pub fn density(&self, m: R) -> Result<R> {
        if m < self.m0 {
            return Err(Error::invalid(format!("magnitude {m} below m0 {}", self.m0)));
        }
        Ok(self.beta * (-self.beta * (m - self.m0)).exp())
    }

    pub fn cdf(&self, m: R) -> R {
        if m <= self.m0 {
            return R::zero();
        }
        R::one() - (-self.beta * (m - self.m0)).exp()
    }

    /// Inverse-CDF sample: `m = m0 - ln(1 - u) / beta` for u in (0, 1).
    pub fn sample(&self, u: R) -> Result<R> {
        check_unit_open(u)?;
        Ok(self.m0 - (R::one() - u).ln() / self.beta)
    }
}

/// Conditional density of a triggered magnitude `m` given its mother's
/// magnitude `m_prime`:
///
/// ```text
/// p(m | m') = beta e^{-beta(m-m0)} [1 + C1 (1 - 2 e^{-(beta-a)(m'-m0)})
///                                          (1 - 2 e^{-beta (m-m0)})]
/// ```
///
/// Reduces to Gutenberg-Richter at `c1 = 0`. Positivity of the density
/// requires `0 <= c1 < 1` and `beta > a`; the constructor enforces both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLaw<R> {
    pub beta: R,
    pub a: R,
    pub c1: R,
    pub m0: R,
}

impl<R: Real> ConditionalLaw<R> {
    pub fn new(beta: R, a: R, c1: R, m0: R) -> Result<Self> {
        if !(beta.is_finite() && beta > R::zero()) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        if !(a.is_finite() && a > R::zero()) {
            return Err(Error::invalid(format!("a must be positive, got {a}")));
        }
        if beta <= a {
            return Err(Error::invalid(format!(
                "conditional law requires beta > a for positivity (beta = {beta}, a = {a})"
            )));
        }
        if !(c1 >= R::zero() && c1 < R::one()) {
            return Err(Error::invalid(format!("c1 must lie in [0, 1), got {c1}")));
        }
        if !m0.is_finite() {
            return Err(Error::invalid("m0 must be finite"));
        }
        Ok(ConditionalLaw { beta, a, c1, m0 })
    }

    /// Mother-magnitude coupling factor `g(m') = 1 - 2 e^{-(beta-a)(m'-m0)}`,
    /// in [-1, 1) for m' >= m0.
    pub fn coupling(&self, m_prime: R) -> R {
        let two = R::of(2.0);
        R::one() - two * (-(self.beta - self.a) * (m_prime - self.m0)).exp()
    }

    pub fn density(&self, m: R, m_prime: R) -> Result<R> {
        if m < self.m0 {
            return Err(Error::invalid(format!("magnitude {m} below m0 {}", self.m0)));
        }
        if m_prime < self.m0 {
            return Err(Error::invalid(format!(
                "mother magnitude {m_prime} below m0 {}",
                self.m0
            )));
        }
        let two = R::of(2.0);
        let y = (-self.beta * (m - self.m0)).exp();
        let value =
            self.beta * y * (R::one() + self.c1 * self.coupling(m_prime) * (R::one() - two * y));
        if value < R::zero() {
            return Err(Error::numeric(format!(
                "conditional density negative at m = {m}, m' = {m_prime}: invariant breach"
            )));
        }
        Ok(value)
    }

    /// CDF in closed form. With `y = e^{-beta (m-m0)}` and `g = coupling(m')`:
    /// `F(m) = 1 - y + c1 g (y^2 - y)`.
    pub fn cdf(&self, m: R, m_prime: R) -> R {
        if m <= self.m0 {
            return R::zero();
        }
        let y = (-self.beta * (m - self.m0)).exp();
        R::one() - y + self.c1 * self.coupling(m_prime) * (y * y - y)
    }

    /// Inverse-CDF sample. Solves the quadratic
    /// `q y^2 - (1 + q) y + (1 - u) = 0` with `q = c1 g(m')` for the root
    /// `y` in (0, 1], then returns `m = m0 - ln(y) / beta`. Falls back to the
    /// Gutenberg-Richter inverse when `q = 0`.
    pub fn sample(&self, u: R, m_prime: R) -> Result<R> {
        check_unit_open(u)?;
        if m_prime < self.m0 {
            return Err(Error::invalid(format!(
                "mother magnitude {m_prime} below m0 {}",
                self.m0
            )));
        }
        let q = self.c1 * self.coupling(m_prime);
        if q == R::zero() {
            return Ok(self.m0 - (R::one() - u).ln() / self.beta);
        }
        // Stable small root of the quadratic: y = 2(1-u) / (1+q + sqrt(disc)).
        let one = R::one();
        let disc = (one + q) * (one + q) - R::of(4.0) * q * (one - u);
        if disc < R::zero() {
            return Err(Error::numeric(format!(
                "no inverse-CDF root for u = {u}, m' = {m_prime}, q = {q}"
            )));
        }
        let y = R::of(2.0) * (one - u) / (one + q + disc.sqrt());
        if !(y > R::zero() && y <= one) {
            return Err(Error::numeric(format!(
                "inverse-CDF root {y} outside (0, 1] for u = {u}, m' = {m_prime}"
            )));
        }
        Ok(self.m0 - y.ln() / self.beta)
    }
}

/// Omori-Utsu aftershock decay `phi(t) = (t + c)^{-p}` (per day).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmoriLaw<R> {
    pub c: R,
    pub p: R,
}

impl<R: Real> OmoriLaw<R> {
    pub fn new(c: R, p: R) -> Result<Self> {
        if !(c.is_finite() && c > R::zero()) {
            return Err(Error::invalid(format!("c must be positive, got {c}")));
        }
        if !(p.is_finite() && p > R::zero()) {
            return Err(Error::invalid(format!("p must be positive, got {p}")));
        }
        Ok(OmoriLaw { c, p })
    }

    pub fn rate(&self, t: R) -> Result<R> {
        if t < R::zero() {
            return Err(Error::invalid(format!("elapsed time {t} negative")));
        }
        Ok((t + self.c).powf(-self.p))
    }

    /// Integral of the decay over [0, s]. Handles p = 1 with the logarithmic
    /// antiderivative and uses an expm1 form when p is numerically close to 1.
    pub fn integral(&self, s: R) -> R {
        if s <= R::zero() {
            return R::zero();
        }
        let q = R::one() - self.p;
        if q.abs() < R::of(1e-8) {
            // ((s+c)^q - c^q)/q = c^q expm1(q ln((s+c)/c)) / q, stable as q -> 0.
            let l = ((s + self.c) / self.c).ln();
            if q == R::zero() {
                return l;
            }
            return self.c.powf(q) * (q * l).exp_m1() / q;
        }
        ((s + self.c).powf(q) - self.c.powf(q)) / q
    }

    /// Inverse of [`OmoriLaw::integral`]: the s with integral(s) = mass.
    pub fn integral_inverse(&self, mass: R) -> R {
        if mass <= R::zero() {
            return R::zero();
        }
        let q = R::one() - self.p;
        if q.abs() < R::of(1e-8) {
            // From mass = c^q expm1(q L) / q with L = ln((s+c)/c).
            if q == R::zero() {
                return self.c * mass.exp_m1();
            }
            let l = (mass * q / self.c.powf(q)).ln_1p() / q;
            return self.c * l.exp_m1();
        }
        (self.c.powf(q) + mass * q).powf(q.recip()) - self.c
    }
}

/// Productivity law `rho(m) = kappa e^{a (m - m0)}`: expected direct
/// offspring rate multiplier of a magnitude-m event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductivityLaw<R> {
    pub kappa: R,
    pub a: R,
    pub m0: R,
}

impl<R: Real> ProductivityLaw<R> {
    pub fn new(kappa: R, a: R, m0: R) -> Result<Self> {
        if !(kappa.is_finite() && kappa > R::zero()) {
            return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
        }
        if !(a.is_finite() && a > R::zero()) {
            return Err(Error::invalid(format!("a must be positive, got {a}")));
        }
        if !m0.is_finite() {
            return Err(Error::invalid("m0 must be finite"));
        }
        Ok(ProductivityLaw { kappa, a, m0 })
    }

    pub fn value(&self, m: R) -> Result<R> {
        if m < self.m0 {
            return Err(Error::invalid(format!("magnitude {m} below m0 {}", self.m0)));
        }
        Ok(self.kappa * (self.a * (m - self.m0)).exp())
    }
}

fn check_unit_open<R: Real>(u: R) -> Result<()> {
    if !(u > R::zero() && u < R::one()) {
        return Err(Error::invalid(format!("uniform draw {u} outside (0, 1)")));
    }
    Ok(())
}
