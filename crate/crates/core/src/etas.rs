//! Temporal ETAS engine: conditional intensity, log-likelihood,
//! maximum-likelihood fitting, random time change, and most-likely-mother
//! attribution.
//!
//! The conditional intensity is the standard temporal ETAS form
//! `lambda(t) = mu + sum_{t_i < t} kappa e^{a (m_i - m0)} (t - t_i + c)^{-p}`.

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Event, Parent};
use crate::error::{Error, Result};
use crate::laws::OmoriLaw;
use crate::optim;
use crate::scalar::Real;

/// ETAS parameter quintuple, ordered (mu, kappa, c, a, p) throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtasParams<R> {
    /// Background rate (events/day).
    pub mu: R,
    /// Productivity amplitude.
    pub kappa: R,
    /// Omori offset (days).
    pub c: R,
    /// Productivity exponent (per magnitude unit).
    pub a: R,
    /// Omori exponent.
    pub p: R,
}

impl<R: Real> EtasParams<R> {
    pub fn new(mu: R, kappa: R, c: R, a: R, p: R) -> Result<Self> {
        for (name, v) in [("mu", mu), ("kappa", kappa), ("c", c), ("a", a), ("p", p)] {
            if !(v.is_finite() && v > R::zero()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(EtasParams { mu, kappa, c, a, p })
    }

    pub fn to_array(&self) -> [R; 5] {
        [self.mu, self.kappa, self.c, self.a, self.p]
    }

    pub fn from_array(v: [R; 5]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn omori(&self) -> OmoriLaw<R> {
        OmoriLaw { c: self.c, p: self.p }
    }
}

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitReport<R> {
    pub params: EtasParams<R>,
    pub log_likelihood: R,
    pub iterations: usize,
    pub converged: bool,
    /// Interval whose events served as history only (precursory period).
    pub learning_window: (R, R),
}

/// Per-event most-likely-mother assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution<R> {
    /// `Parent::Background` or `Parent::Index(j)` with j < the event index.
    pub mothers: Vec<Parent>,
    /// Rate contribution of the winning term (mu for background).
    pub contributions: Vec<R>,
}

impl<R: Real> Attribution<R> {
    /// Copy of `cat` with parent labels replaced by this attribution.
    pub fn relabel(&self, cat: &Catalog<R>) -> Catalog<R> {
        let mut events: Vec<Event<R>> = cat.events().to_vec();
        for (e, &m) in events.iter_mut().zip(&self.mothers) {
            e.parent = m;
        }
        Catalog::new(events, cat.m0(), cat.window()).expect("relabel preserves invariants")
    }
}

/// Conditional intensity at time `t` given the history strictly before `t`.
pub fn intensity<R: Real>(t: R, cat: &Catalog<R>, params: &EtasParams<R>) -> R {
    let m0 = cat.m0();
    let mut acc = params.mu;
    for e in cat.events() {
        if e.time >= t {
            break;
        }
        let rho = params.kappa * (params.a * (e.magnitude - m0)).exp();
        acc = acc + rho * (t - e.time + params.c).powf(-params.p);
    }
    acc
}

/// Point-process log-likelihood over `target = [T1, T2]`:
/// `sum_{t_i in target} ln lambda(t_i) - integral_{T1}^{T2} lambda`.
/// Events before T1 contribute to lambda as history but not to the sum.
pub fn log_likelihood<R: Real>(
    cat: &Catalog<R>,
    params: &EtasParams<R>,
    target: (R, R),
) -> Result<R> {
    let ctx = LikelihoodContext::new(cat, target)?;
    ctx.value(params)
}

/// Precomputed event views for repeated likelihood evaluations on a fixed
/// catalog and target window.
struct LikelihoodContext<R> {
    times: Vec<R>,
    dm: Vec<R>,
    target: (R, R),
    /// Indices of events inside the target window.
    target_events: Vec<usize>,
}

impl<R: Real> LikelihoodContext<R> {
    fn new(cat: &Catalog<R>, target: (R, R)) -> Result<Self> {
        let (w0, w1) = cat.window();
        let (t1, t2) = target;
        if !(t1 >= w0 && t2 <= w1 && t1 < t2) {
            return Err(Error::invalid(format!(
                "target [{t1}, {t2}] not inside window [{w0}, {w1}]"
            )));
        }
        let m0 = cat.m0();
        let times: Vec<R> = cat.events().iter().map(|e| e.time).collect();
        let dm: Vec<R> = cat.events().iter().map(|e| e.magnitude - m0).collect();
        let target_events: Vec<usize> =
            (0..times.len()).filter(|&i| times[i] >= t1 && times[i] <= t2).collect();
        if target_events.is_empty() {
            return Err(Error::invalid("no events in the target window"));
        }
        Ok(LikelihoodContext { times, dm, target, target_events })
    }

    fn value(&self, params: &EtasParams<R>) -> Result<R> {
        let (t1, t2) = self.target;
        let EtasParams { mu, kappa, c, a, p } = *params;
        let omori = params.omori();
        let rho: Vec<R> = self.dm.iter().map(|&d| kappa * (a * d).exp()).collect();

        let mut log_sum = R::zero();
        for &i in &self.target_events {
            let ti = self.times[i];
            let mut excitation = R::zero();
            for (&tj, &rho_j) in self.times.iter().zip(&rho).take(i) {
                if tj >= ti {
                    break;
                }
                excitation = excitation + rho_j * (ti - tj + c).powf(-p);
            }
            let lam = mu + excitation;
            if !(lam > R::zero()) {
                return Err(Error::numeric(format!("non-positive intensity at event {i}")));
            }
            log_sum = log_sum + lam.ln();
        }

        let mut integral = mu * (t2 - t1);
        for (&tj, &rho_j) in self.times.iter().zip(&rho) {
            if tj >= t2 {
                break;
            }
            let upper = omori.integral(t2 - tj);
            let lower = if tj < t1 { omori.integral(t1 - tj) } else { R::zero() };
            integral = integral + rho_j * (upper - lower);
        }

        Ok(log_sum - integral)
    }

    /// Value and gradient with respect to the raw (mu, kappa, c, a, p).
    fn value_and_grad(&self, params: &EtasParams<R>) -> Result<(R, [R; 5])> {
        let (t1, t2) = self.target;
        let EtasParams { mu, kappa, c, a, p } = *params;
        let rho: Vec<R> = self.dm.iter().map(|&d| kappa * (a * d).exp()).collect();

        let mut log_sum = R::zero();
        let mut g = [R::zero(); 5];
        for &i in &self.target_events {
            let ti = self.times[i];
            let mut s = R::zero();
            let mut s_a = R::zero();
            let mut s_c = R::zero();
            let mut s_p = R::zero();
            for ((&tj, &rho_j), &dm_j) in self.times.iter().zip(&rho).zip(&self.dm).take(i) {
                if tj >= ti {
                    break;
                }
                let x = ti - tj + c;
                let lnx = x.ln();
                let w = (-p * lnx).exp();
                let rw = rho_j * w;
                s = s + rw;
                s_a = s_a + rw * dm_j;
                s_c = s_c + rw / x;
                s_p = s_p + rw * lnx;
            }
            let lam = mu + s;
            if !(lam > R::zero()) {
                return Err(Error::numeric(format!("non-positive intensity at event {i}")));
            }
            log_sum = log_sum + lam.ln();
            let inv = lam.recip();
            g[0] = g[0] + inv;
            g[1] = g[1] + s * inv / kappa;
            g[2] = g[2] - p * s_c * inv;
            g[3] = g[3] + s_a * inv;
            g[4] = g[4] - s_p * inv;
        }

        let omori = params.omori();
        let mut integral = mu * (t2 - t1);
        let mut d_kappa = R::zero();
        let mut d_a = R::zero();
        let mut d_c = R::zero();
        let mut d_p = R::zero();
        for ((&tj, &rho_j), &dm_j) in self.times.iter().zip(&rho).zip(&self.dm) {
            if tj >= t2 {
                break;
            }
            let s_upper = t2 - tj;
            let s_lower = if tj < t1 { t1 - tj } else { R::zero() };
            let mass = omori.integral(s_upper) - omori.integral(s_lower);
            integral = integral + rho_j * mass;
            d_kappa = d_kappa + rho_j * mass / kappa;
            d_a = d_a + rho_j * dm_j * mass;
            d_c = d_c + rho_j * (omori_dc(&omori, s_upper) - omori_dc(&omori, s_lower));
            d_p = d_p + rho_j * (omori_dp(&omori, s_upper) - omori_dp(&omori, s_lower));
        }

        g[0] = g[0] - (t2 - t1);
        g[1] = g[1] - d_kappa;
        g[2] = g[2] - d_c;
        g[3] = g[3] - d_a;
        g[4] = g[4] - d_p;
        Ok((log_sum - integral, g))
    }
}

/// d/dc of the Omori integral over [0, s]: `(s+c)^{-p} - c^{-p}`.
fn omori_dc<R: Real>(law: &OmoriLaw<R>, s: R) -> R {
    if s <= R::zero() {
        return R::zero();
    }
    (s + law.c).powf(-law.p) - law.c.powf(-law.p)
}

/// d/dp of the Omori integral over [0, s].
fn omori_dp<R: Real>(law: &OmoriLaw<R>, s: R) -> R {
    if s <= R::zero() {
        return R::zero();
    }
    let q = R::one() - law.p;
    let ln_a = (s + law.c).ln();
    let ln_b = law.c.ln();
    if q.abs() < R::of(1e-8) {
        return -(ln_a * ln_a - ln_b * ln_b) / R::of(2.0);
    }
    let h = law.integral(s);
    let term = (s + law.c).powf(q) * ln_a - law.c.powf(q) * ln_b;
    (h - term) / q
}

/// Maximum-likelihood fit over the target window that starts after the
/// leading `learning_fraction` of the observation window. The optimizer
/// works in log-parameter space (positivity by construction).
pub fn fit_params<R: Real>(
    cat: &Catalog<R>,
    init: &EtasParams<R>,
    learning_fraction: R,
) -> Result<FitReport<R>> {
    if cat.is_empty() {
        return Err(Error::invalid("cannot fit an empty catalog"));
    }
    if !(learning_fraction >= R::zero() && learning_fraction < R::one()) {
        return Err(Error::invalid(format!(
            "learning fraction {learning_fraction} outside [0, 1)"
        )));
    }
    let (w0, w1) = cat.window();
    let t1 = w0 + learning_fraction * (w1 - w0);
    let ctx = LikelihoodContext::new(cat, (t1, w1))?;

    let objective = |x: &[R; 5]| -> (R, [R; 5]) {
        let raw = x.map(|v| v.exp());
        let params = EtasParams { mu: raw[0], kappa: raw[1], c: raw[2], a: raw[3], p: raw[4] };
        match ctx.value_and_grad(&params) {
            Ok((v, g)) => {
                // Chain rule for the log transform.
                let mut gl = [R::zero(); 5];
                for k in 0..5 {
                    gl[k] = g[k] * raw[k];
                }
                (v, gl)
            }
            Err(_) => (R::neg_infinity(), [R::zero(); 5]),
        }
    };

    let x0 = init.to_array().map(|v| v.ln());
    let out = optim::maximize(objective, x0, 2000, R::of(1e-8));
    let raw = out.x.map(|v| v.exp());
    let params = EtasParams::from_array(raw)?;
    Ok(FitReport {
        params,
        log_likelihood: out.value,
        iterations: out.iterations,
        converged: out.converged,
        learning_window: (w0, t1),
    })
}

/// Random time change: each event time becomes the integrated intensity
/// from the window start, and the window becomes `[0, integral over the
/// whole window]`. Order, magnitudes, and ancestry labels are preserved.
pub fn time_rescale<R: Real>(cat: &Catalog<R>, params: &EtasParams<R>) -> Catalog<R> {
    let (w0, w1) = cat.window();
    let m0 = cat.m0();
    let omori = params.omori();
    let events = cat.events();
    let rho: Vec<R> = events
        .iter()
        .map(|e| params.kappa * (params.a * (e.magnitude - m0)).exp())
        .collect();

    let transformed_time = |t: R, upto: usize| -> R {
        let mut acc = params.mu * (t - w0);
        for j in 0..upto {
            if events[j].time >= t {
                break;
            }
            acc = acc + rho[j] * omori.integral(t - events[j].time);
        }
        acc
    };

    let mut new_events = Vec::with_capacity(events.len());
    for (i, e) in events.iter().enumerate() {
        let mut ne = *e;
        ne.time = transformed_time(e.time, i);
        new_events.push(ne);
    }
    let total = transformed_time(w1, events.len());
    Catalog::new(new_events, m0, (R::zero(), total))
        .expect("time rescaling preserves catalog invariants")
}

/// Most-likely-mother attribution: for each event, the preceding event whose
/// rate term is largest wins, provided it exceeds the background rate mu;
/// ties break toward the most recent candidate.
pub fn attribute_mothers<R: Real>(cat: &Catalog<R>, params: &EtasParams<R>) -> Attribution<R> {
    let m0 = cat.m0();
    let events = cat.events();
    let rho: Vec<R> = events
        .iter()
        .map(|e| params.kappa * (params.a * (e.magnitude - m0)).exp())
        .collect();
    // Any candidate older than the current one contributes at most
    // rho_max * (dt + c)^-p; once the running best exceeds that bound the
    // backward scan can stop without changing the argmax.
    let rho_max = rho.iter().copied().fold(R::zero(), |a, b| a.max(b));
    let mut mothers = Vec::with_capacity(events.len());
    let mut contributions = Vec::with_capacity(events.len());
    for i in 0..events.len() {
        let ti = events[i].time;
        let mut best = params.mu;
        let mut winner = Parent::Background;
        for j in (0..i).rev() {
            if events[j].time >= ti {
                continue;
            }
            let decay = (ti - events[j].time + params.c).powf(-params.p);
            if rho_max * decay <= best {
                break;
            }
            let term = rho[j] * decay;
            if term > best {
                best = term;
                winner = Parent::Index(j);
            }
        }
        mothers.push(winner);
        contributions.push(best);
    }
    Attribution { mothers, contributions }
}
