//! Branching (cluster) simulation of the temporal ETAS process with
//! ground-truth genealogy and two magnitude modes: independent
//! Gutenberg-Richter draws, or draws conditioned on the mother's magnitude.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};

use crate::catalog::{Catalog, Event, Parent};
use crate::error::{Error, Result};
use crate::etas::EtasParams;
use crate::laws::{ConditionalLaw, GrLaw};
use crate::scalar::Real;

/// How triggered-event magnitudes are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum MagnitudeMode<R> {
    /// All magnitudes independent Gutenberg-Richter.
    GutenbergRichter,
    /// Background magnitudes Gutenberg-Richter; triggered magnitudes from
    /// the conditional law given the mother's magnitude.
    Conditional(ConditionalLaw<R>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<R> {
    pub params: EtasParams<R>,
    pub gr: GrLaw<R>,
    pub mode: MagnitudeMode<R>,
    /// Observation window `[t_start, t_end]` in days.
    pub window: (R, R),
    pub seed: u64,
    /// Extra days simulated before the window start and discarded from the
    /// output (precursory burn-in). Default 0.
    pub learning_period: R,
}

impl<R: Real> SimConfig<R> {
    pub fn validate(&self) -> Result<()> {
        if !(self.window.1 > self.window.0) {
            return Err(Error::invalid("simulation window is empty"));
        }
        if self.learning_period < R::zero() {
            return Err(Error::invalid("learning period must be nonnegative"));
        }
        if let MagnitudeMode::Conditional(law) = &self.mode {
            if law.beta != self.gr.beta || law.m0 != self.gr.m0 || law.a != self.params.a {
                return Err(Error::invalid(
                    "conditional law must share beta, a, and m0 with the other laws",
                ));
            }
        }
        let ratio = self.branching_ratio();
        if !(ratio < R::one()) {
            return Err(Error::invalid(format!(
                "supercritical configuration: expected offspring per event {ratio} >= 1 \
                 over the simulation window"
            )));
        }
        Ok(())
    }

    /// Expected direct offspring per event, averaging productivity over the
    /// Gutenberg-Richter magnitude law and integrating the Omori kernel over
    /// the simulated span (offspring beyond the window are never generated,
    /// so the window-truncated integral is the quantity that governs cascade
    /// growth). Infinite when `beta <= a`.
    pub fn branching_ratio(&self) -> R {
        let beta = self.gr.beta;
        let a = self.params.a;
        if beta <= a {
            return R::infinity();
        }
        let span = self.window.1 - self.window.0 + self.learning_period;
        let mean_productivity = self.params.kappa * beta / (beta - a);
        mean_productivity * self.params.omori().integral(span)
    }
}

/// Runs the branching simulation. The output catalog is time-sorted, every
/// event carries its ground-truth parent label, and the run is a pure
/// function of the configuration (fixed seed, fixed output).
pub fn simulate<R: Real>(cfg: &SimConfig<R>) -> Result<Catalog<R>> {
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let (w0, w1) = cfg.window;
    let start = w0 - cfg.learning_period;
    let span = w1 - start;
    let omori = cfg.params.omori();

    struct Raw<R> {
        time: R,
        magnitude: R,
        /// Provisional index of the mother, None for background.
        parent: Option<usize>,
    }

    // Background: homogeneous Poisson on [start, w1], Gutenberg-Richter
    // magnitudes drawn after sorting the times.
    let n_bg = sample_poisson(&mut rng, (cfg.params.mu * span).as_f64())?;
    let mut bg_times: Vec<R> = (0..n_bg).map(|_| start + R::of(open_unit(&mut rng)) * span).collect();
    bg_times.sort_by(|x, y| x.partial_cmp(y).expect("finite times"));
    let mut raw: Vec<Raw<R>> = Vec::with_capacity(n_bg * 2);
    for t in bg_times {
        let m = cfg.gr.sample(R::of(open_unit(&mut rng)))?;
        raw.push(Raw { time: t, magnitude: m, parent: None });
    }

    // Cascade: each event spawns a Poisson number of offspring with Omori
    // delays truncated at the window end.
    let mut cursor = 0usize;
    while cursor < raw.len() {
        let (t_p, m_p) = (raw[cursor].time, raw[cursor].magnitude);
        let horizon = w1 - t_p;
        if horizon > R::zero() {
            let mass = omori.integral(horizon);
            let rho = cfg.params.kappa * (cfg.params.a * (m_p - cfg.gr.m0)).exp();
            let n_children = sample_poisson(&mut rng, (rho * mass).as_f64())?;
            for _ in 0..n_children {
                let delay = omori.integral_inverse(R::of(open_unit(&mut rng)) * mass);
                if !(delay > R::zero()) {
                    continue;
                }
                let m = match &cfg.mode {
                    MagnitudeMode::GutenbergRichter => cfg.gr.sample(R::of(open_unit(&mut rng)))?,
                    MagnitudeMode::Conditional(law) => {
                        law.sample(R::of(open_unit(&mut rng)), m_p)?
                    }
                };
                raw.push(Raw { time: t_p + delay, magnitude: m, parent: Some(cursor) });
            }
        }
        cursor += 1;
    }

    // Keep the observation window, sort by time, remap genealogy.
    let mut order: Vec<usize> = (0..raw.len()).filter(|&i| raw[i].time >= w0).collect();
    order.sort_by(|&i, &j| raw[i].time.partial_cmp(&raw[j].time).expect("finite times"));
    let mut final_pos: Vec<Option<usize>> = vec![None; raw.len()];
    for (pos, &i) in order.iter().enumerate() {
        final_pos[i] = Some(pos);
    }
    let events: Vec<Event<R>> = order
        .iter()
        .map(|&i| {
            let parent = match raw[i].parent {
                None => Parent::Background,
                // Mothers discarded with the burn-in leave their offspring
                // without an in-catalog ancestor.
                Some(j) => final_pos[j].map_or(Parent::Unknown, Parent::Index),
            };
            Event { parent, ..Event::new(raw[i].time, raw[i].magnitude) }
        })
        .collect();
    Catalog::new(events, cfg.gr.m0, cfg.window)
}

fn open_unit(rng: &mut ChaCha12Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn sample_poisson(rng: &mut ChaCha12Rng, mean: f64) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::numeric(format!("Poisson sampler rejected mean {mean}: {e}")))?;
    let draw: f64 = dist.sample(rng);
    Ok(draw as usize)
}
