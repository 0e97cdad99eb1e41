//! Pipeline execution: catalog acquisition, fitting, rescaling, causal
//! window selection, the two pairing analyses, and plot-ready outputs.
//!
//! Every stage is computed first and all files are flushed atomically at the
//! end, so a failing run leaves no partial outputs behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use etaskit_core::catalog::{
    catalog_to_csv, haversine_km, load_catalog, write_atomic, TimeFormat,
};
use etaskit_core::correlate::{
    acf_significance, autocorrelation, default_fit_lag, fit_power_law, select_delta_star,
    DELTA_STAR_THRESHOLD,
};
use etaskit_core::etas::{attribute_mothers, fit_params, time_rescale};
use etaskit_core::kde::{estimate_density, loocv_bandwidth, magnitude_grid, FrequencyTable};
use etaskit_core::laws::{ConditionalLaw, GrLaw};
use etaskit_core::simulate::{simulate, MagnitudeMode, SimConfig};
use etaskit_core::stats::student_t_two_sided_p;
use etaskit_core::trend::{
    make_subintervals, mother_groups, mother_trigger_pool, trend, windowed_groups,
    windowed_trigger_pool, MagnitudeGroup, MagnitudeInterval, SubintervalScheme,
};
use etaskit_core::{AcfEstimate, Attribution, Catalog, EtasParams, FitReport, Parent, TrendResult};

use crate::settings::{PipelineSettings, SimSettings};
use crate::CliError;

/// One output file, buffered until the final flush.
pub struct OutputFile {
    pub path: PathBuf,
    pub content: String,
}

pub struct OutputSet {
    root: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputSet {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutputSet { root: root.into(), files: Vec::new() }
    }

    pub fn push(&mut self, relative: impl AsRef<Path>, content: String) {
        self.files.push(OutputFile { path: self.root.join(relative.as_ref()), content });
    }

    pub fn relative_paths(&self) -> Vec<String> {
        self.files
            .iter()
            .map(|f| {
                f.path
                    .strip_prefix(&self.root)
                    .unwrap_or(&f.path)
                    .to_string_lossy()
                    .into_owned()
            })
            .collect()
    }

    /// Creates directories and writes every file via temp-then-rename.
    pub fn flush(&self) -> Result<(), CliError> {
        for file in &self.files {
            if let Some(dir) = file.path.parent() {
                std::fs::create_dir_all(dir).map_err(etaskit_core::Error::from)?;
            }
            write_atomic(&file.path, file.content.as_bytes())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerLawSummary {
    pub amplitude: f64,
    pub exponent: f64,
    pub log_log_sse: f64,
    /// Pearson p-value of the log-log regression itself (second
    /// interpretation of the selection significance).
    pub fit_p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcfReport {
    pub series_length: usize,
    pub max_fit_lag: usize,
    /// None when too few positive autocorrelations support a power-law fit
    /// (e.g. on time-rescaled, stationary counts); the causal window then
    /// falls back to one day.
    pub power_law: Option<PowerLawSummary>,
    pub threshold: f64,
    pub delta_star_selected: u32,
    pub delta_star_used: u32,
    /// Per-lag two-sided p-values under the white-noise null, lags
    /// 1..=delta_star (first interpretation of significance).
    pub per_lag_p: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub analysis: String,
    pub delta_star: Option<u32>,
    pub intervals: [[f64; 2]; 4],
    pub member_counts: [usize; 4],
    pub bandwidths: [f64; 4],
    pub trend: TrendResult,
    /// Mean great-circle distance over the (trigger, follower) pairs, when
    /// the catalog carries coordinates.
    pub mean_pair_distance_km: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestResults {
    pub events: usize,
    pub m0: f64,
    pub window: (f64, f64),
    pub fit: Option<FitReport>,
    pub params_used: [f64; 5],
    pub rescaled_window: Option<(f64, f64)>,
    pub acf: AcfReport,
    pub window_analysis: AnalysisReport,
    pub mother_analysis: AnalysisReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub settings: PipelineSettings,
    pub results: ManifestResults,
    pub outputs: Vec<String>,
}

/// Manifest subset sufficient to replay a run.
#[derive(Debug, Deserialize)]
pub struct ManifestReplay {
    pub settings: PipelineSettings,
}

pub fn sim_config(s: &SimSettings) -> Result<SimConfig<f64>, CliError> {
    let [mu, kappa, c, a, p] = s.params;
    let params = EtasParams::new(mu, kappa, c, a, p)?;
    let gr = GrLaw::from_b_value(s.b_value, s.m0)?;
    let mode = match s.mode.as_str() {
        "gr" => MagnitudeMode::GutenbergRichter,
        "conditional" => {
            MagnitudeMode::Conditional(ConditionalLaw::new(gr.beta, params.a, s.c1, s.m0)?)
        }
        other => return Err(CliError::usage(format!("unknown magnitude mode `{other}`"))),
    };
    Ok(SimConfig {
        params,
        gr,
        mode,
        window: (s.t_start, s.t_end),
        seed: s.seed,
        learning_period: s.learning_period,
    })
}

pub fn acquire_catalog(settings: &PipelineSettings) -> Result<(Catalog, bool), CliError> {
    let raw = match (&settings.input, &settings.simulate) {
        (Some(path), _) => load_catalog(path, TimeFormat::Auto)?,
        (None, Some(sim)) => simulate(&sim_config(sim)?)?,
        (None, None) => {
            return Err(CliError::usage("either an input catalog or simulation settings are required"))
        }
    };
    let simulated = settings.input.is_none();
    let m0 = settings.m0.unwrap_or_else(|| raw.m0());
    let window = settings.window.unwrap_or_else(|| raw.window());
    let filtered = raw.filter(m0, settings.max_depth_km, window)?;
    Ok((filtered, simulated))
}

pub fn resolve_params(
    settings: &PipelineSettings,
    cat: &Catalog,
) -> Result<(EtasParams, Option<FitReport>), CliError> {
    if let Some([mu, kappa, c, a, p]) = settings.params {
        return Ok((EtasParams::new(mu, kappa, c, a, p)?, None));
    }
    let [mu, kappa, c, a, p] = settings.init;
    let init = EtasParams::new(mu, kappa, c, a, p)?;
    let report = fit_params(cat, &init, settings.learning_fraction)?;
    Ok((report.params, Some(report)))
}

fn manual_intervals(raw: [[f64; 2]; 4]) -> [MagnitudeInterval<f64>; 4] {
    raw.map(|[lo, hi]| MagnitudeInterval { lo, hi })
}

pub fn select_window(
    cat: &Catalog,
    settings: &PipelineSettings,
) -> Result<(AcfReport, f64), CliError> {
    let counts = cat.daily_counts()?;
    let max_lag = default_fit_lag(counts.len());
    let acf: AcfEstimate = autocorrelation(&counts, max_lag)?;

    let power_law = match fit_power_law(&acf, max_lag) {
        Ok(fit) => {
            // Second reading of significance: the log-log regression's own
            // Pearson p-value over the fitted lags.
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (lag, value) in acf.lags.iter().zip(&acf.values) {
                if *lag >= 1 && (*lag as usize) <= max_lag && *value > 0.0 {
                    xs.push((*lag as f64).ln());
                    ys.push(value.ln());
                }
            }
            let k = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / k;
            let my = ys.iter().sum::<f64>() / k;
            let mut sxx = 0.0;
            let mut syy = 0.0;
            let mut sxy = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                sxx += (x - mx) * (x - mx);
                syy += (y - my) * (y - my);
                sxy += (x - mx) * (y - my);
            }
            let fit_p = if sxx > 0.0 && syy > 0.0 {
                let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
                if r.abs() >= 1.0 {
                    0.0
                } else {
                    let t = r.abs() * ((k - 2.0) / (1.0 - r * r)).sqrt();
                    student_t_two_sided_p(t, k - 2.0)
                }
            } else {
                1.0
            };
            Some(PowerLawSummary {
                amplitude: fit.amplitude,
                exponent: fit.exponent,
                log_log_sse: fit.sse,
                fit_p,
            })
        }
        Err(_) => None,
    };

    let selected = match &power_law {
        Some(summary) => {
            let fit = etaskit_core::PowerLawFit {
                amplitude: summary.amplitude,
                exponent: summary.exponent,
                delta_star: 0,
                sse: summary.log_log_sse,
            };
            select_delta_star(&fit, DELTA_STAR_THRESHOLD).unwrap_or(1)
        }
        // Too little positive autocorrelation to model: treat the counts as
        // uncorrelated beyond one day.
        None => 1,
    };
    let used = settings.delta_star.unwrap_or(selected);
    let per_lag_p = acf_significance(&acf, used.min(max_lag as u32))?;

    let report = AcfReport {
        series_length: counts.len(),
        max_fit_lag: max_lag,
        power_law,
        threshold: DELTA_STAR_THRESHOLD,
        delta_star_selected: selected,
        delta_star_used: used,
        per_lag_p,
    };

    Ok((report, used as f64))
}

pub fn acf_csv(cat: &Catalog) -> Result<String, CliError> {
    let counts = cat.daily_counts()?;
    let max_lag = default_fit_lag(counts.len());
    let acf: AcfEstimate = autocorrelation(&counts, max_lag)?;
    let mut out = String::from("lag,autocorrelation\n");
    for (lag, value) in acf.lags.iter().zip(&acf.values) {
        let _ = writeln!(out, "{lag},{value}");
    }
    Ok(out)
}

pub struct AnalysisArtifacts {
    pub report: AnalysisReport,
    pub groups_json: String,
    pub trend_json: String,
    pub trend_csv: String,
    pub kde_files: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
pub struct GroupsFile {
    pub analysis: String,
    pub delta_star: Option<u32>,
    pub groups: Vec<GroupRecord>,
}

#[derive(Serialize, Deserialize)]
pub struct GroupRecord {
    pub interval: [f64; 2],
    pub trigger_mean: f64,
    pub members: Vec<f64>,
}

pub fn analyze(
    analysis: &str,
    cat: &Catalog,
    groups: [MagnitudeGroup<f64>; 4],
    scheme: &SubintervalScheme<f64>,
    delta_star: Option<u32>,
    pair_distance: Option<f64>,
    settings: &PipelineSettings,
) -> Result<AnalysisArtifacts, CliError> {
    let trend_result = trend(&groups)?;

    let m_max = cat
        .max_magnitude()
        .ok_or_else(|| etaskit_core::Error::invalid("cannot analyze an empty catalog"))?;
    let grid = magnitude_grid(cat.m0(), m_max)?;
    let (lo, hi, count) = settings.bandwidth_grid;
    let ratio = (hi / lo).ln() / (count as f64 - 1.0);
    let candidates: Vec<f64> = (0..count).map(|i| lo * (ratio * i as f64).exp()).collect();

    let mut bandwidths = [0.0; 4];
    let mut kde_files = Vec::with_capacity(4);
    for (k, group) in groups.iter().enumerate() {
        let table = FrequencyTable::from_magnitudes(&group.members, settings.mag_resolution)?;
        let (_, scores) = loocv_bandwidth(&table, &candidates)?;
        // Best-scoring candidate that can also be evaluated on the shared
        // grid; a bandwidth tuned to a narrow group can underflow at far
        // grid points and is then passed over for the next-best one.
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&i, &j| {
            scores[i].partial_cmp(&scores[j]).expect("finite or +inf scores").then(i.cmp(&j))
        });
        let mut chosen = None;
        for idx in order {
            if !scores[idx].is_finite() {
                break;
            }
            if let Ok(est) = estimate_density(&table, &grid, candidates[idx]) {
                chosen = Some((candidates[idx], est));
                break;
            }
        }
        let (gamma, estimate) = chosen.ok_or_else(|| {
            etaskit_core::Error::numeric(format!(
                "no usable bandwidth for subinterval {k} on the evaluation grid"
            ))
        })?;
        bandwidths[k] = gamma;
        let mut csv = String::from("magnitude,density\n");
        for (m, v) in estimate.grid.iter().zip(&estimate.values) {
            let _ = writeln!(csv, "{m},{v}");
        }
        let name = format!(
            "{analysis}_kde_{:.3}-{:.3}.csv",
            group.interval.lo, group.interval.hi
        );
        kde_files.push((name, csv));
    }

    let report = AnalysisReport {
        analysis: analysis.to_string(),
        delta_star,
        intervals: scheme.intervals.map(|iv| [iv.lo, iv.hi]),
        member_counts: scheme.member_counts,
        bandwidths,
        trend: trend_result,
        mean_pair_distance_km: pair_distance,
    };

    let groups_file = GroupsFile {
        analysis: analysis.to_string(),
        delta_star,
        groups: groups
            .iter()
            .map(|g| GroupRecord {
                interval: [g.interval.lo, g.interval.hi],
                trigger_mean: g.trigger_mean,
                members: g.members.clone(),
            })
            .collect(),
    };

    Ok(AnalysisArtifacts {
        groups_json: to_json(&groups_file)?,
        trend_json: to_json(&report.trend)?,
        trend_csv: trend_csv(&report.trend),
        kde_files,
        report,
    })
}

pub fn trend_csv(t: &TrendResult) -> String {
    let mut out = String::from("trigger_mean,normalized_mean,stderr\n");
    for k in 0..4 {
        let _ = writeln!(
            out,
            "{},{},{}",
            t.trigger_means[k], t.normalized_means[k], t.standard_errors[k]
        );
    }
    let _ = writeln!(
        out,
        "# slope={} intercept={} r={} p={}",
        t.slope, t.intercept, t.r, t.p_value
    );
    out
}

/// Mean great-circle distance over (starter, follower) pairs of the windowed
/// analysis; None when the catalog lacks coordinates.
pub fn windowed_pair_distance(cat: &Catalog, delta: f64) -> Option<f64> {
    let events = cat.events();
    if events.iter().any(|e| e.latitude.is_none() || e.longitude.is_none()) {
        return None;
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut lo = 0usize;
    for (i, e) in events.iter().enumerate() {
        let mut j = lo.max(i);
        while j < events.len() && events[j].time <= e.time {
            j += 1;
        }
        lo = j;
        while j < events.len() && events[j].time <= e.time + delta {
            sum += haversine_km(e, &events[j]).ok()?;
            count += 1;
            j += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Mean great-circle distance over attributed (mother, daughter) pairs.
pub fn mother_pair_distance(cat: &Catalog, attribution: &Attribution) -> Option<f64> {
    let events = cat.events();
    if events.iter().any(|e| e.latitude.is_none() || e.longitude.is_none()) {
        return None;
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, mother) in attribution.mothers.iter().enumerate() {
        if let Parent::Index(j) = mother {
            sum += haversine_km(&events[*j], &events[i]).ok()?;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Core(etaskit_core::Error::numeric(format!("JSON encoding: {e}"))))?;
    text.push('\n');
    Ok(text)
}

/// The full batch pipeline. Returns the manifest and the buffered outputs.
pub fn run_pipeline(
    settings: &PipelineSettings,
    out_dir: &Path,
) -> Result<(Manifest, OutputSet), CliError> {
    let mut outputs = OutputSet::new(out_dir);
    let (cat, simulated) = acquire_catalog(settings)?;
    if cat.is_empty() {
        return Err(CliError::Core(etaskit_core::Error::invalid(
            "no events remain after filtering",
        )));
    }
    if simulated {
        outputs.push("catalog.csv", catalog_to_csv(&cat));
    }

    let (params, fit_report) = resolve_params(settings, &cat)?;
    if let Some(report) = &fit_report {
        outputs.push("fit.json", to_json(report)?);
    }

    // The windowed analysis runs in rescaled time when requested (the ACF
    // and the causal window are then recomputed on the transformed counts);
    // mother attribution always works on the original times.
    let analysis_cat = if settings.rescale {
        let rescaled = time_rescale(&cat, &params);
        outputs.push("rescaled.csv", catalog_to_csv(&rescaled));
        rescaled
    } else {
        cat.clone()
    };

    let (acf_report, delta) = select_window(&analysis_cat, settings)?;
    outputs.push("acf.csv", acf_csv(&analysis_cat)?);
    outputs.push("acf.json", to_json(&acf_report)?);

    let window_scheme = match settings.intervals {
        Some(raw) => {
            let pool = windowed_trigger_pool(&analysis_cat, delta);
            make_subintervals(&pool, Some(manual_intervals(raw)))?
        }
        None => {
            let pool = windowed_trigger_pool(&analysis_cat, delta);
            make_subintervals(&pool, None)?
        }
    };
    let w_groups = windowed_groups(&analysis_cat, delta, &window_scheme);
    let w_distance = windowed_pair_distance(&analysis_cat, delta);
    let window_art = analyze(
        "window",
        &analysis_cat,
        w_groups,
        &window_scheme,
        Some(delta as u32),
        w_distance,
        settings,
    )?;

    let attribution = attribute_mothers(&cat, &params);
    let mother_scheme = match settings.intervals {
        Some(raw) => {
            let pool = mother_trigger_pool(&cat, &attribution);
            make_subintervals(&pool, Some(manual_intervals(raw)))?
        }
        None => {
            let pool = mother_trigger_pool(&cat, &attribution);
            make_subintervals(&pool, None)?
        }
    };
    let m_groups = mother_groups(&cat, &attribution, &mother_scheme);
    let m_distance = mother_pair_distance(&cat, &attribution);
    let mother_art =
        analyze("mother", &cat, m_groups, &mother_scheme, None, m_distance, settings)?;
    outputs.push("mother/attributed.csv", catalog_to_csv(&attribution.relabel(&cat)));

    for (name, content) in &window_art.kde_files {
        outputs.push(format!("window/{name}"), content.clone());
    }
    outputs.push("window/groups.json", window_art.groups_json.clone());
    outputs.push("window/trend.json", window_art.trend_json.clone());
    outputs.push("window/trend.csv", window_art.trend_csv.clone());
    for (name, content) in &mother_art.kde_files {
        outputs.push(format!("mother/{name}"), content.clone());
    }
    outputs.push("mother/groups.json", mother_art.groups_json.clone());
    outputs.push("mother/trend.json", mother_art.trend_json.clone());
    outputs.push("mother/trend.csv", mother_art.trend_csv.clone());

    let manifest = Manifest {
        tool: "etaskit".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: "pipeline".to_string(),
        settings: settings.clone(),
        results: ManifestResults {
            events: cat.len(),
            m0: cat.m0(),
            window: cat.window(),
            fit: fit_report,
            params_used: [params.mu, params.kappa, params.c, params.a, params.p],
            rescaled_window: settings.rescale.then(|| analysis_cat.window()),
            acf: acf_report,
            window_analysis: window_art.report,
            mother_analysis: mother_art.report,
        },
        outputs: Vec::new(),
    };

    Ok((manifest, outputs))
}
