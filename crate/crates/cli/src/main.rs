//! Batch front end for the temporal ETAS toolkit.

mod runner;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use etaskit_core::catalog::{catalog_to_csv, load_catalog, write_atomic, TimeFormat};
use etaskit_core::etas::{fit_params, time_rescale};
use etaskit_core::stats::{ks_pvalue, ks_statistic};
use etaskit_core::trend::{trend, MagnitudeGroup, MagnitudeInterval};
use etaskit_core::{Catalog, EtasParams, FitReport};

use runner::{to_json, GroupsFile, OutputSet};
use settings::{
    parse_config_file, parse_intervals, parse_params, parse_sweep, PipelineSettings, SimSettings,
    DEFAULT_B_VALUE, DEFAULT_C1, DEFAULT_INIT, DEFAULT_LEARNING_FRACTION, DEFAULT_M0,
    DEFAULT_MAX_DEPTH_KM,
};

/// CLI failure with the exit-code category attached.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(etaskit_core::Error),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.category().as_str(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.category() {
                etaskit_core::ErrorCategory::Io => 2,
                etaskit_core::ErrorCategory::Numeric => 3,
                etaskit_core::ErrorCategory::Validation => 4,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

impl From<etaskit_core::Error> for CliError {
    fn from(e: etaskit_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser)]
#[command(
    name = "etaskit",
    version,
    about = "Temporal ETAS toolkit: simulate, fit, rescale, and analyze earthquake catalogs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a catalog with the branching ETAS process.
    Simulate(SimulateArgs),
    /// Maximum-likelihood fit of the ETAS parameters.
    Fit(FitArgs),
    /// Apply the random time change to a catalog.
    Rescale(RescaleArgs),
    /// Time-window pairing analysis (causal window from the ACF).
    AnalyzeWindow(AnalyzeArgs),
    /// Mother-attribution analysis (needs ETAS parameters).
    AnalyzeMother(AnalyzeArgs),
    /// Trend regression over four stored magnitude groups.
    Trend(TrendArgs),
    /// Full batch pipeline with a reproducibility manifest.
    Pipeline(Box<PipelineArgs>),
}

#[derive(Args)]
struct SimulateArgs {
    /// ETAS parameters mu,kappa,c,a,p
    #[arg(long)]
    params: String,
    /// Gutenberg-Richter b-value
    #[arg(long, default_value_t = DEFAULT_B_VALUE)]
    b_value: f64,
    /// Completeness magnitude
    #[arg(long, default_value_t = DEFAULT_M0)]
    m0: f64,
    #[arg(long, default_value_t = 0.0)]
    t_start: f64,
    #[arg(long)]
    t_end: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Magnitude mode: gr | conditional
    #[arg(long, default_value = "gr")]
    mode: String,
    /// Conditional-coupling strength (conditional mode)
    #[arg(long, default_value_t = DEFAULT_C1)]
    c1: f64,
    /// Burn-in days simulated before the window and discarded
    #[arg(long, default_value_t = 0.0)]
    learning_period: f64,
    /// Output catalog CSV
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Input catalog CSV
    #[arg(short, long)]
    input: PathBuf,
    /// Completeness threshold override
    #[arg(long)]
    m0: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_LEARNING_FRACTION)]
    learning_fraction: f64,
    /// Starting parameters mu,kappa,c,a,p
    #[arg(long)]
    init: Option<String>,
    /// Sweep of learning fractions start:step:end
    #[arg(long)]
    sweep: Option<String>,
    /// Aggregation over the sweep (mean)
    #[arg(long, default_value = "mean")]
    aggregate: String,
    /// Output report JSON
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct RescaleArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// ETAS parameters mu,kappa,c,a,p
    #[arg(long)]
    params: Option<String>,
    /// Fit report JSON to take parameters from
    #[arg(long)]
    fit: Option<PathBuf>,
    /// Output catalog CSV with transformed times
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// ETAS parameters mu,kappa,c,a,p (mother analysis)
    #[arg(long)]
    params: Option<String>,
    /// Fit report JSON to take parameters from (mother analysis)
    #[arg(long)]
    fit: Option<PathBuf>,
    /// Causal window override in days (windowed analysis)
    #[arg(long)]
    delta_star: Option<u32>,
    /// Manual subintervals lo:hi,lo:hi,lo:hi,lo:hi
    #[arg(long)]
    intervals: Option<String>,
    /// Magnitude binning resolution for the KDE frequency tables
    #[arg(long, default_value_t = settings::DEFAULT_MAG_RESOLUTION)]
    mag_resolution: f64,
    /// Output directory
    #[arg(short = 'O', long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrendArgs {
    /// groups.json produced by an analysis run
    #[arg(long)]
    groups: PathBuf,
    /// Output trend JSON
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// Flat key = value configuration file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replay the resolved settings of a previous run's manifest
    #[arg(long)]
    from_manifest: Option<PathBuf>,
    /// Input catalog CSV (omit to simulate)
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// ETAS parameters mu,kappa,c,a,p for simulation
    #[arg(long)]
    sim_params: Option<String>,
    #[arg(long)]
    b_value: Option<f64>,
    #[arg(long)]
    t_start: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Magnitude mode: gr | conditional
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    learning_period: Option<f64>,
    /// Completeness threshold (filter; also the simulated m0)
    #[arg(long)]
    m0: Option<f64>,
    #[arg(long)]
    max_depth: Option<f64>,
    /// Filter window a,b in days
    #[arg(long)]
    window: Option<String>,
    /// Known ETAS parameters mu,kappa,c,a,p (skips the fit)
    #[arg(long)]
    params: Option<String>,
    /// Starting parameters for the fit
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    learning_fraction: Option<f64>,
    /// Apply the random time change before the windowed analysis
    #[arg(long)]
    rescale: bool,
    #[arg(long)]
    delta_star: Option<u32>,
    #[arg(long)]
    intervals: Option<String>,
    #[arg(long)]
    mag_resolution: Option<f64>,
    /// Output directory
    #[arg(short = 'O', long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("error[usage]: {e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Rescale(args) => cmd_rescale(args),
        Command::AnalyzeWindow(args) => cmd_analyze(args, true),
        Command::AnalyzeMother(args) => cmd_analyze(args, false),
        Command::Trend(args) => cmd_trend(args),
        Command::Pipeline(args) => cmd_pipeline(*args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let sim = SimSettings {
        params: parse_params(&args.params)?,
        b_value: args.b_value,
        m0: args.m0,
        t_start: args.t_start,
        t_end: args.t_end,
        seed: args.seed,
        mode: args.mode,
        c1: args.c1,
        learning_period: args.learning_period,
    };
    let cat = etaskit_core::simulate::simulate(&runner::sim_config(&sim)?)?;
    write_atomic(&args.output, catalog_to_csv(&cat).as_bytes())?;
    println!("simulated {} events over [{}, {}] days", cat.len(), args.t_start, args.t_end);
    Ok(())
}

fn load_filtered(path: &PathBuf, m0: Option<f64>) -> Result<Catalog, CliError> {
    let raw: Catalog = load_catalog(path, TimeFormat::Auto)?;
    let m0 = m0.unwrap_or_else(|| raw.m0());
    Ok(raw.filter(m0, DEFAULT_MAX_DEPTH_KM, raw.window())?)
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let init_raw = match &args.init {
        Some(text) => parse_params(text)?,
        None => DEFAULT_INIT,
    };
    let [mu, kappa, c, a, p] = init_raw;
    let init = EtasParams::new(mu, kappa, c, a, p)?;
    if let Some(sweep_text) = &args.sweep {
        parse_sweep(sweep_text)?;
    }
    let cat = load_filtered(&args.input, args.m0)?;

    #[derive(serde::Serialize)]
    struct SweepReport {
        learning_fractions: Vec<f64>,
        fits: Vec<FitReport>,
        aggregate: String,
        params: [f64; 5],
    }

    let json = match &args.sweep {
        None => {
            let report = fit_params(&cat, &init, args.learning_fraction)?;
            let p = report.params;
            println!(
                "fitted (mu, kappa, c, a, p) = ({}, {}, {}, {}, {}) | ll = {} | converged = {}",
                p.mu, p.kappa, p.c, p.a, p.p, report.log_likelihood, report.converged
            );
            to_json(&report)?
        }
        Some(sweep_text) => {
            if args.aggregate != "mean" {
                return Err(CliError::usage(format!(
                    "unsupported aggregate `{}` (only `mean`)",
                    args.aggregate
                )));
            }
            let fractions = parse_sweep(sweep_text)?;
            let mut fits = Vec::with_capacity(fractions.len());
            let mut sums = [0.0; 5];
            for &fraction in &fractions {
                let report = fit_params(&cat, &init, fraction)?;
                let arr = report.params.to_array();
                for (acc, v) in sums.iter_mut().zip(arr) {
                    *acc += v;
                }
                fits.push(report);
            }
            let n = fractions.len() as f64;
            let params = sums.map(|s| s / n);
            println!(
                "sweep of {} fits | mean (mu, kappa, c, a, p) = ({}, {}, {}, {}, {})",
                fits.len(),
                params[0],
                params[1],
                params[2],
                params[3],
                params[4]
            );
            to_json(&SweepReport {
                learning_fractions: fractions,
                fits,
                aggregate: args.aggregate.clone(),
                params,
            })?
        }
    };
    write_atomic(&args.output, json.as_bytes())?;
    Ok(())
}

fn params_from_args(
    params: &Option<String>,
    fit: &Option<PathBuf>,
) -> Result<EtasParams, CliError> {
    let raw = match (params, fit) {
        (Some(text), _) => parse_params(text)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(etaskit_core::Error::from)?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
                CliError::Core(etaskit_core::Error::invalid(format!(
                    "cannot parse fit report: {e}"
                )))
            })?;
            let p = value
                .get("params")
                .ok_or_else(|| CliError::usage("fit report lacks a `params` object"))?;
            let field = |name: &str| -> Result<f64, CliError> {
                p.get(name)
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| CliError::usage(format!("fit report lacks params.{name}")))
            };
            [field("mu")?, field("kappa")?, field("c")?, field("a")?, field("p")?]
        }
        (None, None) => {
            return Err(CliError::usage("provide --params or --fit for the ETAS parameters"))
        }
    };
    let [mu, kappa, c, a, p] = raw;
    Ok(EtasParams::new(mu, kappa, c, a, p)?)
}

fn cmd_rescale(args: RescaleArgs) -> Result<(), CliError> {
    let params = params_from_args(&args.params, &args.fit)?;
    let cat = load_filtered(&args.input, None)?;
    let rescaled = time_rescale(&cat, &params);

    // Residual diagnostic: transformed gaps against Exp(1).
    let mut prev = 0.0;
    let mut gaps = Vec::with_capacity(rescaled.len());
    for e in rescaled.events() {
        gaps.push(e.time - prev);
        prev = e.time;
    }
    if !gaps.is_empty() {
        let d = ks_statistic(&gaps, |x: f64| 1.0 - (-x).exp());
        let p = ks_pvalue(d, gaps.len());
        println!(
            "rescaled {} events | transformed span {} | KS vs Exp(1): D = {d:.5}, p = {p:.4}",
            rescaled.len(),
            rescaled.window().1
        );
    }
    write_atomic(&args.output, catalog_to_csv(&rescaled).as_bytes())?;
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs, windowed: bool) -> Result<(), CliError> {
    let mut analysis_settings = PipelineSettings {
        input: Some(args.input.to_string_lossy().into_owned()),
        delta_star: args.delta_star,
        mag_resolution: args.mag_resolution,
        ..PipelineSettings::default()
    };
    if let Some(text) = &args.intervals {
        analysis_settings.intervals = Some(parse_intervals(text)?);
    }
    let mother_params =
        if windowed { None } else { Some(params_from_args(&args.params, &args.fit)?) };
    let (cat, _) = runner::acquire_catalog(&analysis_settings)?;
    let mut outputs = OutputSet::new(&args.out_dir);

    let report = if windowed {
        let (acf_report, delta) = runner::select_window(&cat, &analysis_settings)?;
        outputs.push("acf.csv", runner::acf_csv(&cat)?);
        outputs.push("acf.json", to_json(&acf_report)?);
        let pool = etaskit_core::trend::windowed_trigger_pool(&cat, delta);
        let manual = analysis_settings
            .intervals
            .map(|raw| raw.map(|[lo, hi]| MagnitudeInterval { lo, hi }));
        let scheme = etaskit_core::trend::make_subintervals(&pool, manual)?;
        let groups = etaskit_core::trend::windowed_groups(&cat, delta, &scheme);
        let distance = runner::windowed_pair_distance(&cat, delta);
        let art = runner::analyze(
            "window",
            &cat,
            groups,
            &scheme,
            Some(delta as u32),
            distance,
            &analysis_settings,
        )?;
        for (name, content) in &art.kde_files {
            outputs.push(name, content.clone());
        }
        outputs.push("groups.json", art.groups_json.clone());
        outputs.push("trend.json", art.trend_json.clone());
        outputs.push("trend.csv", art.trend_csv.clone());
        art.report
    } else {
        let params = mother_params.expect("parsed above for the mother analysis");
        let attribution = etaskit_core::etas::attribute_mothers(&cat, &params);
        let pool = etaskit_core::trend::mother_trigger_pool(&cat, &attribution);
        let manual = analysis_settings
            .intervals
            .map(|raw| raw.map(|[lo, hi]| MagnitudeInterval { lo, hi }));
        let scheme = etaskit_core::trend::make_subintervals(&pool, manual)?;
        let groups = etaskit_core::trend::mother_groups(&cat, &attribution, &scheme);
        let distance = runner::mother_pair_distance(&cat, &attribution);
        let art =
            runner::analyze("mother", &cat, groups, &scheme, None, distance, &analysis_settings)?;
        for (name, content) in &art.kde_files {
            outputs.push(name, content.clone());
        }
        outputs.push("groups.json", art.groups_json.clone());
        outputs.push("trend.json", art.trend_json.clone());
        outputs.push("trend.csv", art.trend_csv.clone());
        outputs.push("attributed.csv", catalog_to_csv(&attribution.relabel(&cat)));
        art.report
    };

    outputs.flush()?;
    let t = &report.trend;
    println!(
        "{} analysis | intervals {:?} | R = {:.4}, p = {:.4}, slope = {:.5}",
        report.analysis, report.intervals, t.r, t.p_value, t.slope
    );
    Ok(())
}

fn cmd_trend(args: TrendArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.groups).map_err(etaskit_core::Error::from)?;
    let file: GroupsFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Core(etaskit_core::Error::invalid(format!("cannot parse groups file: {e}")))
    })?;
    if file.groups.len() != 4 {
        return Err(CliError::Core(etaskit_core::Error::invalid(format!(
            "expected 4 groups, found {}",
            file.groups.len()
        ))));
    }
    let groups: Vec<MagnitudeGroup<f64>> = file
        .groups
        .iter()
        .map(|g| MagnitudeGroup {
            interval: MagnitudeInterval { lo: g.interval[0], hi: g.interval[1] },
            members: g.members.clone(),
            trigger_mean: g.trigger_mean,
        })
        .collect();
    let groups: [MagnitudeGroup<f64>; 4] = groups.try_into().expect("length checked");
    let result = trend(&groups)?;
    println!(
        "trend | R = {:.4}, p = {:.4}, slope = {:.5}, intercept = {:.5}",
        result.r, result.p_value, result.slope, result.intercept
    );
    write_atomic(&args.output, to_json(&result)?.as_bytes())?;
    Ok(())
}

fn settings_from_pipeline_args(args: &PipelineArgs) -> Result<PipelineSettings, CliError> {
    if let Some(path) = &args.from_manifest {
        let text = std::fs::read_to_string(path).map_err(etaskit_core::Error::from)?;
        let replay: runner::ManifestReplay = serde_json::from_str(&text).map_err(|e| {
            CliError::Core(etaskit_core::Error::invalid(format!("cannot parse manifest: {e}")))
        })?;
        return Ok(replay.settings);
    }

    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(etaskit_core::Error::from)?;
            parse_config_file(&text)?
        }
        None => Default::default(),
    };
    let get = |key: &str| config.get(key).map(String::as_str);
    let parse_f64 = |key: &str| -> Result<Option<f64>, CliError> {
        get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::usage(format!("config key {key}: unparseable `{v}`")))
            })
            .transpose()
    };

    let mut s = PipelineSettings {
        input: args
            .input
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned())
            .or_else(|| get("input").map(str::to_string)),
        ..PipelineSettings::default()
    };

    // Simulation settings apply when no input is given.
    if s.input.is_none() {
        let t_end = match args.t_end.or(parse_f64("t_end")?) {
            Some(v) => v,
            None => return Err(CliError::usage("pipeline needs --input or --t-end to simulate")),
        };
        let params_text =
            args.sim_params.clone().or_else(|| get("sim_params").map(str::to_string));
        let sim_params = match params_text {
            Some(text) => parse_params(&text)?,
            None => return Err(CliError::usage("simulating needs --sim-params mu,kappa,c,a,p")),
        };
        let seed = match args.seed {
            Some(v) => v,
            None => get("seed")
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|_| CliError::usage(format!("config key seed: unparseable `{v}`")))
                })
                .transpose()?
                .unwrap_or(42),
        };
        s.simulate = Some(SimSettings {
            params: sim_params,
            b_value: args.b_value.or(parse_f64("b_value")?).unwrap_or(DEFAULT_B_VALUE),
            m0: args.m0.or(parse_f64("m0")?).unwrap_or(DEFAULT_M0),
            t_start: args.t_start.or(parse_f64("t_start")?).unwrap_or(0.0),
            t_end,
            seed,
            mode: args
                .mode
                .clone()
                .or_else(|| get("mode").map(str::to_string))
                .unwrap_or_else(|| "gr".to_string()),
            c1: args.c1.or(parse_f64("c1")?).unwrap_or(DEFAULT_C1),
            learning_period: args
                .learning_period
                .or(parse_f64("learning_period")?)
                .unwrap_or(0.0),
        });
    }

    s.m0 = args.m0.or(parse_f64("m0")?);
    s.max_depth_km =
        args.max_depth.or(parse_f64("max_depth")?).unwrap_or(DEFAULT_MAX_DEPTH_KM);
    if let Some(text) = args.window.clone().or_else(|| get("window").map(str::to_string)) {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(CliError::usage("window must be a,b in days"));
        }
        let a = parts[0]
            .parse::<f64>()
            .map_err(|_| CliError::usage("unparseable window start"))?;
        let b = parts[1]
            .parse::<f64>()
            .map_err(|_| CliError::usage("unparseable window end"))?;
        s.window = Some((a, b));
    }
    if let Some(text) = args.params.clone().or_else(|| get("params").map(str::to_string)) {
        s.params = Some(parse_params(&text)?);
    }
    if let Some(text) = args.init.clone().or_else(|| get("init").map(str::to_string)) {
        s.init = parse_params(&text)?;
    }
    s.learning_fraction = args
        .learning_fraction
        .or(parse_f64("learning_fraction")?)
        .unwrap_or(DEFAULT_LEARNING_FRACTION);
    s.rescale =
        args.rescale || get("rescale").map(|v| v == "true" || v == "1").unwrap_or(false);
    s.delta_star = match args.delta_star {
        Some(v) => Some(v),
        None => get("delta_star")
            .map(|v| {
                v.parse::<u32>().map_err(|_| {
                    CliError::usage(format!("config key delta_star: unparseable `{v}`"))
                })
            })
            .transpose()?,
    };
    if let Some(text) = args.intervals.clone().or_else(|| get("intervals").map(str::to_string)) {
        s.intervals = Some(parse_intervals(&text)?);
    }
    if let Some(v) = args.mag_resolution.or(parse_f64("mag_resolution")?) {
        s.mag_resolution = v;
    }
    Ok(s)
}

fn cmd_pipeline(args: PipelineArgs) -> Result<(), CliError> {
    let settings = settings_from_pipeline_args(&args)?;
    let (mut manifest, mut outputs) = runner::run_pipeline(&settings, &args.out_dir)?;
    let mut listed = outputs.relative_paths();
    listed.push("manifest.json".to_string());
    listed.sort();
    manifest.outputs = listed;
    outputs.push("manifest.json", to_json(&manifest)?);
    outputs.flush()?;

    let w = &manifest.results.window_analysis.trend;
    let m = &manifest.results.mother_analysis.trend;
    println!(
        "pipeline done | {} events | delta* = {} | window: R = {:.4}, p = {:.4} | mother: R = {:.4}, p = {:.4}",
        manifest.results.events,
        manifest.results.acf.delta_star_used,
        w.r,
        w.p_value,
        m.r,
        m.p_value
    );
    Ok(())
}
