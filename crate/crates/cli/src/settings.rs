//! Fully-resolved run settings: the single structure the pipeline executes,
//! the manifest records, and a replay re-executes.

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_MAX_DEPTH_KM: f64 = 40.0;
pub const DEFAULT_LEARNING_FRACTION: f64 = 0.10;
pub const DEFAULT_MAG_RESOLUTION: f64 = 0.1;
pub const DEFAULT_INIT: [f64; 5] = [0.3, 0.01, 0.05, 1.0, 1.3];
pub const DEFAULT_B_VALUE: f64 = 1.0;
pub const DEFAULT_M0: f64 = 1.5;
pub const DEFAULT_C1: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    /// (mu, kappa, c, a, p).
    pub params: [f64; 5],
    pub b_value: f64,
    pub m0: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub seed: u64,
    /// "gr" or "conditional".
    pub mode: String,
    pub c1: f64,
    pub learning_period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    /// Input catalog path; when absent, `simulate` must be present.
    pub input: Option<String>,
    pub simulate: Option<SimSettings>,
    /// Completeness threshold for filtering; None keeps the catalog's own.
    pub m0: Option<f64>,
    pub max_depth_km: f64,
    /// Observation-window override for filtering.
    pub window: Option<(f64, f64)>,
    /// Given ETAS parameters (mu, kappa, c, a, p); None triggers a fit.
    pub params: Option<[f64; 5]>,
    pub init: [f64; 5],
    pub learning_fraction: f64,
    /// Apply the random time change before the windowed analysis.
    pub rescale: bool,
    /// Causal-window override in days; None selects from the ACF fit.
    pub delta_star: Option<u32>,
    /// Manual trigger-magnitude subintervals.
    pub intervals: Option<[[f64; 2]; 4]>,
    pub mag_resolution: f64,
    /// Bandwidth candidate grid (lo, hi, count), log-spaced.
    pub bandwidth_grid: (f64, f64, usize),
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            input: None,
            simulate: None,
            m0: None,
            max_depth_km: DEFAULT_MAX_DEPTH_KM,
            window: None,
            params: None,
            init: DEFAULT_INIT,
            learning_fraction: DEFAULT_LEARNING_FRACTION,
            rescale: false,
            delta_star: None,
            intervals: None,
            mag_resolution: DEFAULT_MAG_RESOLUTION,
            bandwidth_grid: (0.01, 1.5, 60),
        }
    }
}

pub fn parse_params(text: &str) -> Result<[f64; 5], CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(CliError::usage(format!(
            "expected 5 comma-separated values (mu,kappa,c,a,p), got {}",
            parts.len()
        )));
    }
    let mut out = [0.0; 5];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .parse::<f64>()
            .map_err(|_| CliError::usage(format!("unparseable parameter `{part}`")))?;
    }
    Ok(out)
}

pub fn parse_intervals(text: &str) -> Result<[[f64; 2]; 4], CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::usage(format!(
            "expected 4 comma-separated intervals lo:hi, got {}",
            parts.len()
        )));
    }
    let mut out = [[0.0; 2]; 4];
    for (slot, part) in out.iter_mut().zip(&parts) {
        let mut bounds = part.splitn(2, ':');
        let lo = bounds.next().unwrap_or("");
        let hi = bounds.next().ok_or_else(|| {
            CliError::usage(format!("interval `{part}` is not of the form lo:hi"))
        })?;
        slot[0] = lo
            .parse::<f64>()
            .map_err(|_| CliError::usage(format!("unparseable interval bound `{lo}`")))?;
        slot[1] = hi
            .parse::<f64>()
            .map_err(|_| CliError::usage(format!("unparseable interval bound `{hi}`")))?;
    }
    Ok(out)
}

/// `start:step:end` inclusive sweep of learning fractions.
pub fn parse_sweep(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!("sweep `{text}` is not start:step:end")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("unparseable sweep `{text}`")))?;
    let (start, step, end) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0 && end >= start) {
        return Err(CliError::usage("sweep needs a positive step and end >= start"));
    }
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let v = start + step * k as f64;
        if v > end + 1e-12 {
            break;
        }
        out.push(v);
        k += 1;
    }
    Ok(out)
}

/// Flat `key = value` configuration file; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<std::collections::HashMap<String, String>, CliError> {
    let mut map = std::collections::HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut halves = line.splitn(2, '=');
        let key = halves.next().unwrap_or("").trim();
        let value = halves
            .next()
            .ok_or_else(|| CliError::usage(format!("config line {}: missing `=`", idx + 1)))?
            .trim();
        if key.is_empty() {
            return Err(CliError::usage(format!("config line {}: empty key", idx + 1)));
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}
