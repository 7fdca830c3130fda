//! Configuration merging: CLI flags beat the config file, which beats the
//! built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use habitlens_core::engine::BetaGrid;
use habitlens_core::panel::DEFAULT_MIN_PERIODS;

use crate::{CliError, InputArgs};

#[derive(Debug, Default, Deserialize)]
struct FileDefaults {
    technology: Option<PathBuf>,
    models: Option<PathBuf>,
    rates: Option<PathBuf>,
    nominal: Option<bool>,
    min_periods: Option<usize>,
    window: Option<String>,
    beta_start: Option<f64>,
    beta_stop: Option<f64>,
    beta_step: Option<f64>,
    threads: Option<usize>,
}

/// Effective run configuration after precedence resolution.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub purchases: PathBuf,
    pub characteristics: PathBuf,
    pub technology: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub rates: Option<PathBuf>,
    pub nominal: bool,
    pub min_periods: usize,
    pub window: Option<String>,
    pub beta_start: f64,
    pub beta_stop: f64,
    pub beta_step: f64,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn grid(&self) -> BetaGrid {
        BetaGrid::from_range(self.beta_start, self.beta_stop, self.beta_step)
    }
}

pub fn merge(config_path: Option<&Path>, args: &InputArgs) -> Result<RunConfig, CliError> {
    let file: FileDefaults = match config_path {
        None => FileDefaults::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
    };
    let rates = args.rates.clone().or(file.rates);
    // Discount whenever a rate series is supplied, unless nominal is forced.
    let nominal = if args.nominal {
        true
    } else {
        file.nominal.unwrap_or(rates.is_none())
    };
    Ok(RunConfig {
        purchases: args.purchases.clone(),
        characteristics: args.characteristics.clone(),
        technology: args.technology.clone().or(file.technology),
        models: args.models.clone().or(file.models),
        rates,
        nominal,
        min_periods: args
            .min_periods
            .or(file.min_periods)
            .unwrap_or(DEFAULT_MIN_PERIODS),
        window: args.window.clone().or(file.window),
        beta_start: args.beta_start.or(file.beta_start).unwrap_or(0.950),
        beta_stop: args.beta_stop.or(file.beta_stop).unwrap_or(1.000),
        beta_step: args.beta_step.or(file.beta_step).unwrap_or(0.001),
        threads: args.threads.or(file.threads),
    })
}
