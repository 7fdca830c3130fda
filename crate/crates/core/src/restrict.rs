//! Restrictiveness via locally perturbed environments.
//!
//! Each draw keeps the observed zero pattern fixed (active sets define the
//! equality geometry), redraws active-good prices uniformly within a band
//! around the household's observed per-good range, and redraws quantities as
//! Dirichlet shares rescaled to match observed expenditure. Quantile
//! statistics compare the observed structural distance and behavioural
//! efficiency against their simulated distributions.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{BetaGrid, EngineError, EngineOptions, TestProblem};
use crate::hedonic::Technology;
use crate::models::{ModelSpec, SpaceSpec};
use crate::panel::{GoodsCatalog, HouseholdPanel};
use crate::structural;

#[derive(Debug, Error)]
pub enum RestrictError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Model(#[from] crate::models::ModelError),
    #[error("draw count must be at least 1")]
    NoDraws,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpenditureMatch {
    /// Rescale each period's quantities so period expenditure matches.
    PerPeriod,
    /// One household-level rescaling so total expenditure matches.
    Total,
}

#[derive(Debug, Clone)]
pub struct PerturbConfig {
    pub draws: usize,
    /// Multiplicative band (lo, hi) applied to the household's observed
    /// per-good min/max price, pooled across periods.
    pub price_band: (f64, f64),
    pub dirichlet_alpha: f64,
    pub seed: u64,
    pub expenditure_match: ExpenditureMatch,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            draws: 10_000,
            price_band: (0.8, 1.2),
            dirichlet_alpha: 1.0,
            seed: 0,
            expenditure_match: ExpenditureMatch::PerPeriod,
        }
    }
}

/// FNV-1a; stable across platforms and releases, unlike the std hasher.
fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn stream_rng(seed: u64, household: &str, draw: u64, period: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stable_hash(household).to_le_bytes());
    key[16..24].copy_from_slice(&draw.to_le_bytes());
    key[24..32].copy_from_slice(&period.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Observed per-good price range pooled across the household's periods.
fn price_ranges(panel: &HouseholdPanel) -> Vec<Option<(f64, f64)>> {
    let mut ranges: Vec<Option<(f64, f64)>> = vec![None; panel.k];
    for period in &panel.periods {
        for g in &period.goods {
            let entry = ranges[g.good].get_or_insert((g.price, g.price));
            entry.0 = entry.0.min(g.price);
            entry.1 = entry.1.max(g.price);
        }
    }
    ranges
}

/// One locally perturbed panel. Deterministic in (seed, household, draw);
/// draws are keyed per period so parallel evaluation order cannot matter.
pub fn perturb(panel: &HouseholdPanel, cfg: &PerturbConfig, draw_index: u64) -> HouseholdPanel {
    let ranges = price_ranges(panel);
    let (lo_f, hi_f) = cfg.price_band;
    let mut out = panel.clone();

    let mut total_budget = 0.0;
    let mut total_cost = 0.0;
    let mut shares: Vec<Vec<f64>> = Vec::with_capacity(panel.t());
    for (pi, period) in out.periods.iter_mut().enumerate() {
        let mut rng = stream_rng(cfg.seed, &panel.household_id, draw_index, pi as u64);
        // Prices first, in good order, then quantity shares.
        for g in period.goods.iter_mut() {
            let (min_p, max_p) = ranges[g.good].expect("active good has observed price");
            let (lo, hi) = (lo_f * min_p, hi_f * max_p);
            g.price = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        }
        let n = period.goods.len();
        let s = if n == 1 {
            vec![1.0]
        } else {
            let gamma = Gamma::new(cfg.dirichlet_alpha, 1.0).expect("alpha > 0");
            let draws: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng).max(1e-300)).collect();
            let sum: f64 = draws.iter().sum();
            draws.into_iter().map(|d| d / sum).collect()
        };
        let cost: f64 = period
            .goods
            .iter()
            .zip(&s)
            .map(|(g, share)| g.price * share)
            .sum();
        total_budget += period.expenditure;
        total_cost += cost;
        shares.push(s);
    }

    for (pi, period) in out.periods.iter_mut().enumerate() {
        let cost: f64 = period
            .goods
            .iter()
            .zip(&shares[pi])
            .map(|(g, share)| g.price * share)
            .sum();
        let scale = match cfg.expenditure_match {
            ExpenditureMatch::PerPeriod => {
                if cost > 0.0 {
                    period.expenditure / cost
                } else {
                    1.0
                }
            }
            ExpenditureMatch::Total => {
                if total_cost > 0.0 {
                    total_budget / total_cost
                } else {
                    1.0
                }
            }
        };
        for (g, share) in period.goods.iter_mut().zip(&shares[pi]) {
            g.quantity = scale * share;
        }
        period.expenditure = period
            .goods
            .iter()
            .map(|g| g.price * g.quantity)
            .sum();
    }
    out
}

/// Left-tail quantile: fraction of simulated distances at least as close to
/// the manifold as the observed one (inclusive).
pub fn quantile_dist(d_obs: f64, d_sims: &[f64]) -> f64 {
    assert!(!d_sims.is_empty());
    d_sims.iter().filter(|&&d| d <= d_obs).count() as f64 / d_sims.len() as f64
}

/// Right-tail quantile: fraction of simulated efficiency indices at least as
/// high as the observed one (inclusive).
pub fn quantile_ccei(ccei_obs: f64, ccei_sims: &[f64]) -> f64 {
    assert!(!ccei_sims.is_empty());
    ccei_sims.iter().filter(|&&c| c >= ccei_obs).count() as f64 / ccei_sims.len() as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestrictivenessRow {
    pub household_id: String,
    pub model_id: String,
    pub d_obs: f64,
    pub d_sim_mean: f64,
    pub ccei_obs: Option<f64>,
    pub ccei_sim_mean: Option<f64>,
    pub q_dist: f64,
    /// Unconditional: structurally infeasible draws count as not exceeding.
    pub q_ccei: Option<f64>,
    /// Conditional on draws where the behavioural index is defined.
    pub q_ccei_cond: Option<f64>,
    pub n_draws: usize,
    pub n_struct_feasible: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestrictivenessSummary {
    pub model_id: String,
    pub n_households: usize,
    pub d_obs_mean: f64,
    pub d_sim_mean: f64,
    pub ccei_obs_mean: Option<f64>,
    pub ccei_sim_mean: Option<f64>,
    pub q_dist_mean: f64,
    pub pr_q_dist_lt_05: f64,
    pub q_ccei_mean: Option<f64>,
    pub pr_q_ccei_lt_05: Option<f64>,
}

pub struct RestrictReport {
    pub rows: Vec<RestrictivenessRow>,
    pub summaries: Vec<RestrictivenessSummary>,
}

/// Distance statistic of one panel on the standard evaluated dates, reusing
/// per-date projection bases (the active sets, and hence the bases, are
/// shared by every draw).
fn panel_distance(
    panel: &HouseholdPanel,
    bases: &[(usize, Option<nalgebra::DMatrix<f64>>)],
) -> f64 {
    if bases.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for (date, basis) in bases {
        let period = &panel.periods[date - 1];
        let rho = DVector::from_iterator(period.goods.len(), period.goods.iter().map(|g| g.price));
        sum += structural::distance_with_basis(basis.as_ref(), &rho).unwrap_or(1.0);
    }
    sum / bases.len() as f64
}

fn reporting_bases(
    panel: &HouseholdPanel,
    tech: &Technology,
) -> Result<Vec<(usize, Option<nalgebra::DMatrix<f64>>)>, EngineError> {
    let t = panel.t();
    let mut out = Vec::new();
    for date in 2..t.max(2) {
        let x = panel.quantities(date);
        let prices = panel.prices(date);
        let slice = tech.active_slice(&x, &prices)?;
        out.push((date, structural::projection_basis(&slice)));
    }
    Ok(out)
}

fn model_ccei(
    panel: &HouseholdPanel,
    model: &ModelSpec,
    tech: &Technology,
    grid: &BetaGrid,
    opts: EngineOptions,
) -> Result<Option<f64>, EngineError> {
    match model.space {
        SpaceSpec::Goods if !model.lifecycle => {
            Ok(Some(crate::models::garp_efficiency(panel, opts.ccei_tol)))
        }
        _ => {
            let problem = TestProblem::build(panel, tech, model.mode, opts)?;
            problem.ccei(grid)
        }
    }
}

fn resolve_for_panel(
    model: &ModelSpec,
    panel: &HouseholdPanel,
    shared: Option<&Technology>,
) -> Result<(HouseholdPanel, Technology), crate::models::ModelError> {
    match model.space {
        SpaceSpec::Characteristics => Ok((panel.clone(), shared.unwrap().clone())),
        SpaceSpec::Goods => {
            let (sub, union) = crate::models::restrict_to_active_union(panel);
            let habit_goods = match &model.habits {
                crate::models::HabitSpec::Keyword(k) if k == "all" => (0..union.len()).collect(),
                _ => Vec::new(),
            };
            let tech = Technology::identity(union.len().max(1), habit_goods, model.lags)
                .map_err(|e| crate::models::ModelError::Engine {
                    model: model.name.clone(),
                    source: EngineError::Hedonic(e),
                })?;
            Ok((sub, tech))
        }
    }
}

/// Full Appendix-style pipeline: observed moments, M perturbed draws per
/// household, quantiles, and per-model aggregates.
pub fn restrictiveness_report(
    panels: &[HouseholdPanel],
    attr_names: &[String],
    a: &nalgebra::DMatrix<f64>,
    catalog: &GoodsCatalog,
    models: &[ModelSpec],
    cfg: &PerturbConfig,
    default_grid: &BetaGrid,
    opts: EngineOptions,
) -> Result<RestrictReport, RestrictError> {
    if cfg.draws == 0 {
        return Err(RestrictError::NoDraws);
    }
    let mut rows = Vec::new();
    for model in models {
        let shared_tech = match model.space {
            SpaceSpec::Characteristics => {
                Some(model.technology(attr_names, a, catalog.ids())?)
            }
            SpaceSpec::Goods => None,
        };
        let grid = model.grid(default_grid);
        let model_rows: Vec<RestrictivenessRow> = panels
            .par_iter()
            .map(|panel| -> Result<RestrictivenessRow, RestrictError> {
                let (eff_panel, tech) = resolve_for_panel(model, panel, shared_tech.as_ref())?;
                let bases = reporting_bases(&eff_panel, &tech)?;
                let d_obs = panel_distance(&eff_panel, &bases);
                let ccei_obs = model_ccei(&eff_panel, model, &tech, grid, opts)?;

                let sims: Vec<(f64, Option<f64>)> = (0..cfg.draws as u64)
                    .into_par_iter()
                    .map(|draw| -> Result<(f64, Option<f64>), RestrictError> {
                        // Perturb in the panel's own goods universe so the
                        // zero pattern and price ranges are the observed ones.
                        let sim = perturb(&eff_panel, cfg, draw);
                        let d = panel_distance(&sim, &bases);
                        let c = model_ccei(&sim, model, &tech, grid, opts)?;
                        Ok((d, c))
                    })
                    .collect::<Result<Vec<_>, _>>()?;

                let d_sims: Vec<f64> = sims.iter().map(|(d, _)| *d).collect();
                let ccei_defined: Vec<f64> = sims.iter().filter_map(|(_, c)| *c).collect();
                let n_struct_feasible = ccei_defined.len();
                let q_dist = quantile_dist(d_obs, &d_sims);
                let (q_ccei, q_ccei_cond, ccei_sim_mean) = match ccei_obs {
                    None => (None, None, mean_opt(&ccei_defined)),
                    Some(c_obs) => {
                        let exceed = ccei_defined.iter().filter(|&&c| c >= c_obs).count();
                        let q_uncond = exceed as f64 / cfg.draws as f64;
                        let q_cond = if ccei_defined.is_empty() {
                            None
                        } else {
                            Some(exceed as f64 / ccei_defined.len() as f64)
                        };
                        (Some(q_uncond), q_cond, mean_opt(&ccei_defined))
                    }
                };
                Ok(RestrictivenessRow {
                    household_id: panel.household_id.clone(),
                    model_id: model.name.clone(),
                    d_obs,
                    d_sim_mean: d_sims.iter().sum::<f64>() / d_sims.len() as f64,
                    ccei_obs,
                    ccei_sim_mean,
                    q_dist,
                    q_ccei,
                    q_ccei_cond,
                    n_draws: cfg.draws,
                    n_struct_feasible,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.extend(model_rows);
    }
    rows.sort_by(|x, y| (&x.model_id, &x.household_id).cmp(&(&y.model_id, &y.household_id)));
    let summaries = summarize(&rows, models);
    Ok(RestrictReport { rows, summaries })
}

fn mean_opt(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn summarize(rows: &[RestrictivenessRow], models: &[ModelSpec]) -> Vec<RestrictivenessSummary> {
    models
        .iter()
        .map(|model| {
            let mrows: Vec<&RestrictivenessRow> =
                rows.iter().filter(|r| r.model_id == model.name).collect();
            let n = mrows.len();
            let mean = |f: &dyn Fn(&RestrictivenessRow) -> f64| -> f64 {
                if n == 0 {
                    0.0
                } else {
                    mrows.iter().map(|r| f(r)).sum::<f64>() / n as f64
                }
            };
            let ccei_obs: Vec<f64> = mrows.iter().filter_map(|r| r.ccei_obs).collect();
            let ccei_sim: Vec<f64> = mrows.iter().filter_map(|r| r.ccei_sim_mean).collect();
            let q_ccei: Vec<f64> = mrows.iter().filter_map(|r| r.q_ccei).collect();
            RestrictivenessSummary {
                model_id: model.name.clone(),
                n_households: n,
                d_obs_mean: mean(&|r| r.d_obs),
                d_sim_mean: mean(&|r| r.d_sim_mean),
                ccei_obs_mean: mean_opt(&ccei_obs),
                ccei_sim_mean: mean_opt(&ccei_sim),
                q_dist_mean: mean(&|r| r.q_dist),
                pr_q_dist_lt_05: mean(&|r| if r.q_dist < 0.05 { 1.0 } else { 0.0 }),
                q_ccei_mean: mean_opt(&q_ccei),
                pr_q_ccei_lt_05: if q_ccei.is_empty() {
                    None
                } else {
                    Some(
                        q_ccei.iter().filter(|&&q| q < 0.05).count() as f64 / q_ccei.len() as f64,
                    )
                },
            }
        })
        .collect()
}
