//! Synthetic panels with known ground truth.
//!
//! The rationalisable generator draws sparse quantity paths, prices active
//! goods through the first-order pricing equalities of a concave quadratic
//! felicity (whose gradient field is cyclically monotone by construction),
//! and returns the panel together with its witness certificate. Violation
//! generators start from the same construction and break exactly one margin:
//! an off-span price component (structural) or a negative two-cycle in the
//! pinned shadow prices (behavioural).

use chrono::{Duration, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{BetaGrid, Certificate, EngineError, EngineOptions, PriceMode, TestProblem};
use crate::hedonic::Technology;
use crate::panel::{GoodsCatalog, HouseholdPanel, Period, PurchaseEvent, PurchasedGood};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("resampling budget exhausted; shrink q_scale or raise b_base")]
    GeneratorStuck,
    #[error("cannot violate spanning: need more active goods than characteristics (K⁺ > J)")]
    CannotViolate,
    #[error("injection date {0} outside the evaluated interior dates")]
    BadInjectionDate(usize),
    #[error("constructed violation failed internal verification: {0}")]
    VerificationFailed(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub k: usize,
    pub j: usize,
    pub j2: usize,
    pub lags: usize,
    pub t: usize,
    pub beta_true: f64,
    pub seed: u64,
    /// Target number of active goods per period.
    pub sparsity: usize,
    /// Curvature scale of the quadratic felicity (PSD part).
    pub q_scale: f64,
    /// Baseline marginal valuation; keeps constructed prices positive.
    pub b_base: f64,
    /// Also emit prices for non-purchased goods (with positive slack).
    pub full_prices: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            k: 6,
            j: 3,
            j2: 1,
            lags: 1,
            t: 5,
            beta_true: 0.98,
            seed: 0,
            sparsity: 2,
            q_scale: 0.02,
            b_base: 3.0,
            full_prices: false,
        }
    }
}

pub fn synth_catalog(k: usize) -> GoodsCatalog {
    GoodsCatalog::new((0..k).map(|i| format!("g{i:03}")).collect())
}

/// Attribute names for synthetic technologies; the first two are sugar and
/// sodium so the builtin model set resolves against generated data.
pub fn synth_attribute_names(j: usize) -> Vec<String> {
    (0..j)
        .map(|i| match i {
            0 => "sugar".to_string(),
            1 => "sodium".to_string(),
            _ => format!("attr{i}"),
        })
        .collect()
}

pub fn generate_technology(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Technology {
    let a = DMatrix::from_fn(cfg.j, cfg.k, |_, _| rng.gen_range(0.2..1.2));
    let mut rows: Vec<usize> = (0..cfg.j).collect();
    for i in (1..rows.len()).rev() {
        rows.swap(i, rng.gen_range(0..=i));
    }
    let mut habit_rows: Vec<usize> = rows.into_iter().take(cfg.j2).collect();
    habit_rows.sort_unstable();
    Technology::with_names(a, habit_rows, cfg.lags, synth_attribute_names(cfg.j))
        .expect("generator produces valid technology")
}

struct QuadraticUtility {
    q: DMatrix<f64>,
    b: DVector<f64>,
}

impl QuadraticUtility {
    fn sample(dim: usize, cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Self {
        let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let q = (m.transpose() * &m) * (cfg.q_scale / dim as f64);
        let b = DVector::from_fn(dim, |_, _| cfg.b_base * (1.0 + rng.gen_range(0.0..0.5)));
        QuadraticUtility { q, b }
    }

    fn value(&self, z: &DVector<f64>) -> f64 {
        self.b.dot(z) - 0.5 * (z.transpose() * &self.q * z)[(0, 0)]
    }

    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.b - &self.q * z
    }
}

fn sample_quantities(
    cfg: &GeneratorConfig,
    rng: &mut ChaCha8Rng,
    dense_dates: &[usize],
) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(cfg.t);
    for date in 1..=cfg.t {
        let target = if dense_dates.contains(&date) {
            (cfg.j + 1).min(cfg.k)
        } else {
            cfg.sparsity.clamp(1, cfg.k)
        };
        let mut goods: Vec<usize> = (0..cfg.k).collect();
        for i in (1..goods.len()).rev() {
            goods.swap(i, rng.gen_range(0..=i));
        }
        goods.truncate(target);
        goods.sort_unstable();
        let mut x = DVector::zeros(cfg.k);
        for &g in &goods {
            x[g] = rng.gen_range(1..=5) as f64;
        }
        // First/last periods need two units so the purchase-event layout can
        // anchor the bin construction.
        if (date == 1 || date == cfg.t) && x.sum() < 2.0 {
            x[goods[0]] += 1.0;
        }
        out.push(x);
    }
    out
}

/// Stacked augmented bundle at `date` (1-based), padding unobserved lags with
/// zeros for the pre-sample pricing dates.
fn stacked_bundle(
    tech: &Technology,
    xs: &[DVector<f64>],
    date: usize,
    lags_eff: usize,
) -> DVector<f64> {
    let j = tech.j();
    let j2 = tech.j2();
    let mut z = DVector::zeros(j + lags_eff * j2);
    z.rows_mut(0, j)
        .copy_from(&(tech.matrix() * &xs[date - 1]));
    for l in 1..=lags_eff {
        if date > l {
            z.rows_mut(j + (l - 1) * j2, j2)
                .copy_from(&(tech.habit_matrix() * &xs[date - 1 - l]));
        }
    }
    z
}

struct Construction {
    xs: Vec<DVector<f64>>,
    /// Active-good prices per date, aligned with the active sets of `xs`.
    prices: Vec<Vec<(usize, f64)>>,
    inactive_prices: Vec<Vec<(usize, f64)>>,
    certificate: Certificate,
}

fn construct(
    cfg: &GeneratorConfig,
    tech: &Technology,
    rng: &mut ChaCha8Rng,
    dense_dates: &[usize],
) -> Result<Construction, SynthError> {
    let min_price = 0.01 * cfg.b_base;
    'attempt: for _ in 0..200 {
        let lags_eff = if cfg.j2 > 0 { cfg.lags } else { 0 };
        let dim = cfg.j + lags_eff * cfg.j2;
        let utility = QuadraticUtility::sample(dim, cfg, rng);
        let xs = sample_quantities(cfg, rng, dense_dates);

        // Discounted shadow prices per date from the felicity gradient.
        let bundles: Vec<DVector<f64>> = (1..=cfg.t)
            .map(|d| stacked_bundle(tech, &xs, d, lags_eff))
            .collect();
        let mut pi0 = vec![vec![0.0; cfg.j]; cfg.t];
        let mut pi_lag = vec![vec![vec![0.0; cfg.j2]; cfg.t + 1]; lags_eff];
        for date in 1..=cfg.t {
            let grad = utility.gradient(&bundles[date - 1]);
            let discount = cfg.beta_true.powi(date as i32 - 1);
            for j in 0..cfg.j {
                pi0[date - 1][j] = discount * grad[j];
            }
            for l in 1..=lags_eff {
                for i in 0..cfg.j2 {
                    pi_lag[l - 1][date - 1][i] = discount * grad[cfg.j + (l - 1) * cfg.j2 + i];
                }
            }
        }

        // Price actives through the equalities, with within-horizon
        // continuation terms only.
        let mut prices: Vec<Vec<(usize, f64)>> = Vec::with_capacity(cfg.t);
        let mut inactive_prices: Vec<Vec<(usize, f64)>> = Vec::with_capacity(cfg.t);
        for date in 1..=cfg.t {
            let mut row = Vec::new();
            let mut inactive_row = Vec::new();
            for good in 0..cfg.k {
                let mut rhs = 0.0;
                for j in 0..cfg.j {
                    rhs += tech.matrix()[(j, good)] * pi0[date - 1][j];
                }
                for l in 1..=lags_eff {
                    if date + l <= cfg.t {
                        for i in 0..cfg.j2 {
                            rhs += tech.habit_matrix()[(i, good)] * pi_lag[l - 1][date + l - 1][i];
                        }
                    }
                }
                if xs[date - 1][good] > 0.0 {
                    if rhs <= min_price {
                        continue 'attempt;
                    }
                    row.push((good, rhs));
                } else if cfg.full_prices {
                    inactive_row.push((good, rhs + rng.gen_range(0.05..0.4) * cfg.b_base));
                }
            }
            prices.push(row);
            inactive_prices.push(inactive_row);
        }

        let dl = if cfg.j2 > 0 { cfg.lags } else { 1 };
        let retained_start = dl + 1;
        let mut v = vec![0.0; cfg.t];
        let mut z_tilde = Vec::new();
        for date in retained_start..=cfg.t {
            v[date - 1] = utility.value(&bundles[date - 1]);
            z_tilde.push(bundles[date - 1].as_slice().to_vec());
        }
        // Zero the shadow prices outside the retained range: the certificate
        // only speaks for the evaluated dates.
        for date in 1..retained_start {
            pi0[date - 1].iter_mut().for_each(|p| *p = 0.0);
            for lag in pi_lag.iter_mut() {
                lag[date - 1].iter_mut().for_each(|p| *p = 0.0);
            }
        }

        let mean_price = {
            let all: Vec<f64> = prices.iter().flatten().map(|&(_, p)| p).collect();
            all.iter().sum::<f64>() / all.len() as f64
        };
        let certificate = Certificate {
            beta: cfg.beta_true,
            retained_start,
            v,
            pi0,
            pi_lag,
            z_tilde,
            feas_tol: EngineOptions::default().feas_tol * mean_price,
        };
        return Ok(Construction {
            xs,
            prices,
            inactive_prices,
            certificate,
        });
    }
    Err(SynthError::GeneratorStuck)
}

fn panel_from(
    household_id: &str,
    cfg: &GeneratorConfig,
    xs: &[DVector<f64>],
    prices: &[Vec<(usize, f64)>],
    inactive_prices: &[Vec<(usize, f64)>],
) -> HouseholdPanel {
    let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    let periods = (0..cfg.t)
        .map(|i| {
            let goods: Vec<PurchasedGood> = prices[i]
                .iter()
                .map(|&(good, price)| PurchasedGood {
                    good,
                    quantity: xs[i][good],
                    price,
                })
                .collect();
            let expenditure = goods.iter().map(|g| g.price * g.quantity).sum();
            Period {
                goods,
                inactive_prices: inactive_prices[i].clone(),
                expenditure,
                mid_date: start + Duration::days(10 * i as i64 + 5),
            }
        })
        .collect();
    HouseholdPanel {
        household_id: household_id.to_string(),
        k: cfg.k,
        periods,
    }
}

/// A panel rationalisable by construction, with its witness certificate at
/// `beta_true`.
pub fn generate_rationalisable(
    cfg: &GeneratorConfig,
) -> Result<(HouseholdPanel, Technology, Certificate), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tech = generate_technology(cfg, &mut rng);
    let c = construct(cfg, &tech, &mut rng, &[])?;
    let panel = panel_from(
        &format!("synth{:06}", cfg.seed),
        cfg,
        &c.xs,
        &c.prices,
        &c.inactive_prices,
    );
    Ok((panel, tech, c.certificate))
}

/// A panel violating the price-spanning condition at exactly the injected
/// dates: an orthogonal price component of relative size `delta` is added at
/// each of them, leaving every other date on the manifold.
pub fn generate_structural_violation(
    cfg: &GeneratorConfig,
    delta: f64,
    inject_dates: &[usize],
) -> Result<(HouseholdPanel, Technology), SynthError> {
    if cfg.k <= cfg.j {
        return Err(SynthError::CannotViolate);
    }
    let dl = if cfg.j2 > 0 { cfg.lags } else { 1 };
    for &d in inject_dates {
        if d < dl + 1 || d > cfg.t - dl {
            return Err(SynthError::BadInjectionDate(d));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tech = generate_technology(cfg, &mut rng);
    let panel = struct_fail_panel(
        cfg,
        &tech,
        inject_dates,
        delta,
        &format!("structfail{:06}", cfg.seed),
        &mut rng,
    )?;
    Ok((panel, tech))
}

/// Two-attribute technology over three goods whose habit characteristic loads
/// only on the third good. When that good is never purchased, the pricing
/// equalities pin the remaining shadow price exactly.
fn behavioural_technology(rng: &mut ChaCha8Rng) -> Technology {
    let a0: f64 = rng.gen_range(0.5..1.5);
    let a1: f64 = rng.gen_range(0.5..1.5);
    let a2: f64 = rng.gen_range(0.2..0.8);
    let a = DMatrix::from_row_slice(2, 3, &[a0, a1, a2, 0.0, 0.0, 1.0]);
    Technology::with_names(a, vec![1], 1, vec!["base".into(), "special".into()])
        .expect("valid technology")
}

fn behavioural_panel(
    household_id: &str,
    t: usize,
    tech: &Technology,
    rng: &mut ChaCha8Rng,
) -> HouseholdPanel {
    let a0 = tech.matrix()[(0, 0)];
    let a1 = tech.matrix()[(0, 1)];
    let base_price: f64 = rng.gen_range(1.0..3.0);
    let mut xs = Vec::with_capacity(t);
    let mut prices = Vec::with_capacity(t);
    for date in 1..=t {
        // Goods 0 and 1 always active; good 2 never purchased. Prices scale
        // the active loadings, so spanning holds exactly, while quantity and
        // price rise together from date 2 to date 3.
        let (q, c) = match date {
            2 => (1.0, base_price),
            3 => (2.0, 1.5 * base_price),
            _ => (1.0, base_price),
        };
        let mut x = DVector::zeros(3);
        x[0] = q;
        x[1] = q;
        if date == 1 || date == t {
            x[0] += 1.0;
        }
        xs.push(x);
        prices.push(vec![(0, c * a0), (1, c * a1)]);
    }
    let inactive = vec![Vec::new(); t];
    let cfg = GeneratorConfig {
        k: 3,
        t,
        ..Default::default()
    };
    panel_from(household_id, &cfg, &xs, &prices, &inactive)
}

/// A panel passing the spanning condition at every date but admitting no
/// rationalisation at any grid discount factor: the pinned shadow prices
/// carry a negative two-cycle at every β ≤ 1. Verified against the engine
/// before emission.
pub fn generate_behavioural_violation(
    cfg: &GeneratorConfig,
    grid: &BetaGrid,
) -> Result<(HouseholdPanel, Technology), SynthError> {
    let t = cfg.t.max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..50 {
        let tech = behavioural_technology(&mut rng);
        let panel = behavioural_panel(&format!("behavfail{:06}", cfg.seed), t, &tech, &mut rng);
        let problem =
            TestProblem::build(&panel, &tech, PriceMode::MissingPrices, EngineOptions::default())?;
        if !problem.equalities_feasible() {
            continue;
        }
        if !problem.admissible_betas(grid)?.is_empty() {
            continue;
        }
        return Ok((panel, tech));
    }
    Err(SynthError::VerificationFailed(
        "could not construct a verified behavioural violation".into(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthProfile {
    /// Rationalisable by construction.
    Pass,
    /// Spanning violated at the first evaluated interior date.
    StructFail,
    /// Spanning holds, Afriat inequalities fail at every grid β.
    BehavFail,
}

pub struct SynthDataset {
    pub panels: Vec<HouseholdPanel>,
    pub technology: Technology,
    pub catalog: GoodsCatalog,
    /// Witness certificates for rationalisable panels, aligned with `panels`.
    pub certificates: Vec<Option<Certificate>>,
}

/// A multi-household dataset sharing one technology, suitable for CSV
/// emission through the ingestion schemas.
pub fn generate_dataset(
    cfg: &GeneratorConfig,
    profile: SynthProfile,
    households: usize,
    delta: f64,
) -> Result<SynthDataset, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match profile {
        SynthProfile::Pass => {
            let tech = generate_technology(cfg, &mut rng);
            let mut panels = Vec::with_capacity(households);
            let mut certificates = Vec::with_capacity(households);
            for h in 0..households {
                let mut hh_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (h as u64).wrapping_mul(0x9e3779b97f4a7c15));
                let c = construct(cfg, &tech, &mut hh_rng, &[])?;
                let mut panel =
                    panel_from(&format!("hh{h:05}"), cfg, &c.xs, &c.prices, &c.inactive_prices);
                panel.household_id = format!("hh{h:05}");
                panels.push(panel);
                certificates.push(Some(c.certificate));
            }
            Ok(SynthDataset {
                panels,
                catalog: synth_catalog(cfg.k),
                technology: tech,
                certificates,
            })
        }
        SynthProfile::StructFail => {
            if cfg.k <= cfg.j {
                return Err(SynthError::CannotViolate);
            }
            let dl = if cfg.j2 > 0 { cfg.lags } else { 1 };
            let inject = vec![dl + 1];
            let tech = generate_technology(cfg, &mut rng);
            let mut panels = Vec::with_capacity(households);
            for h in 0..households {
                let mut hh_rng = ChaCha8Rng::seed_from_u64(
                    cfg.seed ^ (h as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15),
                );
                let panel = struct_fail_panel(
                    cfg,
                    &tech,
                    &inject,
                    delta,
                    &format!("hh{h:05}"),
                    &mut hh_rng,
                )?;
                panels.push(panel);
            }
            Ok(SynthDataset {
                panels,
                catalog: synth_catalog(cfg.k),
                technology: tech,
                certificates: vec![None; households],
            })
        }
        SynthProfile::BehavFail => {
            let tech = behavioural_technology(&mut rng);
            let t = cfg.t.max(4);
            let grid = BetaGrid::default();
            let mut panels = Vec::with_capacity(households);
            for h in 0..households {
                let mut hh_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (h as u64).wrapping_mul(0x9e3779b97f4a7c15));
                let panel = behavioural_panel(&format!("hh{h:05}"), t, &tech, &mut hh_rng);
                let problem = TestProblem::build(
                    &panel,
                    &tech,
                    PriceMode::MissingPrices,
                    EngineOptions::default(),
                )?;
                if !problem.equalities_feasible() || !problem.admissible_betas(&grid)?.is_empty() {
                    return Err(SynthError::VerificationFailed(format!(
                        "behavioural household {h} did not verify"
                    )));
                }
                panels.push(panel);
            }
            Ok(SynthDataset {
                panels,
                catalog: synth_catalog(3),
                technology: tech,
                certificates: vec![None; households],
            })
        }
    }
}

fn struct_fail_panel(
    cfg: &GeneratorConfig,
    tech: &Technology,
    inject_dates: &[usize],
    delta: f64,
    household_id: &str,
    rng: &mut ChaCha8Rng,
) -> Result<HouseholdPanel, SynthError> {
    'attempt: for _ in 0..100 {
        let c = construct(cfg, tech, rng, inject_dates)?;
        let mut prices = c.prices.clone();
        for &date in inject_dates {
            let active: Vec<usize> = prices[date - 1].iter().map(|&(g, _)| g).collect();
            let rho =
                DVector::from_iterator(active.len(), prices[date - 1].iter().map(|&(_, p)| p));
            let slice = tech.slice_for(active.clone(), rho.clone());
            let Some(basis) = crate::structural::projection_basis(&slice) else {
                continue 'attempt;
            };
            let mut ortho = DVector::zeros(active.len());
            let mut found = false;
            for _ in 0..50 {
                let r = DVector::from_fn(active.len(), |_, _| rng.gen_range(-1.0..1.0));
                let v = &r - &basis * (basis.transpose() * &r);
                if v.norm() > 1e-8 {
                    ortho = v.normalize();
                    found = true;
                    break;
                }
            }
            if !found {
                continue 'attempt;
            }
            let bumped = &rho + ortho * (delta * rho.norm());
            if bumped.iter().any(|&p| p <= 0.0) {
                let flipped = &rho - (&bumped - &rho);
                if flipped.iter().any(|&p| p <= 0.0) {
                    continue 'attempt;
                }
                for (i, &g) in active.iter().enumerate() {
                    prices[date - 1][i] = (g, flipped[i]);
                }
            } else {
                for (i, &g) in active.iter().enumerate() {
                    prices[date - 1][i] = (g, bumped[i]);
                }
            }
        }
        return Ok(panel_from(
            household_id,
            cfg,
            &c.xs,
            &prices,
            &c.inactive_prices,
        ));
    }
    Err(SynthError::GeneratorStuck)
}

/// Emit a panel as purchase events compatible with the ingestion schema, laid
/// out so that period construction reproduces the panel: ten-day bins, one
/// interior purchase day per period, and split anchor events in the first and
/// last periods so that T = ⌊S/G⌋ comes out exactly.
pub fn panel_to_events(
    panel: &HouseholdPanel,
    catalog: &GoodsCatalog,
    start: NaiveDate,
) -> Vec<PurchaseEvent> {
    let t = panel.t();
    let mut events = Vec::new();
    let mut emit = |date: NaiveDate, good: usize, units: u64, price: f64| {
        if units == 0 {
            return;
        }
        events.push(PurchaseEvent {
            household_id: panel.household_id.clone(),
            date,
            good_id: catalog.id(good).to_string(),
            units,
            expenditure: price * units as f64,
        });
    };
    for (i, period) in panel.periods.iter().enumerate() {
        let (day_a, day_b) = if i == 0 {
            (0i64, 5i64)
        } else if i == t - 1 {
            (10 * i as i64 + 5, 10 * t as i64)
        } else {
            let d = 10 * i as i64 + 5;
            (d, d)
        };
        let split = day_a != day_b;
        let mut placed_second = false;
        for (gi, g) in period.goods.iter().enumerate() {
            let units = g.quantity.round() as u64;
            debug_assert!(
                (g.quantity - units as f64).abs() < 1e-9,
                "event emission requires integer quantities"
            );
            if split && gi == 0 && period.goods.len() == 1 && units >= 2 {
                emit(start + Duration::days(day_a), g.good, 1, g.price);
                emit(start + Duration::days(day_b), g.good, units - 1, g.price);
                placed_second = true;
            } else if split && gi == period.goods.len() - 1 && !placed_second && gi > 0 {
                emit(start + Duration::days(day_b), g.good, units, g.price);
                placed_second = true;
            } else {
                emit(start + Duration::days(day_a), g.good, units, g.price);
            }
        }
        debug_assert!(!split || placed_second, "anchor event missing");
    }
    events.sort_by(|a, b| (a.date, a.good_id.clone()).cmp(&(b.date, b.good_id.clone())));
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::structural_verdict;
    use crate::panel::{build_periods, BuildOutcome};

    #[test]
    fn rationalisable_panel_passes_at_beta_true() {
        let cfg = GeneratorConfig {
            seed: 7,
            ..Default::default()
        };
        let (panel, tech, cert) = generate_rationalisable(&cfg).unwrap();
        let problem =
            TestProblem::build(&panel, &tech, PriceMode::MissingPrices, EngineOptions::default())
                .unwrap();
        problem.verify_certificate(&cert).unwrap();
        assert!(problem.feasible_at_beta(cfg.beta_true).unwrap().is_some());
    }

    #[test]
    fn linear_utility_gives_flat_shadow_prices() {
        let cfg = GeneratorConfig {
            seed: 3,
            q_scale: 0.0,
            ..Default::default()
        };
        let (panel, tech, _) = generate_rationalisable(&cfg).unwrap();
        let problem =
            TestProblem::build(&panel, &tech, PriceMode::MissingPrices, EngineOptions::default())
                .unwrap();
        assert!(problem.feasible_at_beta(cfg.beta_true).unwrap().is_some());
    }

    #[test]
    fn structural_violation_fails_at_injected_date_only() {
        let cfg = GeneratorConfig {
            k: 8,
            j: 3,
            j2: 1,
            t: 5,
            seed: 11,
            ..Default::default()
        };
        let (panel, tech) = generate_structural_violation(&cfg, 0.1, &[3]).unwrap();
        let verdict = structural_verdict(&panel, &tech, 1e-8).unwrap();
        for (i, &date) in verdict.dates.iter().enumerate() {
            if date == 3 {
                assert!(!verdict.nc_pass[i]);
                let expected = 0.1 / (1.0 + 0.01f64).sqrt();
                assert!((verdict.distances[i] - expected).abs() < 1e-9);
            } else {
                assert!(verdict.nc_pass[i], "date {date} should stay on manifold");
            }
        }
    }

    #[test]
    fn zero_delta_keeps_panel_rationalisable() {
        let cfg = GeneratorConfig {
            k: 8,
            j: 3,
            j2: 1,
            t: 5,
            seed: 13,
            ..Default::default()
        };
        let (panel, tech) = generate_structural_violation(&cfg, 0.0, &[3]).unwrap();
        let problem =
            TestProblem::build(&panel, &tech, PriceMode::MissingPrices, EngineOptions::default())
                .unwrap();
        assert!(problem.feasible_at_beta(cfg.beta_true).unwrap().is_some());
    }

    #[test]
    fn goods_identity_cannot_violate() {
        let cfg = GeneratorConfig {
            k: 4,
            j: 4,
            j2: 0,
            ..Default::default()
        };
        assert!(matches!(
            generate_structural_violation(&cfg, 0.1, &[2]),
            Err(SynthError::CannotViolate)
        ));
    }

    #[test]
    fn behavioural_violation_verified() {
        let cfg = GeneratorConfig {
            seed: 21,
            t: 5,
            ..Default::default()
        };
        let grid = BetaGrid::default();
        let (panel, tech) = generate_behavioural_violation(&cfg, &grid).unwrap();
        let problem =
            TestProblem::build(&panel, &tech, PriceMode::MissingPrices, EngineOptions::default())
                .unwrap();
        assert!(problem.equalities_feasible());
        assert!(problem.admissible_betas(&grid).unwrap().is_empty());
        let ccei = problem.ccei(&grid).unwrap().unwrap();
        assert!(ccei < 1.0);
    }

    #[test]
    fn events_round_trip_through_ingestion() {
        let cfg = GeneratorConfig {
            seed: 5,
            ..Default::default()
        };
        let (panel, _, _) = generate_rationalisable(&cfg).unwrap();
        let catalog = synth_catalog(cfg.k);
        let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        let events = panel_to_events(&panel, &catalog, start);
        let BuildOutcome::Panel(rebuilt) = build_periods(&events, &catalog, 3).unwrap() else {
            panic!("expected panel");
        };
        assert_eq!(rebuilt.t(), panel.t());
        for t in 1..=panel.t() {
            let a = panel.quantities(t);
            let b = rebuilt.quantities(t);
            assert_eq!(a, b, "quantities differ at date {t}");
            for (pa, pb) in panel.prices(t).iter().zip(rebuilt.prices(t).iter()) {
                match (pa, pb) {
                    (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9),
                    (None, None) => {}
                    _ => panic!("price pattern differs at date {t}"),
                }
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let cfg = GeneratorConfig {
            seed: 42,
            ..Default::default()
        };
        let (p1, _, c1) = generate_rationalisable(&cfg).unwrap();
        let (p2, _, c2) = generate_rationalisable(&cfg).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(c1, c2);
    }
}
