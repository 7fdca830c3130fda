//! The dynamic revealed-preference engine.
//!
//! For a fixed discount factor the rationalisability conditions form one
//! linear feasibility problem in Afriat numbers V_t and discounted shadow
//! prices π_t^0, π_t^l:
//!
//!   (L1)  V_s − V_t − β^{-(t-1)}·[π_t^0; π_t^1; ...]'(z̃_s − z̃_t) ≤ 0
//!   (L3)  B_t'π_t^0 + Σ_l (B_t^a)'π_{t+l}^l = ρ_t⁺        (equality dates)
//!   (L2)  A'π_t^0 + Σ_l (A^a)'π_{t+l}^l ≤ ρ_t             (full-price mode,
//!                                                          non-purchased goods)
//!
//! Dating follows the interior-date convention: the pricing equalities are
//! imposed on t = L+1, ..., T−L (the initial habit stock is unobserved and the
//! final period is not a terminal horizon), and the Afriat inequalities run
//! over the retained dates t = L+1, ..., T. Without habit-forming
//! characteristics the one-lag dating is kept so that all model variants
//! evaluate the same dates.
//!
//! The equality system is the structural margin: it decomposes date by date,
//! is free of β, and is feasible exactly when every evaluated date passes the
//! price-spanning check. That check therefore gates the β-grid scan.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feasibility::{FeasibilityError, LinearSystem, Sense};
use crate::hedonic::{ActiveSlice, HedonicError, Technology};
use crate::panel::HouseholdPanel;
use crate::structural::{self, StructuralVerdict};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("need at least {need} periods for lag structure, panel has {t}")]
    TooFewPeriods { t: usize, need: usize },
    #[error("discount factor must lie in (0, 1], got {0}")]
    BadBeta(f64),
    #[error(transparent)]
    Hedonic(#[from] HedonicError),
    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceMode {
    /// Prices observed only for purchased goods; missing prices are implicit
    /// unknowns (the scanner regime, default).
    MissingPrices,
    /// Inequality restrictions imposed on observed prices of non-purchased
    /// goods as well.
    FullPrices,
}

#[derive(Debug, Clone, Copy)]
pub struct EngineOptions {
    /// Absolute feasibility tolerance after prices are scaled so the mean
    /// active price is one.
    pub feas_tol: f64,
    /// Relative singular-value cutoff for rank decisions.
    pub rank_tol: f64,
    /// A date passes the spanning check when its relative price residual is
    /// at most this.
    pub nc_tol: f64,
    /// Optional nonnegativity restriction on shadow prices (off: the linear
    /// model places no sign restrictions on habit components).
    pub nonneg_shadow: bool,
    /// Bisection tolerance for the efficiency index.
    pub ccei_tol: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            feas_tol: 1e-7,
            rank_tol: structural::DEFAULT_RANK_TOL,
            nc_tol: structural::DEFAULT_NC_TOL,
            nonneg_shadow: false,
            ccei_tol: 1e-4,
        }
    }
}

/// Discount-factor grid; defaults to {0.950, 0.951, ..., 1.000}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaGrid(pub Vec<f64>);

impl Default for BetaGrid {
    fn default() -> Self {
        BetaGrid((950..=1000).map(|i| i as f64 / 1000.0).collect())
    }
}

impl BetaGrid {
    pub fn from_range(start: f64, stop: f64, step: f64) -> Self {
        let mut values = Vec::new();
        let n = ((stop - start) / step).round() as i64;
        for i in 0..=n.max(0) {
            let v = start + step * i as f64;
            if v > 0.0 && v <= 1.0 + 1e-12 {
                values.push(v.min(1.0));
            }
        }
        BetaGrid(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// A rationalisability witness: Afriat numbers and discounted shadow prices
/// at one admissible discount factor. Dates before the retained range carry
/// zeros; the lag vectors include the terminal convention π_{T+1}^l = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub beta: f64,
    /// First retained date (1-based).
    pub retained_start: usize,
    /// V_t, index t-1, length T.
    pub v: Vec<f64>,
    /// π_t^0 (J entries each), index t-1, length T.
    pub pi0: Vec<Vec<f64>>,
    /// π_t^l for l = 1..L: `pi_lag[l-1][t-1]`, length T+1 so that the final
    /// entry is the zero vector for date T+1.
    pub pi_lag: Vec<Vec<Vec<f64>>>,
    /// Stacked augmented bundles z̃_t for retained dates, aligned with
    /// `retained_start`.
    pub z_tilde: Vec<Vec<f64>>,
    /// Absolute feasibility tolerance in original price units.
    pub feas_tol: f64,
}

impl Certificate {
    /// Undiscounted stacked shadow prices π̃_t = β^{-(t-1)}[π_t^0; π_t^1; ...].
    pub fn pi_tilde(&self, t: usize) -> DVector<f64> {
        let factor = self.beta.powi(-(t as i32 - 1));
        let j = self.pi0[t - 1].len();
        let j2 = self.pi_lag.first().map_or(0, |l| l[t - 1].len());
        let mut out = DVector::zeros(j + self.pi_lag.len() * j2);
        for (i, &p) in self.pi0[t - 1].iter().enumerate() {
            out[i] = factor * p;
        }
        for (l, lag) in self.pi_lag.iter().enumerate() {
            for (i, &p) in lag[t - 1].iter().enumerate() {
                out[j + l * j2 + i] = factor * p;
            }
        }
        out
    }

    pub fn t(&self) -> usize {
        self.v.len()
    }

    pub fn retained_dates(&self) -> impl Iterator<Item = usize> + '_ {
        self.retained_start..=self.t()
    }

    /// The Afriat envelope u(z̃) = min_t {V_t + π̃_t'(z̃ − z̃_t)} supported by
    /// this certificate.
    pub fn utility(&self) -> AfriatEnvelope {
        let terms = self
            .retained_dates()
            .enumerate()
            .map(|(i, t)| {
                (
                    self.v[t - 1],
                    self.pi_tilde(t),
                    DVector::from_vec(self.z_tilde[i].clone()),
                )
            })
            .collect();
        AfriatEnvelope { terms }
    }
}

/// Min of finitely many affine functions; concave by construction.
#[derive(Debug, Clone)]
pub struct AfriatEnvelope {
    terms: Vec<(f64, DVector<f64>, DVector<f64>)>,
}

impl AfriatEnvelope {
    pub fn eval(&self, z: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .map(|(v, pi, z_t)| v + pi.dot(&(z - z_t)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Test outcome for one (household, model) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestOutcome {
    pub household_id: String,
    pub model_id: String,
    pub pass: bool,
    pub admissible_betas: Vec<f64>,
    pub nc_all_pass: bool,
    pub mean_distance: f64,
    pub structural: StructuralVerdict,
    /// Behavioural efficiency index; absent when the structural equalities
    /// are infeasible (the behavioural margin is then not meaningful).
    pub ccei: Option<f64>,
    pub certificate: Option<Certificate>,
}

struct VarLayout {
    /// retained[r] = 1-based date.
    retained: Vec<usize>,
    j: usize,
    j2: usize,
    lags: usize,
}

impl VarLayout {
    fn block(&self) -> usize {
        self.j + self.lags * self.j2
    }

    fn num_vars(&self) -> usize {
        self.retained.len() * (1 + self.block())
    }

    fn pos(&self, date: usize) -> usize {
        date - self.retained[0]
    }

    fn v(&self, date: usize) -> usize {
        self.pos(date)
    }

    fn pi0(&self, date: usize, j: usize) -> usize {
        self.retained.len() + self.pos(date) * self.block() + j
    }

    fn pi_lag(&self, date: usize, lag: usize, i: usize) -> usize {
        self.retained.len() + self.pos(date) * self.block() + self.j + (lag - 1) * self.j2 + i
    }
}

/// One household's test problem against one technology: cached augmented
/// bundles, active slices, and the scale anchor. All prices inside are scaled
/// so the household's mean active price is one.
pub struct TestProblem {
    household_id: String,
    t: usize,
    scale: f64,
    layout: VarLayout,
    /// Equality dates (subset of retained).
    equality_dates: Vec<usize>,
    /// z̃_t for retained dates, in retained order.
    z_tilde: Vec<DVector<f64>>,
    /// Active slice per equality date, with scaled prices.
    slices: Vec<ActiveSlice>,
    /// Scaled expenditure per date, index t-1.
    expenditure: Vec<f64>,
    /// Full-price-mode rows: per equality date, (good, scaled price, column
    /// coefficients of A and A^a for that good).
    inactive: Vec<Vec<(usize, f64)>>,
    a_cols: Vec<Vec<f64>>,
    a_habit_cols: Vec<Vec<f64>>,
    mode: PriceMode,
    opts: EngineOptions,
}

impl TestProblem {
    pub fn build(
        panel: &HouseholdPanel,
        tech: &Technology,
        mode: PriceMode,
        opts: EngineOptions,
    ) -> Result<Self, EngineError> {
        let t = panel.t();
        // Dating lag: habit memory when habits are present, otherwise the
        // one-lag empirical convention so all models share evaluated dates.
        let dl = if tech.j2() > 0 { tech.lags() } else { 1 };
        if t < 2 * dl + 1 {
            return Err(EngineError::TooFewPeriods { t, need: 2 * dl + 1 });
        }
        let retained: Vec<usize> = (dl + 1..=t).collect();
        let equality_dates: Vec<usize> = (dl + 1..=t - dl).collect();
        let scale = {
            let s = panel.mean_active_price();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        };

        let lags_eff = if tech.j2() > 0 { tech.lags() } else { 0 };
        let mut z_tilde = Vec::with_capacity(retained.len());
        for &date in &retained {
            let x = panel.quantities(date);
            let lagged: Vec<DVector<f64>> = (1..=lags_eff)
                .map(|l| panel.quantities(date - l))
                .collect();
            let z = tech.characteristics(&x)?;
            let mut stacked = DVector::zeros(tech.j() + lags_eff * tech.j2());
            stacked.rows_mut(0, tech.j()).copy_from(&z);
            for (l, xl) in lagged.iter().enumerate() {
                let za = tech.habit_characteristics(xl)?;
                stacked
                    .rows_mut(tech.j() + l * tech.j2(), tech.j2())
                    .copy_from(&za);
            }
            z_tilde.push(stacked);
        }

        let mut slices = Vec::with_capacity(equality_dates.len());
        let mut inactive = Vec::with_capacity(equality_dates.len());
        for &date in &equality_dates {
            let x = panel.quantities(date);
            let mut prices = panel.prices(date);
            for p in prices.iter_mut().flatten() {
                *p /= scale;
            }
            let slice = tech.active_slice(&x, &prices)?;
            let mut extra = Vec::new();
            if mode == PriceMode::FullPrices {
                for (k, p) in prices.iter().enumerate() {
                    if let Some(p) = p {
                        if !slice.active.contains(&k) {
                            extra.push((k, *p));
                        }
                    }
                }
            }
            slices.push(slice);
            inactive.push(extra);
        }

        let expenditure: Vec<f64> = (1..=t).map(|d| panel.expenditure(d) / scale).collect();
        let a_cols = (0..tech.k())
            .map(|k| (0..tech.j()).map(|j| tech.matrix()[(j, k)]).collect())
            .collect();
        let a_habit_cols = (0..tech.k())
            .map(|k| {
                (0..tech.j2())
                    .map(|i| tech.habit_matrix()[(i, k)])
                    .collect()
            })
            .collect();

        Ok(TestProblem {
            household_id: panel.household_id.clone(),
            t,
            scale,
            layout: VarLayout {
                retained,
                j: tech.j(),
                j2: tech.j2(),
                lags: lags_eff,
            },
            equality_dates,
            z_tilde,
            slices,
            expenditure,
            inactive,
            a_cols,
            a_habit_cols,
            mode,
            opts,
        })
    }

    pub fn household_id(&self) -> &str {
        &self.household_id
    }

    pub fn retained_dates(&self) -> &[usize] {
        &self.layout.retained
    }

    pub fn equality_dates(&self) -> &[usize] {
        &self.equality_dates
    }

    pub fn z_tilde(&self, date: usize) -> &DVector<f64> {
        &self.z_tilde[self.layout.pos(date)]
    }

    /// Structural gate: relative price residual at every equality date.
    /// Equivalent to joint feasibility of the pricing equalities, which
    /// decompose date by date and do not involve β.
    pub fn equality_distances(&self) -> Vec<f64> {
        self.slices
            .iter()
            .map(|s| structural::distance_to_manifold(s).unwrap_or(1.0))
            .collect()
    }

    pub fn equalities_feasible(&self) -> bool {
        self.equality_distances()
            .iter()
            .all(|&d| d <= self.opts.nc_tol)
    }

    fn assemble(&self, beta: f64, slack_e: Option<f64>) -> Result<LinearSystem, EngineError> {
        let lay = &self.layout;
        let mut sys = LinearSystem::new(lay.num_vars());

        // (L1) over ordered pairs of retained dates.
        for (ti, &t) in lay.retained.iter().enumerate() {
            let factor = beta.powi(-(t as i32 - 1));
            for (si, &s) in lay.retained.iter().enumerate() {
                if s == t {
                    continue;
                }
                let dz = &self.z_tilde[si] - &self.z_tilde[ti];
                let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(2 + lay.block());
                coeffs.push((lay.v(s), 1.0));
                coeffs.push((lay.v(t), -1.0));
                for j in 0..lay.j {
                    coeffs.push((lay.pi0(t, j), -factor * dz[j]));
                }
                for l in 1..=lay.lags {
                    for i in 0..lay.j2 {
                        let c = dz[lay.j + (l - 1) * lay.j2 + i];
                        coeffs.push((lay.pi_lag(t, l, i), -factor * c));
                    }
                }
                let rhs = match slack_e {
                    None => 0.0,
                    Some(e) => (1.0 - e) * factor * self.expenditure[t - 1],
                };
                sys.push_row(Sense::Le, rhs, coeffs)?;
            }
        }

        // (L3) pricing equalities on the evaluated interior dates.
        for (ei, &t) in self.equality_dates.iter().enumerate() {
            let slice = &self.slices[ei];
            for (row, _good) in slice.active.iter().enumerate() {
                let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(lay.block());
                for j in 0..lay.j {
                    coeffs.push((lay.pi0(t, j), slice.b_tilde[(row, j)]));
                }
                for l in 1..=lay.lags {
                    for i in 0..lay.j2 {
                        let c = slice.b_tilde[(row, lay.j + (l - 1) * lay.j2 + i)];
                        coeffs.push((lay.pi_lag(t + l, l, i), c));
                    }
                }
                sys.push_row(Sense::Eq, slice.rho_plus[row], coeffs)?;
            }
        }

        // (L2) price inequalities for non-purchased goods (full-price mode).
        if self.mode == PriceMode::FullPrices {
            for (ei, &t) in self.equality_dates.iter().enumerate() {
                for &(good, price) in &self.inactive[ei] {
                    let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(lay.block());
                    for j in 0..lay.j {
                        coeffs.push((lay.pi0(t, j), self.a_cols[good][j]));
                    }
                    for l in 1..=lay.lags {
                        for i in 0..lay.j2 {
                            coeffs.push((lay.pi_lag(t + l, l, i), self.a_habit_cols[good][i]));
                        }
                    }
                    sys.push_row(Sense::Le, price, coeffs)?;
                }
            }
        }

        if self.opts.nonneg_shadow {
            for &t in &lay.retained {
                for j in 0..lay.j {
                    sys.push_row(Sense::Le, 0.0, [(lay.pi0(t, j), -1.0)])?;
                }
                for l in 1..=lay.lags {
                    for i in 0..lay.j2 {
                        sys.push_row(Sense::Le, 0.0, [(lay.pi_lag(t, l, i), -1.0)])?;
                    }
                }
            }
        }

        Ok(sys)
    }

    fn solve_raw(
        &self,
        beta: f64,
        slack_e: Option<f64>,
    ) -> Result<Option<Vec<f64>>, EngineError> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(EngineError::BadBeta(beta));
        }
        let sys = self.assemble(beta, slack_e)?;
        Ok(sys.solve(self.opts.feas_tol)?.point())
    }

    /// Feasibility of the exact system at one discount factor; returns the
    /// witness certificate when feasible.
    pub fn feasible_at_beta(&self, beta: f64) -> Result<Option<Certificate>, EngineError> {
        Ok(self
            .solve_raw(beta, None)?
            .map(|x| self.certificate_from(beta, &x)))
    }

    /// Grid values at which the exact system is feasible.
    pub fn admissible_betas(&self, grid: &BetaGrid) -> Result<Vec<f64>, EngineError> {
        if !self.equalities_feasible() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for &beta in grid.values() {
            if self.solve_raw(beta, None)?.is_some() {
                out.push(beta);
            }
        }
        Ok(out)
    }

    /// Feasibility of the e-relaxed system at one discount factor.
    pub fn relaxed_feasible(&self, beta: f64, e: f64) -> Result<bool, EngineError> {
        Ok(self.solve_raw(beta, Some(e))?.is_some())
    }

    fn feasible_any_beta(
        &self,
        grid: &BetaGrid,
        e: f64,
        cache: &mut Option<f64>,
    ) -> Result<bool, EngineError> {
        if let Some(b) = *cache {
            if self.solve_raw(b, Some(e))?.is_some() {
                return Ok(true);
            }
        }
        for &b in grid.values() {
            if Some(b) == *cache {
                continue;
            }
            if self.solve_raw(b, Some(e))?.is_some() {
                *cache = Some(b);
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Behavioural efficiency index e* = sup{e : the e-relaxed system is
    /// feasible at some grid β}, by bisection to `ccei_tol`. The Afriat
    /// inequalities are relaxed by an expenditure-scaled slack
    /// (1−e)·β^{-(t-1)}·E_t while the pricing equalities stay exact. Returns
    /// `None` when the equalities are infeasible.
    pub fn ccei(&self, grid: &BetaGrid) -> Result<Option<f64>, EngineError> {
        if !self.equalities_feasible() {
            return Ok(None);
        }
        let mut cache = None;
        if self.feasible_any_beta(grid, 1.0, &mut cache)? {
            return Ok(Some(1.0));
        }
        self.ccei_bisect(grid, cache).map(Some)
    }

    /// Bisection on [0, 1] given that e = 1 is known infeasible.
    pub(crate) fn ccei_bisect(
        &self,
        grid: &BetaGrid,
        mut cache: Option<f64>,
    ) -> Result<f64, EngineError> {
        if !self.feasible_any_beta(grid, 0.0, &mut cache)? {
            // sup over an empty feasible set; report full inefficiency.
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > self.opts.ccei_tol {
            let mid = 0.5 * (lo + hi);
            if self.feasible_any_beta(grid, mid, &mut cache)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    fn certificate_from(&self, beta: f64, x: &[f64]) -> Certificate {
        let lay = &self.layout;
        let t = self.t;
        let mut v = vec![0.0; t];
        let mut pi0 = vec![vec![0.0; lay.j]; t];
        let mut pi_lag = vec![vec![vec![0.0; lay.j2]; t + 1]; lay.lags];
        for &date in &lay.retained {
            v[date - 1] = x[lay.v(date)] * self.scale;
            for j in 0..lay.j {
                pi0[date - 1][j] = x[lay.pi0(date, j)] * self.scale;
            }
            for l in 1..=lay.lags {
                for i in 0..lay.j2 {
                    pi_lag[l - 1][date - 1][i] = x[lay.pi_lag(date, l, i)] * self.scale;
                }
            }
        }
        Certificate {
            beta,
            retained_start: lay.retained[0],
            v,
            pi0,
            pi_lag,
            z_tilde: self.z_tilde.iter().map(|z| z.as_slice().to_vec()).collect(),
            feas_tol: self.opts.feas_tol * self.scale,
        }
    }

    /// Check a certificate against this problem's constraints at its stored
    /// tolerance (shadow prices are in original units).
    pub fn verify_certificate(&self, cert: &Certificate) -> Result<(), String> {
        let lay = &self.layout;
        if cert.v.len() != self.t {
            return Err(format!(
                "certificate covers {} periods, panel has {}",
                cert.v.len(),
                self.t
            ));
        }
        let mut x = vec![0.0; lay.num_vars()];
        for &date in &lay.retained {
            x[lay.v(date)] = cert.v[date - 1] / self.scale;
            for j in 0..lay.j {
                x[lay.pi0(date, j)] = cert.pi0[date - 1][j] / self.scale;
            }
            for l in 1..=lay.lags {
                for i in 0..lay.j2 {
                    x[lay.pi_lag(date, l, i)] = cert.pi_lag[l - 1][date - 1][i] / self.scale;
                }
            }
        }
        let sys = self
            .assemble(cert.beta, None)
            .map_err(|e| e.to_string())?;
        let viol = sys.max_violation(&x);
        if viol <= cert.feas_tol / self.scale {
            Ok(())
        } else {
            Err(format!(
                "certificate violates constraints by {viol:e} (tol {:e})",
                cert.feas_tol / self.scale
            ))
        }
    }
}

/// Structural verdict on the standard reporting dates t = 2..T−1. The
/// statistic depends on the technology only through the column space of the
/// active blocks of A, so all habit partitions of one technology share it.
pub fn structural_verdict(
    panel: &HouseholdPanel,
    tech: &Technology,
    nc_tol: f64,
) -> Result<StructuralVerdict, EngineError> {
    let t = panel.t();
    let mut dates = Vec::new();
    let mut distances = Vec::new();
    for date in 2..t.max(2) {
        let x = panel.quantities(date);
        let prices = panel.prices(date);
        let slice = tech.active_slice(&x, &prices)?;
        let d = structural::distance_to_manifold(&slice).unwrap_or(1.0);
        dates.push(date);
        distances.push(d);
    }
    Ok(StructuralVerdict::from_distances(dates, distances, nc_tol))
}

/// Full pipeline for one (household, technology) pair: spanning gate, β-grid
/// scan, certificate at the smallest admissible β, efficiency index.
pub fn run_model(
    panel: &HouseholdPanel,
    tech: &Technology,
    mode: PriceMode,
    grid: &BetaGrid,
    opts: EngineOptions,
    model_id: &str,
) -> Result<TestOutcome, EngineError> {
    let problem = TestProblem::build(panel, tech, mode, opts)?;
    let structural = structural_verdict(panel, tech, opts.nc_tol)?;
    let gate = problem.equalities_feasible();

    let (admissible, certificate, ccei) = if !gate {
        (Vec::new(), None, None)
    } else {
        let admissible = problem.admissible_betas(grid)?;
        let certificate = match admissible.first() {
            Some(&beta) => problem.feasible_at_beta(beta)?,
            None => None,
        };
        let ccei = if admissible.is_empty() {
            Some(problem.ccei_bisect(grid, None)?)
        } else {
            Some(1.0)
        };
        (admissible, certificate, ccei)
    };

    Ok(TestOutcome {
        household_id: panel.household_id.clone(),
        model_id: model_id.to_string(),
        pass: !admissible.is_empty(),
        admissible_betas: admissible,
        nc_all_pass: gate,
        mean_distance: structural.household_distance,
        structural,
        ccei,
        certificate,
    })
}

/// Feasibility of the Afriat-number system V_s − V_t ≤ π̃_t'(z̃_s − z̃_t) for
/// fixed shadow prices, via the linear backend.
pub fn afriat_numbers_feasible(
    pi_tilde: &[DVector<f64>],
    z_tilde: &[DVector<f64>],
    tol: f64,
) -> Result<bool, FeasibilityError> {
    assert_eq!(pi_tilde.len(), z_tilde.len());
    let n = pi_tilde.len();
    let mut sys = LinearSystem::new(n);
    for t in 0..n {
        for s in 0..n {
            if s == t {
                continue;
            }
            let bound = pi_tilde[t].dot(&(&z_tilde[s] - &z_tilde[t]));
            sys.push_row(Sense::Le, bound, [(s, 1.0), (t, -1.0)])?;
        }
    }
    Ok(sys.solve(tol)?.is_feasible())
}

/// Brute-force cyclical monotonicity: Σ_m π̃_{t_m}'(z̃_{t_{m+1}} − z̃_{t_m}) ≥ 0
/// around every ordered cycle of length up to `max_len`. With `max_len` equal
/// to the number of observations this is full cyclical monotonicity (closed
/// walks decompose into the simple cycles enumerated here).
pub fn check_cycles_bruteforce(
    pi_tilde: &[DVector<f64>],
    z_tilde: &[DVector<f64>],
    max_len: usize,
) -> bool {
    assert_eq!(pi_tilde.len(), z_tilde.len());
    let n = pi_tilde.len();
    let max_len = max_len.min(n);
    if n < 2 || max_len < 2 {
        return true;
    }
    // Pairwise terms w[t][s] = π̃_t'(z̃_s − z̃_t).
    let mut w = vec![vec![0.0; n]; n];
    let mut mag: f64 = 0.0;
    for t in 0..n {
        for s in 0..n {
            if s != t {
                w[t][s] = pi_tilde[t].dot(&(&z_tilde[s] - &z_tilde[t]));
                mag = mag.max(w[t][s].abs());
            }
        }
    }
    let tol = -1e-9 * (1.0 + mag);

    // Enumerate simple cycles anchored at their smallest element.
    fn extend(
        w: &[Vec<f64>],
        start: usize,
        current: usize,
        used: &mut Vec<usize>,
        remaining: usize,
        sum: f64,
        tol: f64,
        n: usize,
    ) -> bool {
        if used.len() >= 2 && sum + w[current][start] < tol {
            return false;
        }
        if remaining == 0 {
            return true;
        }
        for next in (start + 1)..n {
            if used.contains(&next) {
                continue;
            }
            used.push(next);
            let ok = extend(
                w,
                start,
                next,
                used,
                remaining - 1,
                sum + w[current][next],
                tol,
                n,
            );
            used.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    for len in 2..=max_len {
        for start in 0..n {
            let mut used = vec![start];
            if !extend(&w, start, start, &mut used, len - 1, 0.0, tol, n) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalars(vals: &[f64]) -> Vec<DVector<f64>> {
        vals.iter().map(|&v| DVector::from_vec(vec![v])).collect()
    }

    #[test]
    fn two_cycle_violation_detected() {
        // π increasing where z increases: 1·(1-0) + 2·(0-1) = -1 < 0.
        let pi = scalars(&[1.0, 2.0]);
        let z = scalars(&[0.0, 1.0]);
        assert!(!check_cycles_bruteforce(&pi, &z, 2));
    }

    #[test]
    fn decreasing_marginal_value_passes() {
        let pi = scalars(&[2.0, 1.0]);
        let z = scalars(&[0.0, 1.0]);
        assert!(check_cycles_bruteforce(&pi, &z, 2));
    }

    #[test]
    fn single_observation_trivially_passes() {
        let pi = scalars(&[1.0]);
        let z = scalars(&[5.0]);
        assert!(check_cycles_bruteforce(&pi, &z, 1));
    }

    #[test]
    fn afriat_numbers_agree_with_cycles_on_examples() {
        let pi = scalars(&[1.0, 2.0]);
        let z = scalars(&[0.0, 1.0]);
        assert!(!afriat_numbers_feasible(&pi, &z, 1e-7).unwrap());
        let pi = scalars(&[2.0, 1.0]);
        assert!(afriat_numbers_feasible(&pi, &z, 1e-7).unwrap());
    }

    #[test]
    fn beta_grid_default_has_51_points() {
        let grid = BetaGrid::default();
        assert_eq!(grid.values().len(), 51);
        assert_eq!(grid.values()[0], 0.950);
        assert_eq!(*grid.values().last().unwrap(), 1.000);
    }

    #[test]
    fn beta_grid_from_range() {
        let grid = BetaGrid::from_range(0.96, 1.0, 0.01);
        assert_eq!(grid.values().len(), 5);
    }
}
