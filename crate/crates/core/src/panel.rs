//! Purchase-event ingestion and household panel construction.
//!
//! Events are binned into household-specific periods: with S the span from
//! first to last purchase and G the longest interpurchase gap, the household
//! gets T = ⌊S/G⌋ equal-length bins, each containing at least one purchase by
//! construction. Unit values are expenditure-to-quantity ratios pooled within
//! a (period, good) cell, and prices are optionally converted to present-value
//! terms with a monthly rate series.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MIN_PERIODS: usize = 3;
/// Reconstructed expenditure must match the recorded total this tightly.
pub const EXPENDITURE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("household has no purchase events")]
    EmptyHousehold,
    #[error("events span multiple households ({0} vs {1})")]
    MixedHouseholds(String, String),
    #[error("good {good_id} has positive expenditure but zero units in a period")]
    InconsistentRecord { good_id: String },
    #[error("no discount rate for month {0}")]
    MissingRate(String),
    #[error("discount rate for {month} must exceed -1, got {rate}")]
    InvalidRate { month: String, rate: f64 },
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: String,
        line: u64,
        msg: String,
    },
    #[error("unknown good '{good_id}' (not present in characteristics table)")]
    UnknownGood { good_id: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One checkout line: a quantity of one good bought on one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurchaseEvent {
    pub household_id: String,
    pub date: NaiveDate,
    pub good_id: String,
    pub units: u64,
    pub expenditure: f64,
}

/// Ordered good universe shared by panels and technology columns.
#[derive(Debug, Clone, Default)]
pub struct GoodsCatalog {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl GoodsCatalog {
    pub fn new(ids: Vec<String>) -> Self {
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        GoodsCatalog { ids, index }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn lookup(&self, good_id: &str) -> Option<usize> {
        self.index.get(good_id).copied()
    }
}

/// One good purchased within a period: pooled quantity and unit value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurchasedGood {
    pub good: usize,
    pub quantity: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    /// Goods with positive demand, ascending by good index.
    pub goods: Vec<PurchasedGood>,
    /// Known prices of goods *not* purchased this period (full-price panels).
    #[serde(default)]
    pub inactive_prices: Vec<(usize, f64)>,
    pub expenditure: f64,
    /// Midpoint of the period's bin; determines the discounting month.
    pub mid_date: NaiveDate,
}

impl Period {
    pub fn active(&self) -> Vec<usize> {
        self.goods.iter().map(|g| g.good).collect()
    }

    pub fn price_of(&self, good: usize) -> Option<f64> {
        self.goods
            .iter()
            .find(|g| g.good == good)
            .map(|g| g.price)
            .or_else(|| {
                self.inactive_prices
                    .iter()
                    .find(|(g, _)| *g == good)
                    .map(|(_, p)| *p)
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdPanel {
    pub household_id: String,
    /// Catalog size K; quantity vectors are indexed 0..K.
    pub k: usize,
    pub periods: Vec<Period>,
}

impl HouseholdPanel {
    pub fn t(&self) -> usize {
        self.periods.len()
    }

    /// Dense quantity vector for 1-based date `t`.
    pub fn quantities(&self, t: usize) -> DVector<f64> {
        let mut x = DVector::zeros(self.k);
        for g in &self.periods[t - 1].goods {
            x[g.good] = g.quantity;
        }
        x
    }

    /// Dense price vector (None where unobserved) for 1-based date `t`.
    pub fn prices(&self, t: usize) -> Vec<Option<f64>> {
        let mut p = vec![None; self.k];
        let period = &self.periods[t - 1];
        for g in &period.goods {
            p[g.good] = Some(g.price);
        }
        for &(g, price) in &period.inactive_prices {
            p[g] = Some(price);
        }
        p
    }

    pub fn expenditure(&self, t: usize) -> f64 {
        self.periods[t - 1].expenditure
    }

    /// Mean observed price across all (period, active good) cells.
    pub fn mean_active_price(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for p in &self.periods {
            for g in &p.goods {
                sum += g.price;
                n += 1;
            }
        }
        if n == 0 {
            1.0
        } else {
            sum / n as f64
        }
    }
}

/// Why a household was left out of the analysis sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExclusionReason {
    SinglePurchaseDate,
    TooFewPeriods { t: usize, min_t: usize },
}

#[derive(Debug, Clone)]
pub enum BuildOutcome {
    Panel(HouseholdPanel),
    Excluded {
        household_id: String,
        reason: ExclusionReason,
    },
}

/// Span, longest gap, and period count implied by a set of purchase dates.
/// The gap maximum runs over consecutive purchase dates between the first and
/// last purchase (window edges are not counted).
pub fn period_geometry(dates: &BTreeSet<NaiveDate>) -> Option<(i64, i64, usize)> {
    if dates.len() < 2 {
        return None;
    }
    let first = *dates.iter().next().unwrap();
    let last = *dates.iter().next_back().unwrap();
    let span = (last - first).num_days();
    let mut gap = 0i64;
    let mut prev = first;
    for &d in dates.iter().skip(1) {
        gap = gap.max((d - prev).num_days());
        prev = d;
    }
    Some((span, gap, (span / gap) as usize))
}

/// Bin index for an event at day offset `o` within a span of `s` days split
/// into `t` bins. Bins are left-open/right-closed except the first, so an
/// event landing exactly on a boundary belongs to the earlier bin. Integer
/// arithmetic keeps boundary handling exact.
fn bin_index(o: i64, s: i64, t: usize) -> usize {
    if o <= 0 {
        return 0;
    }
    let t = t as i64;
    let idx = (o * t + s - 1) / s - 1; // ceil(o·t/s) - 1
    idx.clamp(0, t - 1) as usize
}

/// Construct a household's panel from its purchase events. Events may arrive
/// in any order; construction is permutation invariant.
pub fn build_periods(
    events: &[PurchaseEvent],
    catalog: &GoodsCatalog,
    min_t: usize,
) -> Result<BuildOutcome, PanelError> {
    if events.is_empty() {
        return Err(PanelError::EmptyHousehold);
    }
    let household_id = events[0].household_id.clone();
    for e in events {
        if e.household_id != household_id {
            return Err(PanelError::MixedHouseholds(
                household_id,
                e.household_id.clone(),
            ));
        }
    }
    let mut sorted: Vec<&PurchaseEvent> = events.iter().filter(|e| e.units > 0).collect();
    sorted.sort_by(|a, b| {
        (a.date, &a.good_id, a.units)
            .partial_cmp(&(b.date, &b.good_id, b.units))
            .unwrap()
    });
    if sorted.is_empty() {
        return Err(PanelError::EmptyHousehold);
    }

    let dates: BTreeSet<NaiveDate> = sorted.iter().map(|e| e.date).collect();
    let Some((span, _gap, t)) = period_geometry(&dates) else {
        return Ok(BuildOutcome::Excluded {
            household_id,
            reason: ExclusionReason::SinglePurchaseDate,
        });
    };
    if t < min_t {
        return Ok(BuildOutcome::Excluded {
            household_id,
            reason: ExclusionReason::TooFewPeriods { t, min_t },
        });
    }

    let first = *dates.iter().next().unwrap();
    let mut bins: Vec<Vec<&PurchaseEvent>> = vec![Vec::new(); t];
    for e in &sorted {
        let o = (e.date - first).num_days();
        bins[bin_index(o, span, t)].push(e);
    }

    let mut periods = Vec::with_capacity(t);
    for (i, bin) in bins.iter().enumerate() {
        debug_assert!(!bin.is_empty(), "empty bin contradicts T = floor(S/G)");
        let goods = aggregate_period(bin, catalog)?;
        let expenditure = goods.iter().map(|g| g.price * g.quantity).sum();
        // Bin midpoint in days: bin i covers (i·S/T, (i+1)·S/T].
        let mid_days = ((2 * i as i64 + 1) * span) / (2 * t as i64);
        periods.push(Period {
            goods,
            inactive_prices: Vec::new(),
            expenditure,
            mid_date: first + Duration::days(mid_days),
        });
    }
    Ok(BuildOutcome::Panel(HouseholdPanel {
        household_id,
        k: catalog.len(),
        periods,
    }))
}

/// Pool the events of one bin into per-good quantities and unit values.
pub fn aggregate_period(
    events: &[&PurchaseEvent],
    catalog: &GoodsCatalog,
) -> Result<Vec<PurchasedGood>, PanelError> {
    let mut per_good: BTreeMap<usize, (u64, f64)> = BTreeMap::new();
    for e in events {
        let good = catalog
            .lookup(&e.good_id)
            .ok_or_else(|| PanelError::UnknownGood {
                good_id: e.good_id.clone(),
            })?;
        let entry = per_good.entry(good).or_insert((0, 0.0));
        entry.0 += e.units;
        entry.1 += e.expenditure;
    }
    let mut out = Vec::with_capacity(per_good.len());
    for (good, (units, expenditure)) in per_good {
        if units == 0 {
            if expenditure > 0.0 {
                return Err(PanelError::InconsistentRecord {
                    good_id: catalog.id(good).to_string(),
                });
            }
            continue;
        }
        out.push(PurchasedGood {
            good,
            quantity: units as f64,
            price: expenditure / units as f64,
        });
    }
    Ok(out)
}

/// Monthly interest rates, as fractions, keyed by (year, month).
#[derive(Debug, Clone, Default)]
pub struct DiscountSeries {
    rates: BTreeMap<(i32, u32), f64>,
}

impl DiscountSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, year: i32, month: u32, rate: f64) -> Result<(), PanelError> {
        if rate <= -1.0 {
            return Err(PanelError::InvalidRate {
                month: format!("{year:04}-{month:02}"),
                rate,
            });
        }
        self.rates.insert((year, month), rate);
        Ok(())
    }

    pub fn rate(&self, year: i32, month: u32) -> Option<f64> {
        self.rates.get(&(year, month)).copied()
    }

    /// Cumulative discount factor Π 1/(1+r_m) over months from `anchor`
    /// (exclusive) up to `target` (exclusive). The anchor month itself is
    /// undiscounted.
    pub fn factor(&self, anchor: NaiveDate, target: NaiveDate) -> Result<f64, PanelError> {
        let mut factor = 1.0;
        let (mut y, mut m) = (anchor.year(), anchor.month());
        let (ty, tm) = (target.year(), target.month());
        while (y, m) < (ty, tm) {
            let r = self
                .rate(y, m)
                .ok_or_else(|| PanelError::MissingRate(format!("{y:04}-{m:02}")))?;
            factor /= 1.0 + r;
            m += 1;
            if m > 12 {
                m = 1;
                y += 1;
            }
        }
        Ok(factor)
    }
}

/// Rescale all prices and expenditures to present-value terms relative to
/// `anchor`. Identity when every rate is zero.
pub fn to_present_value(
    panel: &HouseholdPanel,
    series: &DiscountSeries,
    anchor: NaiveDate,
) -> Result<HouseholdPanel, PanelError> {
    let mut out = panel.clone();
    for period in &mut out.periods {
        let f = series.factor(anchor, period.mid_date)?;
        for g in &mut period.goods {
            g.price *= f;
        }
        for ip in &mut period.inactive_prices {
            ip.1 *= f;
        }
        period.expenditure *= f;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub min_periods: usize,
    /// Keep only events inside this window (inclusive).
    pub window: Option<(NaiveDate, NaiveDate)>,
    /// Skip present-value conversion.
    pub nominal: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            min_periods: DEFAULT_MIN_PERIODS,
            window: None,
            nominal: true,
        }
    }
}

#[derive(Debug, Default)]
pub struct IngestReport {
    pub panels: Vec<HouseholdPanel>,
    pub excluded: Vec<(String, ExclusionReason)>,
}

/// Group events by household, build periods, and optionally discount.
/// Households come out sorted by id.
pub fn ingest(
    events: &[PurchaseEvent],
    catalog: &GoodsCatalog,
    series: Option<&DiscountSeries>,
    opts: &IngestOptions,
) -> Result<IngestReport, PanelError> {
    let mut by_household: BTreeMap<&str, Vec<PurchaseEvent>> = BTreeMap::new();
    for e in events {
        if let Some((lo, hi)) = opts.window {
            if e.date < lo || e.date > hi {
                continue;
            }
        }
        by_household
            .entry(e.household_id.as_str())
            .or_default()
            .push(e.clone());
    }
    let anchor = match opts.window {
        Some((lo, _)) => Some(lo),
        None => events.iter().map(|e| e.date).min(),
    };
    let mut report = IngestReport::default();
    for (_, hh_events) in by_household {
        match build_periods(&hh_events, catalog, opts.min_periods)? {
            BuildOutcome::Panel(panel) => {
                let panel = if opts.nominal {
                    panel
                } else {
                    let series = series.ok_or_else(|| PanelError::MissingRate("any".into()))?;
                    to_present_value(&panel, series, anchor.unwrap())?
                };
                report.panels.push(panel);
            }
            BuildOutcome::Excluded {
                household_id,
                reason,
            } => report.excluded.push((household_id, reason)),
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// CSV schemas
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct PurchaseRow {
    household_id: String,
    date: String,
    good_id: String,
    units: u64,
    expenditure: f64,
}

pub fn read_purchases_csv<R: Read>(reader: R, path: &str) -> Result<Vec<PurchaseEvent>, PanelError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<PurchaseRow>().enumerate() {
        let line = i as u64 + 2; // header is line 1
        let row = row.map_err(|e| PanelError::Malformed {
            path: path.to_string(),
            line,
            msg: e.to_string(),
        })?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| {
            PanelError::Malformed {
                path: path.to_string(),
                line,
                msg: format!("bad date '{}': {e}", row.date),
            }
        })?;
        if !row.expenditure.is_finite() || row.expenditure < 0.0 {
            return Err(PanelError::Malformed {
                path: path.to_string(),
                line,
                msg: format!("negative or non-finite expenditure {}", row.expenditure),
            });
        }
        out.push(PurchaseEvent {
            household_id: row.household_id,
            date,
            good_id: row.good_id,
            units: row.units,
            expenditure: row.expenditure,
        });
    }
    Ok(out)
}

pub fn read_purchases_file(path: &Path) -> Result<Vec<PurchaseEvent>, PanelError> {
    let file = std::fs::File::open(path).map_err(|e| PanelError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_purchases_csv(file, &path.display().to_string())
}

/// Characteristics table: good_id column followed by one named attribute
/// column per characteristic. Returns the catalog, attribute names, and the
/// J×K attribute matrix.
pub fn read_characteristics_csv<R: Read>(
    reader: R,
    path: &str,
) -> Result<(GoodsCatalog, Vec<String>, DMatrix<f64>), PanelError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| PanelError::Malformed {
            path: path.to_string(),
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    if headers.len() < 2 || headers.get(0) != Some("good_id") {
        return Err(PanelError::Malformed {
            path: path.to_string(),
            line: 1,
            msg: "expected header starting with good_id".into(),
        });
    }
    let attr_names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut ids = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| PanelError::Malformed {
            path: path.to_string(),
            line,
            msg: e.to_string(),
        })?;
        if rec.len() != attr_names.len() + 1 {
            return Err(PanelError::Malformed {
                path: path.to_string(),
                line,
                msg: format!("expected {} fields, got {}", attr_names.len() + 1, rec.len()),
            });
        }
        ids.push(rec[0].to_string());
        let mut row = Vec::with_capacity(attr_names.len());
        for v in rec.iter().skip(1) {
            let x: f64 = v.trim().parse().map_err(|e| PanelError::Malformed {
                path: path.to_string(),
                line,
                msg: format!("bad attribute value '{v}': {e}"),
            })?;
            row.push(x);
        }
        values.push(row);
    }
    let k = ids.len();
    let j = attr_names.len();
    let a = DMatrix::from_fn(j, k, |r, c| values[c][r]);
    Ok((GoodsCatalog::new(ids), attr_names, a))
}

pub fn read_characteristics_file(
    path: &Path,
) -> Result<(GoodsCatalog, Vec<String>, DMatrix<f64>), PanelError> {
    let file = std::fs::File::open(path).map_err(|e| PanelError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_characteristics_csv(file, &path.display().to_string())
}

/// rates.csv: month (YYYY-MM), rate (decimal fraction).
pub fn read_rates_csv<R: Read>(reader: R, path: &str) -> Result<DiscountSeries, PanelError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut series = DiscountSeries::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| PanelError::Malformed {
            path: path.to_string(),
            line,
            msg: e.to_string(),
        })?;
        let month_str = rec.get(0).unwrap_or("").trim().to_string();
        let rate: f64 = rec
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| PanelError::Malformed {
                path: path.to_string(),
                line,
                msg: format!("bad rate: {e}"),
            })?;
        let parts: Vec<&str> = month_str.split('-').collect();
        let (y, m) = match (
            parts.first().and_then(|s| s.parse::<i32>().ok()),
            parts.get(1).and_then(|s| s.parse::<u32>().ok()),
        ) {
            (Some(y), Some(m)) if parts.len() == 2 && (1..=12).contains(&m) => (y, m),
            _ => {
                return Err(PanelError::Malformed {
                    path: path.to_string(),
                    line,
                    msg: format!("bad month '{month_str}', expected YYYY-MM"),
                })
            }
        };
        series.insert(y, m, rate)?;
    }
    Ok(series)
}

pub fn read_rates_file(path: &Path) -> Result<DiscountSeries, PanelError> {
    let file = std::fs::File::open(path).map_err(|e| PanelError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_rates_csv(file, &path.display().to_string())
}

pub fn write_purchases_csv<W: std::io::Write>(
    events: &[PurchaseEvent],
    writer: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["household_id", "date", "good_id", "units", "expenditure"])?;
    for e in events {
        w.write_record([
            e.household_id.as_str(),
            &e.date.format("%Y-%m-%d").to_string(),
            e.good_id.as_str(),
            &e.units.to_string(),
            &format!("{}", e.expenditure),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_characteristics_csv<W: std::io::Write>(
    catalog: &GoodsCatalog,
    attr_names: &[String],
    a: &DMatrix<f64>,
    writer: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["good_id".to_string()];
    header.extend(attr_names.iter().cloned());
    w.write_record(&header)?;
    for k in 0..catalog.len() {
        let mut rec = vec![catalog.id(k).to_string()];
        for j in 0..a.nrows() {
            rec.push(format!("{}", a[(j, k)]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
