//! Paired model comparisons and table emission.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::TestOutcome;
use crate::restrict::{RestrictivenessRow, RestrictivenessSummary};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no outcomes to report")]
    NoData,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("model '{0}' not present in outcomes")]
    UnknownModel(String),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// CDF of Binomial(n, ½) at k. Exact for n ≤ 53 (binomial coefficients and
/// 2^n stay within integer double precision); log-space summation beyond.
fn binom_half_cdf(n: u64, k: u64) -> f64 {
    if k >= n {
        return 1.0;
    }
    if n <= 53 {
        let mut c: u128 = 1;
        let mut sum: u128 = 1;
        for i in 1..=k as u128 {
            c = c * (n as u128 - i + 1) / i;
            sum += c;
        }
        sum as f64 / 2f64.powi(n as i32)
    } else {
        let ln2n = n as f64 * std::f64::consts::LN_2;
        let mut lnc = 0.0f64;
        let mut sum = 0.0f64;
        for i in 1..=k {
            lnc += ((n - i + 1) as f64).ln() - (i as f64).ln();
            sum += (lnc - ln2n).exp();
        }
        (sum + (-ln2n).exp()).min(1.0)
    }
}

/// Two-sided exact McNemar (binomial) p-value from the switcher counts:
/// p = min(1, 2·P[Bin(n, ½) ≤ min(n01, n10)]), and 1 when there are no
/// switchers.
pub fn mcnemar_exact(n01: u64, n10: u64) -> f64 {
    let n = n01 + n10;
    if n == 0 {
        return 1.0;
    }
    (2.0 * binom_half_cdf(n, n01.min(n10))).min(1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedComparison {
    pub model0: String,
    pub model1: String,
    pub pass0_rate: f64,
    pub pass1_rate: f64,
    pub n_01: u64,
    pub n_10: u64,
    pub switchers: u64,
    pub p_value: f64,
}

/// Paired comparison of two models over the same households. `n_01` counts
/// households failing the baseline but passing the alternative.
pub fn compare_models(
    outcomes: &[TestOutcome],
    baseline: &str,
    alternative: &str,
) -> Result<PairedComparison, ReportError> {
    let collect = |model: &str| -> BTreeMap<&str, bool> {
        outcomes
            .iter()
            .filter(|o| o.model_id == model)
            .map(|o| (o.household_id.as_str(), o.pass))
            .collect()
    };
    let base = collect(baseline);
    let alt = collect(alternative);
    if base.is_empty() {
        return Err(ReportError::UnknownModel(baseline.to_string()));
    }
    if alt.is_empty() {
        return Err(ReportError::UnknownModel(alternative.to_string()));
    }
    let mut n = 0u64;
    let (mut pass0, mut pass1, mut n01, mut n10) = (0u64, 0u64, 0u64, 0u64);
    for (hh, &p0) in &base {
        let Some(&p1) = alt.get(hh) else { continue };
        n += 1;
        pass0 += p0 as u64;
        pass1 += p1 as u64;
        match (p0, p1) {
            (false, true) => n01 += 1,
            (true, false) => n10 += 1,
            _ => {}
        }
    }
    if n == 0 {
        return Err(ReportError::NoData);
    }
    Ok(PairedComparison {
        model0: baseline.to_string(),
        model1: alternative.to_string(),
        pass0_rate: pass0 as f64 / n as f64,
        pass1_rate: pass1 as f64 / n as f64,
        n_01: n01,
        n_10: n10,
        switchers: n01 + n10,
        p_value: mcnemar_exact(n01, n10),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassRateRow {
    pub model_id: String,
    pub n_pass: usize,
    pub n_total: usize,
    pub pass_rate_pct: f64,
}

impl PassRateRow {
    /// Percentage with two decimals (ties round half to even).
    pub fn formatted_pct(&self) -> String {
        format!("{:.2}", self.pass_rate_pct)
    }
}

/// Pass counts and rates per model, in first-seen model order.
pub fn pass_rate_table(outcomes: &[TestOutcome]) -> Result<Vec<PassRateRow>, ReportError> {
    if outcomes.is_empty() {
        return Err(ReportError::NoData);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for o in outcomes {
        if !counts.contains_key(o.model_id.as_str()) {
            order.push(&o.model_id);
        }
        let entry = counts.entry(&o.model_id).or_insert((0, 0));
        entry.0 += o.pass as usize;
        entry.1 += 1;
    }
    Ok(order
        .into_iter()
        .map(|m| {
            let (n_pass, n_total) = counts[m];
            PassRateRow {
                model_id: m.to_string(),
                n_pass,
                n_total,
                pass_rate_pct: 100.0 * n_pass as f64 / n_total as f64,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// File emission (stable column order, deterministic content)
// ---------------------------------------------------------------------------

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_pass_rates_csv(rows: &[PassRateRow], path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("model_id,n_pass,n_total,pass_rate_pct\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.model_id,
            r.n_pass,
            r.n_total,
            r.formatted_pct()
        ));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn write_mcnemar_csv(rows: &[PairedComparison], path: &Path) -> Result<(), ReportError> {
    let mut out =
        String::from("model0,model1,pass0_pct,pass1_pct,delta_pp,n_01,n_10,switchers,p_value\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2},{},{},{},{}\n",
            r.model0,
            r.model1,
            100.0 * r.pass0_rate,
            100.0 * r.pass1_rate,
            100.0 * (r.pass0_rate - r.pass1_rate),
            r.n_01,
            r.n_10,
            r.switchers,
            r.p_value,
        ));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn write_restrictiveness_csv(
    rows: &[RestrictivenessRow],
    path: &Path,
) -> Result<(), ReportError> {
    let mut out = String::from(
        "household_id,model_id,d_obs,d_sim_mean,ccei_obs,ccei_sim_mean,q_dist,q_ccei,q_ccei_cond,n_draws,n_struct_feasible\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.household_id,
            r.model_id,
            r.d_obs,
            r.d_sim_mean,
            fmt_opt(r.ccei_obs),
            fmt_opt(r.ccei_sim_mean),
            r.q_dist,
            fmt_opt(r.q_ccei),
            fmt_opt(r.q_ccei_cond),
            r.n_draws,
            r.n_struct_feasible,
        ));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn write_restrictiveness_summary_csv(
    rows: &[RestrictivenessSummary],
    path: &Path,
) -> Result<(), ReportError> {
    let mut out = String::from(
        "model_id,n_households,d_obs_mean,d_sim_mean,ccei_obs_mean,ccei_sim_mean,q_dist_mean,pr_q_dist_lt_05,q_ccei_mean,pr_q_ccei_lt_05\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.model_id,
            r.n_households,
            r.d_obs_mean,
            r.d_sim_mean,
            fmt_opt(r.ccei_obs_mean),
            fmt_opt(r.ccei_sim_mean),
            r.q_dist_mean,
            r.pr_q_dist_lt_05,
            fmt_opt(r.q_ccei_mean),
            fmt_opt(r.pr_q_ccei_lt_05),
        ));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Per-household structural report: one row per (household, model) with the
/// per-date distances as a JSON array.
pub fn write_structural_csv(outcomes: &[TestOutcome], path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("household_id,model_id,nc_all_pass,mean_distance,distances\n");
    for o in outcomes {
        let distances = serde_json::to_string(&o.structural.distances).expect("serializable");
        out.push_str(&format!(
            "{},{},{},{},\"{}\"\n",
            o.household_id, o.model_id, o.nc_all_pass, o.mean_distance, distances
        ));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn write_outcomes_jsonl(outcomes: &[TestOutcome], path: &Path) -> Result<(), ReportError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    for o in outcomes {
        let line = serde_json::to_string(o).expect("outcome serializes");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_outcomes_jsonl(path: &Path) -> Result<Vec<TestOutcome>, ReportError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let outcome: TestOutcome =
            serde_json::from_str(&line).map_err(|e| ReportError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        out.push(outcome);
    }
    Ok(out)
}
