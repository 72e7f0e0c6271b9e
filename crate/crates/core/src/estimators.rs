//! Point estimators of the extreme value index.
//!
//! The censored estimators are EKM integrals of `log` and `log²`. The
//! benchmark estimators divide a classical (censoring-blind) estimator
//! computed on the observed `Z` by the uncensored fraction `p̂` of the top
//! `k`; this is the usual adaptation in the censored-extremes literature
//! and is provided for comparison only.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{confidence_interval, plugin_variance};
use crate::censored_data::{SortedCensoredSample, TailView};
use crate::ekm::{ekm_weights, weighted_sum};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, fmt_opt};

/// Radius of the neighbourhood of zero classified as Gumbel.
pub const DEFAULT_MDA_RADIUS: f64 = 0.2;

/// Tolerance on `M2 − M1²` below which the moment estimator is undefined.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorId {
    HillCensored,
    MomentCensored,
    HillBenchmark,
    MomentBenchmark,
    MomentUncensored,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 5] = [
        EstimatorId::HillCensored,
        EstimatorId::MomentCensored,
        EstimatorId::HillBenchmark,
        EstimatorId::MomentBenchmark,
        EstimatorId::MomentUncensored,
    ];

    /// Identifier used on the command line, e.g. `moment-censored`.
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorId::HillCensored => "hill-censored",
            EstimatorId::MomentCensored => "moment-censored",
            EstimatorId::HillBenchmark => "hill-benchmark",
            EstimatorId::MomentBenchmark => "moment-benchmark",
            EstimatorId::MomentUncensored => "moment-uncensored",
        }
    }

    /// Whether the estimator targets `γ_F` only when it is positive.
    pub fn is_hill_type(&self) -> bool {
        matches!(self, EstimatorId::HillCensored | EstimatorId::HillBenchmark)
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        EstimatorId::ALL
            .into_iter()
            .find(|id| id.as_str() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator `{s}`")))
    }
}

/// Max-domain of attraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mda {
    Frechet,
    Gumbel,
    Weibull,
}

impl fmt::Display for Mda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mda::Frechet => "frechet",
            Mda::Gumbel => "gumbel",
            Mda::Weibull => "weibull",
        })
    }
}

/// Confidence interval `[lo, hi]` at the given level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EviEstimate {
    pub gamma_hat: f64,
    pub k: usize,
    pub n: usize,
    pub estimator_id: EstimatorId,
    pub normalized: bool,
    pub variance_hat: Option<f64>,
    pub ci: Option<Interval>,
    pub mda_label: Option<Mda>,
}

impl EviEstimate {
    fn new(gamma_hat: f64, view: &TailView, estimator_id: EstimatorId, normalized: bool) -> Self {
        Self {
            gamma_hat,
            k: view.k(),
            n: view.n(),
            estimator_id,
            normalized,
            variance_hat: None,
            ci: None,
            mda_label: Some(classify_mda(gamma_hat, DEFAULT_MDA_RADIUS)),
        }
    }

    /// Attaches a plug-in variance and the matching normal interval.
    pub fn with_variance(mut self, variance: f64, level: f64) -> Result<Self> {
        let (lo, hi) = confidence_interval(self.gamma_hat, self.k, variance, level)?;
        self.variance_hat = Some(variance);
        self.ci = Some(Interval { lo, hi, level });
        Ok(self)
    }
}

fn degenerate() -> Error {
    Error::Degenerate("every observation in the top k is censored".into())
}

/// `S_{k,n}(log^r)`, divided by `S_{k,n}(1)` if `normalized`.
pub fn log_moment(view: &TailView, r: u32, normalized: bool) -> Result<f64> {
    if r == 0 {
        return Err(Error::InvalidParameter("log-moment order must be >= 1".into()));
    }
    let w = ekm_weights(view);
    if w.total_mass() <= 0.0 {
        return Err(degenerate());
    }
    let s = weighted_sum(view, &w, |x| x.ln().powi(r as i32))?;
    Ok(if normalized { s / w.total_mass() } else { s })
}

/// Censored Hill estimator `S_{k,n}(log)`.
pub fn hill_censored(view: &TailView, normalized: bool) -> Result<EviEstimate> {
    let g = log_moment(view, 1, normalized)?;
    Ok(EviEstimate::new(g, view, EstimatorId::HillCensored, normalized))
}

/// `M1 + 1 − ½ (1 − M1²/M2)^{-1}`.
pub fn moment_from_log_moments(m1: f64, m2: f64) -> Result<f64> {
    let gap = m2 - m1 * m1;
    if !(gap > SINGULAR_TOL) {
        return Err(Error::SingularMoments { gap });
    }
    Ok(m1 + 1.0 - 0.5 / (1.0 - m1 * m1 / m2))
}

/// Censored moment estimator `g_{k,n}`.
pub fn moment_censored(view: &TailView, normalized: bool) -> Result<EviEstimate> {
    let w = ekm_weights(view);
    if w.total_mass() <= 0.0 {
        return Err(degenerate());
    }
    let scale = if normalized { w.total_mass() } else { 1.0 };
    let m1 = weighted_sum(view, &w, f64::ln)? / scale;
    let m2 = weighted_sum(view, &w, |x| x.ln().powi(2))? / scale;
    let g = moment_from_log_moments(m1, m2)?;
    Ok(EviEstimate::new(g, view, EstimatorId::MomentCensored, normalized))
}

/// `(1/k) Σ θ(r_i)`.
pub fn residual_estimator<F: Fn(f64) -> f64>(values: &[f64], theta: F) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("no values".into()));
    }
    let mut acc = 0.0;
    for &x in values {
        let v = theta(x);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("theta({x}) = {v} is not finite")));
        }
        acc += v;
    }
    Ok(acc / values.len() as f64)
}

/// Classical Hill estimator of the given ratios.
pub fn hill_uncensored(values: &[f64]) -> Result<f64> {
    residual_estimator(values, f64::ln)
}

/// Classical moment estimator of the given ratios.
pub fn moment_uncensored(values: &[f64]) -> Result<f64> {
    let m1 = residual_estimator(values, f64::ln)?;
    let m2 = residual_estimator(values, |x| x.ln().powi(2))?;
    moment_from_log_moments(m1, m2)
}

fn p_hat(view: &TailView) -> Result<f64> {
    let p = view.uncensored_fraction();
    if p > 0.0 {
        Ok(p)
    } else {
        Err(Error::Degenerate("no uncensored observation in the top k (p_hat = 0)".into()))
    }
}

/// Classical Hill of the ratios divided by `p̂`.
pub fn benchmark_hill(view: &TailView) -> Result<EviEstimate> {
    let p = p_hat(view)?;
    let g = hill_uncensored(view.ratios())? / p;
    Ok(EviEstimate::new(g, view, EstimatorId::HillBenchmark, false))
}

/// Classical moment estimator of the ratios divided by `p̂`.
pub fn benchmark_moment(view: &TailView) -> Result<EviEstimate> {
    let p = p_hat(view)?;
    let g = moment_uncensored(view.ratios())? / p;
    Ok(EviEstimate::new(g, view, EstimatorId::MomentBenchmark, false))
}

/// Dispatches on the estimator id. `normalized` only affects the censored
/// estimators.
pub fn estimate(view: &TailView, id: EstimatorId, normalized: bool) -> Result<EviEstimate> {
    match id {
        EstimatorId::HillCensored => hill_censored(view, normalized),
        EstimatorId::MomentCensored => moment_censored(view, normalized),
        EstimatorId::HillBenchmark => benchmark_hill(view),
        EstimatorId::MomentBenchmark => benchmark_moment(view),
        EstimatorId::MomentUncensored => {
            let g = moment_uncensored(view.ratios())?;
            Ok(EviEstimate::new(g, view, EstimatorId::MomentUncensored, false))
        }
    }
}

/// One row of an estimate-versus-`k` table.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub k: usize,
    pub threshold: f64,
    pub p_hat: f64,
    pub gamma_hat: Option<f64>,
    pub variance_hat: Option<f64>,
    pub ci: Option<Interval>,
    /// Why a numeric field is empty.
    pub note: Option<String>,
}

/// Evaluates estimator `id` at every `k` of `ks`. With `ci_level`, plug-in
/// variances and intervals are attached where the asymptotic guards allow.
/// Estimation failures are recorded in the row note; an out-of-range `k` is
/// an error.
pub fn estimate_path(
    sorted: &SortedCensoredSample,
    id: EstimatorId,
    normalized: bool,
    ks: &[usize],
    ci_level: Option<f64>,
) -> Result<Vec<PathRow>> {
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let view = sorted.top_k_view(k)?;
        let mut row = PathRow {
            k,
            threshold: view.threshold(),
            p_hat: view.uncensored_fraction(),
            gamma_hat: None,
            variance_hat: None,
            ci: None,
            note: None,
        };
        match estimate(&view, id, normalized) {
            Ok(e) => {
                row.gamma_hat = Some(e.gamma_hat);
                if let Some(level) = ci_level {
                    match plugin_variance(&view, &e).and_then(|v| e.with_variance(v, level)) {
                        Ok(e) => {
                            row.variance_hat = e.variance_hat;
                            row.ci = e.ci;
                        }
                        Err(err) => row.note = Some(err.to_string()),
                    }
                }
            }
            Err(err) => row.note = Some(err.to_string()),
        }
        rows.push(row);
    }
    Ok(rows)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `k,threshold,gamma_hat,p_hat[,var_hat,ci_lo,ci_hi],note`.
pub fn write_path_csv<W: Write>(rows: &[PathRow], with_ci: bool, mut out: W) -> Result<()> {
    if with_ci {
        writeln!(out, "k,threshold,gamma_hat,p_hat,var_hat,ci_lo,ci_hi,note")?;
    } else {
        writeln!(out, "k,threshold,gamma_hat,p_hat,note")?;
    }
    for r in rows {
        write!(out, "{},{},{},{}", r.k, fmt_f64(r.threshold), fmt_opt(r.gamma_hat), fmt_f64(r.p_hat))?;
        if with_ci {
            write!(
                out,
                ",{},{},{}",
                fmt_opt(r.variance_hat),
                fmt_opt(r.ci.map(|c| c.lo)),
                fmt_opt(r.ci.map(|c| c.hi))
            )?;
        }
        writeln!(out, ",{}", csv_field(r.note.as_deref().unwrap_or("")))?;
    }
    Ok(())
}

/// Gumbel inside `(−radius, radius)`, Fréchet at or above `radius`,
/// Weibull at or below `−radius`.
pub fn classify_mda(gamma_hat: f64, radius: f64) -> Mda {
    if gamma_hat >= radius {
        Mda::Frechet
    } else if gamma_hat <= -radius {
        Mda::Weibull
    } else {
        Mda::Gumbel
    }
}
