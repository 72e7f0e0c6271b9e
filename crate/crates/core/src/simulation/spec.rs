use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorId, DEFAULT_MDA_RADIUS};

/// An estimator as it appears in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimEstimator {
    /// `S_{k,n}(log^r)`, optionally divided by `S_{k,n}(1)`; targets `r! γ^r`.
    LogMoment {
        r: u32,
        #[serde(default = "yes")]
        normalized: bool,
    },
    /// `r! (γ̂^{c,Hill}/S_{k,n}(1))^r`; targets `r! γ^r`.
    KmPlugin { r: u32 },
    /// `r! (γ̂^{B,Hill})^r`; targets `r! γ^r`.
    BenchmarkPlugin { r: u32 },
    /// An extreme value index estimator; targets `γ`.
    Evi {
        id: EstimatorId,
        #[serde(default = "yes")]
        normalized: bool,
    },
    /// Always returns `value`; targets `γ`.
    Constant { value: f64 },
}

fn yes() -> bool {
    true
}

impl SimEstimator {
    /// Label used in result tables.
    pub fn label(&self) -> String {
        let raw = |normalized: bool| if normalized { "" } else { "-raw" };
        match *self {
            SimEstimator::LogMoment { r, normalized } => format!("m{r}{}", raw(normalized)),
            SimEstimator::KmPlugin { r } => format!("m-km{r}"),
            SimEstimator::BenchmarkPlugin { r } => format!("m-b{r}"),
            SimEstimator::Evi { id, normalized } => match id {
                EstimatorId::HillCensored | EstimatorId::MomentCensored => format!("{id}{}", raw(normalized)),
                _ => id.to_string(),
            },
            SimEstimator::Constant { value } => format!("constant({value})"),
        }
    }

    /// Order of the log-moment target, if any.
    pub(crate) fn moment_order(&self) -> Option<u32> {
        match *self {
            SimEstimator::LogMoment { r, .. } | SimEstimator::KmPlugin { r } | SimEstimator::BenchmarkPlugin { r } => {
                Some(r)
            }
            _ => None,
        }
    }

    /// `r! γ^r` for log-moment type estimators, `γ` otherwise.
    pub fn target(&self, gamma: f64) -> f64 {
        match self.moment_order() {
            Some(r) => (1..=r).map(f64::from).product::<f64>() * gamma.powi(r as i32),
            None => gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mse,
    Bias,
    Classification,
    Coverage,
    SdGap,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Mse, Metric::Bias, Metric::Classification, Metric::Coverage, Metric::SdGap];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Bias => "bias",
            Metric::Classification => "classification",
            Metric::Coverage => "coverage",
            Metric::SdGap => "sd_gap",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grid of thresholds: an explicit list or a range literal `a:b[:step]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "Vec<usize>")]
pub struct KGrid(Vec<usize>);

#[derive(Deserialize)]
#[serde(untagged)]
enum GridRepr {
    List(Vec<usize>),
    Range(String),
}

impl TryFrom<GridRepr> for KGrid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        match r {
            GridRepr::List(v) => Ok(KGrid(v)),
            GridRepr::Range(s) => s.parse(),
        }
    }
}

impl From<KGrid> for Vec<usize> {
    fn from(g: KGrid) -> Self {
        g.0
    }
}

impl KGrid {
    pub fn new(ks: Vec<usize>) -> Self {
        KGrid(ks)
    }

    pub fn range(from: usize, to: usize, step: usize) -> Self {
        KGrid((from..=to).step_by(step.max(1)).collect())
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    /// Checks that every entry lies in `[1, n − 1]` and that the grid is
    /// strictly increasing.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Config("k grid is empty".into()));
        }
        if self.0.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("k grid must be strictly increasing".into()));
        }
        if self.0[0] < 1 || *self.0.last().expect("non-empty") >= n {
            return Err(Error::Config(format!("k grid entries must lie in [1, {}]", n.saturating_sub(1))));
        }
        Ok(())
    }
}

impl FromStr for KGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| {
            p.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad k grid `{s}`: `{p}` is not a count")))
        };
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(Error::Config(format!("bad k grid `{s}`: expected a:b or a:b:step"))),
        };
        if step == 0 || a > b {
            return Err(Error::Config(format!("bad k grid `{s}`: need a <= b and step >= 1")));
        }
        Ok(KGrid::range(a, b, step))
    }
}

fn default_level() -> f64 {
    0.95
}

fn default_radius() -> f64 {
    DEFAULT_MDA_RADIUS
}

fn default_seed() -> u64 {
    crate::DEFAULT_SEED
}

/// A declarative Monte-Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub f_dist: Distribution,
    pub g_dist: Distribution,
    pub n: usize,
    pub reps: usize,
    pub k_grid: KGrid,
    pub estimators: Vec<SimEstimator>,
    pub metrics: Vec<Metric>,
    /// True `γ_F`; taken from `f_dist` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_gamma: Option<f64>,
    #[serde(default = "default_level")]
    pub ci_level: f64,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_radius")]
    pub classification_radius: f64,
    /// Asymptotic variance used by `sd_gap`; derived from the true
    /// parameters when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotic_variance: Option<f64>,
    /// Replaces the plug-in variance of the coverage intervals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plugin_variance_override: Option<f64>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs always serialise")
    }

    pub fn gamma(&self) -> f64 {
        self.target_gamma.unwrap_or_else(|| self.f_dist.tail_profile().gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        if self.reps < 1 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        self.k_grid.validate(self.n)?;
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("no metrics".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(format!("ci_level must lie in (0, 1), got {}", self.ci_level)));
        }
        if !(self.classification_radius > 0.0) {
            return Err(Error::Config("classification_radius must be > 0".into()));
        }
        if !self.gamma().is_finite() {
            return Err(Error::Config("target gamma must be finite".into()));
        }
        for e in &self.estimators {
            if e.moment_order() == Some(0) {
                return Err(Error::Config(format!("{}: log-moment order must be >= 1", e.label())));
            }
        }
        let mut labels: Vec<String> = self.estimators.iter().map(SimEstimator::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("estimators must be distinct".into()));
        }
        for v in [self.asymptotic_variance, self.plugin_variance_override].into_iter().flatten() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("variances must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// 64-bit FNV-1a hash of the canonical JSON form.
    pub fn hash(&self) -> u64 {
        let json = serde_json::to_string(self).expect("specs always serialise");
        json.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100000001b3))
    }
}
