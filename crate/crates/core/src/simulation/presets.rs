//! Built-in study designs: log-moment MSE (`fig1`), max-domain
//! classification (`fig2`) and interval coverage (`fig3`).

use std::fmt;
use std::str::FromStr;

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::estimators::EstimatorId;

use super::{ExperimentSpec, KGrid, Metric, SimEstimator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fig1" => Ok(Preset::Fig1),
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected fig1, fig2 or fig3)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
        })
    }
}

/// Desk scale: 200 replications at `n = 10³`. Full scale: 1000
/// replications at `n ∈ {10³, 10⁴}` on a finer grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub spec: ExperimentSpec,
}

fn dist(s: &str) -> Distribution {
    s.parse().expect("preset distributions are valid")
}

/// Censoring law giving an asymptotic non-censoring fraction `p` in the tail
/// of a Fréchet or Burr event law with index `gamma_f`:
/// `γ_G = p γ_F / (1 − p)`.
pub fn calibrated_censoring(event: &Distribution, p: f64) -> Result<Distribution> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    let gamma_f = event.tail_profile().gamma;
    let gamma_g = p * gamma_f / (1.0 - p);
    match event.family() {
        crate::distributions::Family::Frechet { .. } => Distribution::frechet(1.0 / gamma_g),
        crate::distributions::Family::Burr { .. } => {
            let c = (1.0 / gamma_g).sqrt();
            Distribution::burr(c, c)
        }
        _ => Err(Error::InvalidParameter(format!("no calibrated censoring for {event}"))),
    }
}

fn sizes(scale: Scale) -> (usize, Vec<usize>) {
    match scale {
        Scale::Desk => (200, vec![1000]),
        Scale::Full => (1000, vec![1000, 10_000]),
    }
}

/// `k ∈ {n/100, 2n/100, …, n/2}` at desk scale, every `n/500` at full scale.
fn fraction_grid(n: usize, scale: Scale) -> KGrid {
    let step = match scale {
        Scale::Desk => n / 100,
        Scale::Full => n / 500,
    }
    .max(1);
    KGrid::range(step, n / 2, step)
}

fn base(f: Distribution, g: Distribution, n: usize, reps: usize, k_grid: KGrid) -> ExperimentSpec {
    ExperimentSpec {
        f_dist: f,
        g_dist: g,
        n,
        reps,
        k_grid,
        estimators: Vec::new(),
        metrics: Vec::new(),
        target_gamma: None,
        ci_level: 0.95,
        master_seed: crate::DEFAULT_SEED,
        classification_radius: crate::estimators::DEFAULT_MDA_RADIUS,
        asymptotic_variance: None,
        plugin_variance_override: None,
    }
}

fn moment(normalized: bool) -> SimEstimator {
    SimEstimator::Evi { id: EstimatorId::MomentCensored, normalized }
}

/// All scenarios of a preset. `seed` replaces the default master seed.
pub fn preset(which: Preset, scale: Scale, seed: u64) -> Vec<Scenario> {
    let (reps, ns) = sizes(scale);
    let mut out = Vec::new();
    for &n in &ns {
        let suffix = if ns.len() > 1 { format!("-n{n}") } else { String::new() };
        match which {
            Preset::Fig1 => {
                let k_grid = match scale {
                    Scale::Desk => KGrid::range(5, n / 2, 5),
                    Scale::Full => KGrid::range(5, n / 2, 1),
                };
                let estimators: Vec<SimEstimator> = (1..=3)
                    .flat_map(|r| {
                        [
                            SimEstimator::LogMoment { r, normalized: true },
                            SimEstimator::KmPlugin { r },
                            SimEstimator::BenchmarkPlugin { r },
                        ]
                    })
                    .collect();
                for (family, event) in
                    [("frechet", dist("frechet(2)")), ("burr", dist("burr(1.4142135623730951,1.4142135623730951)"))]
                {
                    for p in [0.6, 0.75, 0.9] {
                        let g = calibrated_censoring(&event, p).expect("calibration of preset laws");
                        let mut spec = base(event, g, n, reps, k_grid.clone());
                        spec.estimators = estimators.clone();
                        spec.metrics = vec![Metric::Mse];
                        spec.master_seed = seed;
                        out.push(Scenario { name: format!("{family}-p{}{suffix}", (p * 100.0).round()), spec });
                    }
                }
            }
            Preset::Fig2 => {
                for (name, f, g) in [
                    ("a-beta", "beta(1,2)", "beta(1,2)"),
                    (
                        "b-burr",
                        "burr(1.4142135623730951,1.4142135623730951)",
                        "burr(0.5773502691896258,0.5773502691896258)",
                    ),
                    ("c-weibull", "weibull(1,1)", "weibull(0.5,1)"),
                ] {
                    let mut spec = base(dist(f), dist(g), n, reps, fraction_grid(n, scale));
                    spec.estimators =
                        vec![moment(true), SimEstimator::Evi { id: EstimatorId::MomentBenchmark, normalized: false }];
                    spec.metrics = vec![Metric::Mse, Metric::Classification];
                    spec.master_seed = seed;
                    out.push(Scenario { name: format!("{name}{suffix}"), spec });
                }
            }
            Preset::Fig3 => {
                for (name, f, g) in [
                    ("a-beta", "beta(1,2)", "beta(1,2)"),
                    ("b-pareto", "pareto(2)", "pareto(0.6666666666666666)"),
                    ("c-exp", "exp(6)", "exp(1)"),
                ] {
                    let mut spec = base(dist(f), dist(g), n, reps, fraction_grid(n, scale));
                    spec.estimators = vec![moment(true)];
                    spec.metrics = vec![Metric::Coverage, Metric::SdGap, Metric::Bias];
                    spec.master_seed = seed;
                    out.push(Scenario { name: format!("{name}{suffix}"), spec });
                }
            }
        }
    }
    out
}
