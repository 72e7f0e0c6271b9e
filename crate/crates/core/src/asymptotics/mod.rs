//! Limit laws of the censored estimators, plug-in confidence intervals and
//! oracles for the limit variance of EKM integrals.
//!
//! Formulas that involve `γ_G` are written in terms of `r = 1/γ_G` so that
//! the uncensored limits (`γ_G = ±∞`) are evaluated exactly.

mod limit_variance;
pub mod quadrature;

pub use limit_variance::{
    limit_covariance_quadrature, limit_variance_monte_carlo, limit_variance_quadrature, MonteCarloVariance,
};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::censored_data::TailView;
use crate::error::{Error, Result};
use crate::estimators::{classify_mda, EstimatorId, EviEstimate, Mda, DEFAULT_MDA_RADIUS};

/// Second-order parameters entering the asymptotic biases.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SecondOrderParams {
    /// `ρ ≤ 0`
    pub rho: f64,
    /// limit of `√k a(c_n)` (or its analogue in each case)
    pub lambda: f64,
    /// endpoint bias channel of the negative case
    pub lambda_hat: f64,
    /// second bias channel of the zero case
    pub lambda_tilde: f64,
    /// `ρ̃ ≤ 0` of the zero case
    pub rho_tilde: f64,
}

impl SecondOrderParams {
    pub fn with_lambda(lambda: f64, rho: f64) -> Self {
        Self { lambda, rho, ..Self::default() }
    }

    fn check(&self) -> Result<()> {
        if !(self.rho <= 0.0) || !(self.rho_tilde <= 0.0) {
            return Err(Error::Domain(format!(
                "second-order parameters must be <= 0, got rho = {}, rho_tilde = {}",
                self.rho, self.rho_tilde
            )));
        }
        Ok(())
    }
}

/// `√k (estimator − target) → N(bias, variance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLaw {
    pub bias: f64,
    pub variance: f64,
}

/// `log x` if `ρ = 0`, else `(x^ρ − 1)/ρ`.
pub fn h_rho(x: f64, rho: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return Err(Error::Domain(format!("h_rho needs x >= 1, got {x}")));
    }
    Ok(if rho == 0.0 { x.ln() } else { (rho * x.ln()).exp_m1() / rho })
}

/// `(1/ρ)((x^{γ+ρ} − 1)/(γ+ρ) − (x^γ − 1)/γ)` with its limits at `γ = 0`,
/// `γ + ρ = 0` and `ρ = 0`.
pub fn h_gamma_rho(x: f64, gamma: f64, rho: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return Err(Error::Domain(format!("H_gamma_rho needs x >= 1, got {x}")));
    }
    let l = x.ln();
    // (x^g − 1)/g with the log limit
    let e = |g: f64| if g == 0.0 { l } else { (g * l).exp_m1() / g };
    if rho == 0.0 {
        // d/dg of (x^g − 1)/g
        return Ok(if gamma == 0.0 { 0.5 * l * l } else { (x.powf(gamma) * l - e(gamma)) / gamma });
    }
    Ok((e(gamma + rho) - e(gamma)) / rho)
}

fn inv(gamma_g: f64) -> f64 {
    if gamma_g.is_infinite() {
        0.0
    } else {
        1.0 / gamma_g
    }
}

fn positive_guard(gamma_f: f64, gamma_g: f64) -> Result<f64> {
    if !(gamma_f > 0.0) {
        return Err(Error::Guard(format!("gamma_F must be > 0, got {gamma_f}")));
    }
    if !(gamma_g > gamma_f) {
        return Err(Error::Guard(format!("requires gamma_G > gamma_F, got gamma_F = {gamma_f}, gamma_G = {gamma_g}")));
    }
    Ok(inv(gamma_g))
}

/// Law of the censored Hill estimator.
pub fn hill_asymptotics(gamma_f: f64, gamma_g: f64, so: &SecondOrderParams) -> Result<AsymptoticLaw> {
    so.check()?;
    let r = positive_guard(gamma_f, gamma_g)?;
    Ok(AsymptoticLaw { bias: so.lambda / (1.0 - so.rho), variance: gamma_f * gamma_f / (1.0 - gamma_f * r) })
}

/// Law of the EKM cdf at `x0 > 1`.
pub fn ekm_cdf_asymptotics(x0: f64, gamma_f: f64, gamma_g: f64, so: &SecondOrderParams) -> Result<AsymptoticLaw> {
    so.check()?;
    if !(x0 > 1.0) {
        return Err(Error::Domain(format!("x0 must be > 1, got {x0}")));
    }
    if !(gamma_f > 0.0 && gamma_g > 0.0) {
        return Err(Error::Guard(format!("requires gamma_F > 0 and gamma_G > 0, got ({gamma_f}, {gamma_g})")));
    }
    let r = inv(gamma_g);
    let xa = x0.powf(1.0 / gamma_f);
    let bias = so.lambda * h_rho(xa, so.rho)? / (gamma_f * xa);
    let variance = (x0.powf(r) - 1.0 / xa) / (xa * (1.0 + gamma_f * r));
    Ok(AsymptoticLaw { bias, variance })
}

/// The three regimes of the censored moment estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentCase {
    /// `γ_G > γ_F > 0`
    Positive { gamma_f: f64, gamma_g: f64 },
    /// `γ_F = 0`, `α_F ∈ (1/2, 1]`, `α_G = 1 − α_F`
    Zero { alpha_f: f64 },
    /// `γ_F < 0`, `1/γ_F < 1/γ_G` (`γ_G = −∞` for no censoring)
    Negative { gamma_f: f64, gamma_g: f64 },
}

/// Law of the censored moment estimator.
pub fn moment_asymptotics(case: MomentCase, so: &SecondOrderParams) -> Result<AsymptoticLaw> {
    so.check()?;
    match case {
        MomentCase::Positive { gamma_f: g, gamma_g } => {
            let r = positive_guard(g, gamma_g)?;
            let rho = so.rho;
            let bias = so.lambda * (g - g * rho + rho) / (g * (1.0 - rho).powi(2));
            let q = 1.0 - g * r + r;
            let variance = (1.0 + g * g * q * q) / (1.0 - g * r).powi(3);
            Ok(AsymptoticLaw { bias, variance })
        }
        MomentCase::Zero { alpha_f } => {
            if !(alpha_f > 0.5 && alpha_f <= 1.0) {
                return Err(Error::Guard(format!("requires alpha_F in (1/2, 1], got {alpha_f}")));
            }
            let alpha_g = 1.0 - alpha_f;
            let rt = so.rho_tilde;
            let bias = so.lambda * (1.0 + alpha_f) / (alpha_f * alpha_f)
                + so.lambda_tilde * (1.0 - rt + alpha_f * rt) / (1.0 - rt).powi(2);
            let variance = alpha_f * (alpha_f * alpha_f + alpha_g * alpha_g) / (alpha_f - alpha_g).powi(3);
            Ok(AsymptoticLaw { bias, variance })
        }
        MomentCase::Negative { gamma_f, gamma_g } => {
            let (g, r) = negative_guard(gamma_f, gamma_g)?;
            Ok(AsymptoticLaw { bias: neg_bias(g, r, so), variance: neg_variance(g, r) })
        }
    }
}

fn negative_guard(gamma_f: f64, gamma_g: f64) -> Result<(f64, f64)> {
    if !(gamma_f < 0.0) {
        return Err(Error::Guard(format!("negative case requires gamma_F < 0, got {gamma_f}")));
    }
    let r = inv(gamma_g);
    if !(gamma_g < 0.0) || !(1.0 / gamma_f < r) {
        return Err(Error::Guard(format!(
            "negative case requires 1/gamma_F < 1/gamma_G < 0 (gamma_G < gamma_F), got gamma_F = {gamma_f}, gamma_G = {gamma_g}"
        )));
    }
    Ok((gamma_f, r))
}

/// `σ₁²` of the first scaled log-moment, negative case (`r = 1/γ_G`).
pub fn neg_sigma1_sq(g: f64, r: f64) -> f64 {
    (g * r + 1.0).powi(2) / ((1.0 - g).powi(2) * ((1.0 - 2.0 * g) - g * r))
}

/// `σ₂²` of the second scaled log-moment, negative case.
pub fn neg_sigma2_sq(g: f64, r: f64) -> f64 {
    let poly = 22.0 * g * g - 21.0 * g + 5.0 + 9.0 * g * g * r - 4.0 * g * r + g * g * r * r;
    let prod: f64 = (2..=4).map(|j| 1.0 - g * r - j as f64 * g).product();
    4.0 * (g * r + 1.0).powi(4) * poly / ((1.0 - g).powi(2) * (1.0 - 2.0 * g).powi(2) * prod)
}

/// `Σ₁₂`, negative case.
pub fn neg_sigma12(g: f64, r: f64) -> f64 {
    let prod: f64 = (2..=3).map(|j| 1.0 - g * r - j as f64 * g).product();
    2.0 * (g * r + 1.0).powi(3) * (2.0 - g * r - 4.0 * g) / ((1.0 - g).powi(2) * (1.0 - 2.0 * g) * prod)
}

/// Delta-method weight of the first moment, negative case.
pub fn neg_a1(g: f64, r: f64) -> f64 {
    -2.0 * (1.0 - g).powi(2) * (1.0 - 2.0 * g) / (g * r + 1.0)
}

/// Delta-method weight of the second moment, negative case.
pub fn neg_a2(g: f64, r: f64) -> f64 {
    (1.0 - g).powi(2) * (1.0 - 2.0 * g).powi(2) / (2.0 * (g * r + 1.0).powi(2))
}

fn neg_variance(g: f64, r: f64) -> f64 {
    let (a1, a2) = (neg_a1(g, r), neg_a2(g, r));
    a1 * a1 * neg_sigma1_sq(g, r) + 2.0 * a1 * a2 * neg_sigma12(g, r) + a2 * a2 * neg_sigma2_sq(g, r)
}

fn neg_bias(g: f64, r: f64, so: &SecondOrderParams) -> f64 {
    let rho = so.rho;
    let gamma_h = g / (1.0 + g * r);
    let one = (1.0 - g) * (1.0 - 2.0 * g) / (1.0 - g - rho)
        * ((2.0 - 3.0 * g - rho) / (1.0 - 2.0 * g - rho) - 2.0 / g
            + 1.0 / (gamma_h * (1.0 - g).powi(2) * (1.0 - 2.0 * g)));
    let two = (1.0 - g) * (1.0 - g - g * g) / (1.0 - 3.0 * g) - g / (2.0 * gamma_h * (1.0 - g) * (1.0 - 2.0 * g));
    so.lambda * one + so.lambda_hat * two
}

/// Joint law of the first two censored log-moments (positive case).
pub fn moment_pair_asymptotics(
    gamma_f: f64,
    gamma_g: f64,
    so: &SecondOrderParams,
) -> Result<([f64; 2], [[f64; 2]; 2])> {
    so.check()?;
    let r = positive_guard(gamma_f, gamma_g)?;
    let g = gamma_f;
    let rho = so.rho;
    let bias = [so.lambda / (1.0 - rho), 2.0 * so.lambda * g * (2.0 - rho) / (1.0 - rho).powi(2)];
    let d = 1.0 - g * r;
    let s11 = g * g / d;
    let s12 = 2.0 * g.powi(3) * (2.0 - g * r) / (d * d);
    let s22 = 4.0 * g.powi(4) * (5.0 - 4.0 * g * r + g * g * r * r) / d.powi(3);
    Ok((bias, [[s11, s12], [s12, s22]]))
}

/// `γ̂ ± z_{(1+level)/2} √(variance/k)`.
pub fn confidence_interval(gamma_hat: f64, k: usize, variance: f64, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("level must lie in (0, 1), got {level}")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::Domain(format!("variance must be finite and >= 0, got {variance}")));
    }
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + level));
    let half = z * (variance / k as f64).sqrt();
    Ok((gamma_hat - half, gamma_hat + half))
}

/// `1/γ̂_G` implied by `α̂_F = p̂` and `γ̂_F`: `(1 − p̂)/(p̂ γ̂_F)`.
fn implied_inverse_gamma_g(gamma_hat: f64, p: f64) -> f64 {
    (1.0 - p) / (p * gamma_hat)
}

fn gamma_g_from_inverse(r: f64) -> f64 {
    if r == 0.0 {
        f64::INFINITY
    } else {
        1.0 / r
    }
}

/// Plug-in asymptotic variance for a censored estimate, with every
/// second-order bias channel set to zero. The non-censoring proportion is
/// estimated by the uncensored fraction of the view; moment estimates are
/// routed to the positive/zero/negative case by [`classify_mda`].
pub fn plugin_variance(view: &TailView, estimate: &EviEstimate) -> Result<f64> {
    let p = view.uncensored_fraction();
    if !(p > 0.0) {
        return Err(Error::Degenerate("no uncensored observation in the top k".into()));
    }
    let g = estimate.gamma_hat;
    let so = SecondOrderParams::default();
    let law = match estimate.estimator_id {
        EstimatorId::HillCensored => {
            let r = implied_inverse_gamma_g(g, p);
            hill_asymptotics(g, gamma_g_from_inverse(r), &so)?
        }
        EstimatorId::MomentCensored => {
            let case = match classify_mda(g, DEFAULT_MDA_RADIUS) {
                Mda::Frechet => {
                    MomentCase::Positive { gamma_f: g, gamma_g: gamma_g_from_inverse(implied_inverse_gamma_g(g, p)) }
                }
                Mda::Gumbel => MomentCase::Zero { alpha_f: p },
                Mda::Weibull => MomentCase::Negative {
                    gamma_f: g,
                    gamma_g: if p == 1.0 { f64::NEG_INFINITY } else { 1.0 / implied_inverse_gamma_g(g, p) },
                },
            };
            moment_asymptotics(case, &so)?
        }
        other => {
            return Err(Error::InvalidParameter(format!("no plug-in variance is defined for {other}")));
        }
    };
    Ok(law.variance)
}
