//! Variance of the limit variable `W°(φ)` under the Pareto limit model
//! `1 − F°(x) = x^{−1/γ_F}`, `1 − G°(x) = x^{−1/γ_G}`, `x ≥ 1`.
//!
//! With `a = 1/γ_F`, `b = 1/γ_G`, `c = a + b`, `V° ~ H°` has
//! `1 − H°(v) = v^{−c}` and `δ°` is an independent Bernoulli(`a/c`). Writing
//! `Φ(x) = ∫_x^∞ φ dF°` and `A(x) = ∫_0^{log x} a φ(e^y) e^{by} dy`,
//!
//! ```text
//! γ°_0(x) = x^b,   γ°_1(x) = x^c Φ(x),
//! γ°_2(x) = (b/c) (A(x) − Φ(1) + x^c Φ(x)),
//! W°(φ)   = δ° φ(V°) γ°_0(V°) + (1 − δ°) γ°_1(V°) − γ°_2(V°),
//! ```
//!
//! and `E W°(φ) = Φ(1)`. Two independent routes are provided: nested
//! adaptive quadrature for any registered φ, and plain Monte Carlo using
//! closed forms of `Φ` and `A`.

use rand::RngCore;

use super::quadrature::integrate_pieces;
use crate::distributions::open_unit;
use crate::error::{Error, Result};
use crate::functions::NamedFn;

const INNER_TOL: f64 = 1e-9;
const OUTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
struct Model {
    gamma_f: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl Model {
    fn new(phis: &[NamedFn], gamma_f: f64, gamma_g: f64) -> Result<Self> {
        if !(gamma_f > 0.0 && gamma_g > 0.0) {
            return Err(Error::Guard(format!(
                "the limit model needs gamma_F > 0 and gamma_G > 0, got ({gamma_f}, {gamma_g})"
            )));
        }
        for phi in phis {
            if !phi.satisfies_moment_condition(gamma_f, gamma_g) {
                return Err(Error::Guard(format!(
                    "{phi} violates the moment condition at gamma_F = {gamma_f}, gamma_G = {gamma_g} \
                     (unbounded phi needs gamma_G > gamma_F)"
                )));
            }
        }
        let a = 1.0 / gamma_f;
        let b = 1.0 / gamma_g;
        Ok(Self { gamma_f, a, b, c: a + b })
    }

    fn alpha(&self) -> f64 {
        self.a / self.c
    }
}

fn inner_phi(phi: NamedFn, m: &Model, x: f64) -> Result<f64> {
    let upper = x.powf(-m.a);
    let breaks: Vec<f64> = phi.breakpoints().iter().map(|x0| x0.powf(-m.a)).collect();
    let q = integrate_pieces(|s| phi.eval(s.powf(-m.gamma_f)), 0.0, upper, &breaks, INNER_TOL * upper, 1e-12)?;
    Ok(q.value)
}

fn inner_a(phi: NamedFn, m: &Model, x: f64) -> Result<f64> {
    let upper = x.ln();
    let scale = x.powf(m.b).max(1.0);
    let breaks: Vec<f64> = phi.breakpoints().iter().map(|x0| x0.ln()).collect();
    let q =
        integrate_pieces(|y| m.a * phi.eval(y.exp()) * (m.b * y).exp(), 0.0, upper, &breaks, INNER_TOL * scale, 1e-12)?;
    Ok(q.value)
}

/// Growth exponent of `φ(V) V^b` in `u = V^{−c}`: the outer integrand
/// behaves like `u^{−β}` near 0.
fn singularity(phis: &[NamedFn], m: &Model) -> f64 {
    phis.iter()
        .map(|phi| match *phi {
            NamedFn::One | NamedFn::Indicator(_) => 0.0,
            NamedFn::Log | NamedFn::Log2 => 2.0 * (m.b) / m.c,
            NamedFn::Power(p) => 2.0 * (m.b + p.max(0.0)) / m.c,
        })
        .fold(0.0, f64::max)
}

/// Covariance matrix of `(W°(φ_1), …, W°(φ_d))` built on the same
/// `(V°, δ°)`, by nested adaptive quadrature.
pub fn limit_covariance_quadrature(phis: &[NamedFn], gamma_f: f64, gamma_g: f64) -> Result<Vec<Vec<f64>>> {
    let m = Model::new(phis, gamma_f, gamma_g)?;
    let d = phis.len();
    let alpha = m.alpha();
    let means: Vec<f64> = phis.iter().map(|&phi| inner_phi(phi, &m, 1.0)).collect::<Result<_>>()?;

    // u = t^p removes the endpoint singularity u^{−β}
    let beta = singularity(phis, &m);
    let p = 1.0 / (1.0 - beta);
    let to_t = |v: f64| v.powf(-m.c).powf(1.0 / p);
    let breaks: Vec<f64> = phis.iter().flat_map(|phi| phi.breakpoints()).map(to_t).collect();

    // evaluates the centred branch values (δ = 1, δ = 0) at V = v
    let branches = |v: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut uncensored = Vec::with_capacity(d);
        let mut censored = Vec::with_capacity(d);
        let vc = v.powf(m.c);
        for (&phi, &mu) in phis.iter().zip(&means) {
            let big_phi = inner_phi(phi, &m, v)?;
            let g1 = vc * big_phi;
            let g2 = (m.b / m.c) * (inner_a(phi, &m, v)? - mu + g1);
            uncensored.push(phi.eval(v) * v.powf(m.b) - g2 - mu);
            censored.push(g1 - g2 - mu);
        }
        Ok((uncensored, censored))
    };

    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let failure = std::cell::RefCell::new(None);
            let integrand = |t: f64| {
                let u = t.powf(p);
                let v = u.powf(-1.0 / m.c);
                match branches(v) {
                    Ok((w1, w0)) => {
                        let jac = p * t.powf(p - 1.0);
                        jac * (alpha * w1[i] * w1[j] + (1.0 - alpha) * w0[i] * w0[j])
                    }
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            };
            let q = integrate_pieces(integrand, 0.0, 1.0, &breaks, OUTER_TOL, 1e-10);
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            let q = q?;
            cov[i][j] = q.value;
            cov[j][i] = q.value;
        }
    }
    Ok(cov)
}

/// `var(W°(φ))` by nested adaptive quadrature.
pub fn limit_variance_quadrature(phi: NamedFn, gamma_f: f64, gamma_g: f64) -> Result<f64> {
    let cov = limit_covariance_quadrature(&[phi], gamma_f, gamma_g)?;
    Ok(cov[0][0].max(0.0))
}

/// `∫_0^L e^{ct} t^n dt`.
fn exp_poly_integral(n: u32, c: f64, l: f64) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    if (c * l).abs() < 2.0 {
        let mut sum = 0.0;
        let mut term = l.powi(n as i32 + 1); // c^j L^{n+j+1} / j!
        for j in 0..200 {
            let add = term / (n + j + 1) as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
            term *= c * l / (j + 1) as f64;
        }
        return sum;
    }
    let e = (c * l).exp();
    let mut acc = (c * l).exp_m1() / c;
    for k in 1..=n {
        acc = (e * l.powi(k as i32) - k as f64 * acc) / c;
    }
    acc
}

fn closed_phi(phi: NamedFn, m: &Model, x: f64) -> Result<f64> {
    let l = x.ln();
    let tail = x.powf(-m.a);
    let g = m.gamma_f;
    Ok(match phi {
        NamedFn::One => tail,
        NamedFn::Log => tail * (l + g),
        NamedFn::Log2 => tail * (l * l + 2.0 * g * l + 2.0 * g * g),
        NamedFn::Indicator(x0) => {
            if x < x0 {
                tail - x0.powf(-m.a)
            } else {
                0.0
            }
        }
        NamedFn::Power(p) => {
            if p >= m.a {
                return Err(Error::Guard(format!("power({p}) is not integrable against F°")));
            }
            m.a * x.powf(p - m.a) / (m.a - p)
        }
    })
}

fn closed_a(phi: NamedFn, m: &Model, x: f64) -> f64 {
    let l = x.ln();
    m.a * match phi {
        NamedFn::One => exp_poly_integral(0, m.b, l),
        NamedFn::Log => exp_poly_integral(1, m.b, l),
        NamedFn::Log2 => exp_poly_integral(2, m.b, l),
        NamedFn::Indicator(x0) => exp_poly_integral(0, m.b, l.min(x0.max(1.0).ln())),
        NamedFn::Power(p) => exp_poly_integral(0, m.b + p, l),
    }
}

/// Monte-Carlo estimate of `var(W°(φ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloVariance {
    pub mean: f64,
    pub variance: f64,
    /// Estimated standard error of `variance`.
    pub std_error: f64,
    pub draws: usize,
}

/// Simulates `draws` copies of `(V°, δ°)` and returns the sample variance
/// of `W°(φ)`.
pub fn limit_variance_monte_carlo<R: RngCore + ?Sized>(
    phi: NamedFn,
    gamma_f: f64,
    gamma_g: f64,
    draws: usize,
    rng: &mut R,
) -> Result<MonteCarloVariance> {
    if draws < 2 {
        return Err(Error::InvalidParameter("at least two draws are needed".into()));
    }
    let m = Model::new(&[phi], gamma_f, gamma_g)?;
    let alpha = m.alpha();
    let mu = closed_phi(phi, &m, 1.0)?;
    let mut w = Vec::with_capacity(draws);
    for _ in 0..draws {
        let v = open_unit(rng).powf(-1.0 / m.c);
        let uncensored = open_unit(rng) < alpha;
        let g1 = v.powf(m.c) * closed_phi(phi, &m, v)?;
        let g2 = (m.b / m.c) * (closed_a(phi, &m, v) - mu + g1);
        let value = if uncensored { phi.eval(v) * v.powf(m.b) } else { g1 } - g2;
        w.push(value);
    }
    let n = draws as f64;
    let mean = w.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in &w {
        let d2 = (x - mean).powi(2);
        m2 += d2;
        m4 += d2 * d2;
    }
    let variance = m2 / (n - 1.0);
    let mu4 = m4 / n;
    let s2 = m2 / n;
    let std_error = ((mu4 - s2 * s2).max(0.0) / n).sqrt();
    Ok(MonteCarloVariance { mean, variance, std_error, draws })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn exp_poly_integral_matches_quadrature() {
        for (n, c, l) in [(0, 0.5, 3.0), (1, 0.01, 40.0), (2, 2.0, 5.0), (2, 1e-7, 2.0), (1, 0.7, 0.1)] {
            let q =
                super::super::quadrature::integrate(|t: f64| (c * t).exp() * t.powi(n as i32), 0.0, l, 1e-13, 1e-14)
                    .unwrap();
            let v = exp_poly_integral(n, c, l);
            assert!((v - q.value).abs() < 1e-10 * q.value.abs().max(1.0), "{n} {c} {l}: {v} vs {}", q.value);
        }
    }

    #[test]
    fn closed_forms_match_inner_quadrature() {
        let m = Model::new(&[NamedFn::Log2], 0.4, 1.7).unwrap();
        for phi in [NamedFn::One, NamedFn::Log, NamedFn::Log2, NamedFn::Indicator(3.0), NamedFn::Power(0.2)] {
            for x in [1.0, 1.5, 3.0, 10.0, 1e4] {
                let a = closed_phi(phi, &m, x).unwrap();
                let b = inner_phi(phi, &m, x).unwrap();
                assert!((a - b).abs() < 1e-8 * a.abs().max(x.powf(-m.a)), "{phi} Φ({x})");
                let a = closed_a(phi, &m, x);
                let b = inner_a(phi, &m, x).unwrap();
                assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{phi} A({x}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_phi_has_no_variance() {
        let v = limit_variance_quadrature(NamedFn::One, 0.5, 1.5).unwrap();
        assert!(v.abs() < 1e-10, "{v}");
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mc = limit_variance_monte_carlo(NamedFn::One, 0.5, 1.5, 10_000, &mut rng).unwrap();
        assert!(mc.variance < 1e-20 && (mc.mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mean_of_w_is_phi_integral() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mc = limit_variance_monte_carlo(NamedFn::Log, 0.3, 2.0, 200_000, &mut rng).unwrap();
        assert!((mc.mean - 0.3).abs() < 5.0 * (mc.variance / 200_000.0).sqrt());
    }

    #[test]
    fn guards() {
        assert!(matches!(limit_variance_quadrature(NamedFn::Log, 1.0, 0.5), Err(Error::Guard(_))));
        assert!(matches!(limit_variance_quadrature(NamedFn::Log, -1.0, 0.5), Err(Error::Guard(_))));
        assert!(limit_variance_quadrature(NamedFn::Indicator(2.0), 1.0, 1.0).is_ok());
    }
}
