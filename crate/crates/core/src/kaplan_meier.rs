//! Classical Kaplan–Meier product-limit estimator and Kaplan–Meier integrals.

use crate::censored_data::SortedCensoredSample;
use crate::error::{Error, Result};

/// Right-continuous step distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl StepCdf {
    /// Builds a step cdf from increasing knots and the (nondecreasing)
    /// value held from each knot onwards.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::InvalidParameter("knots and values differ in length".into()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("knots must be strictly increasing".into()));
        }
        if values.windows(2).any(|w| w[0] > w[1]) || values.iter().any(|v| !(0.0..=1.0 + 1e-12).contains(v)) {
            return Err(Error::InvalidParameter("values must be nondecreasing in [0, 1]".into()));
        }
        Ok(Self { knots, values })
    }

    /// Accumulates point masses at (possibly repeated) ascending atoms.
    pub(crate) fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut knots: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut cum = 0.0;
        for (x, mass) in atoms {
            if mass == 0.0 {
                continue;
            }
            cum += mass;
            match knots.last() {
                Some(&last) if last == x => *values.last_mut().expect("non-empty") = cum,
                _ => {
                    knots.push(x);
                    values.push(cum);
                }
            }
        }
        Self { knots, values }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `+∞`.
    pub fn total_mass(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Value of the largest knot `≤ x`, or 0 below the first knot.
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k <= x);
        if idx == 0 {
            0.0
        } else {
            self.values[idx - 1]
        }
    }

    /// Jump sizes at each knot.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut prev = 0.0;
        self.knots.iter().zip(&self.values).map(move |(&x, &v)| {
            let j = v - prev;
            prev = v;
            (x, j)
        })
    }
}

/// Per-observation product-limit masses in ascending order: the survival
/// just before `Z_{i,n}` times `δ_{[i:n]}/(n − i + 1)`.
fn km_masses(sorted: &SortedCensoredSample) -> impl Iterator<Item = (f64, f64)> + '_ {
    let n = sorted.len();
    let mut survival = 1.0;
    sorted.z().iter().zip(sorted.delta()).enumerate().map(move |(i, (&z, &d))| {
        if !d {
            return (z, 0.0);
        }
        let at_risk = (n - i) as f64;
        let mass = survival / at_risk;
        survival *= 1.0 - 1.0 / at_risk;
        (z, mass)
    })
}

/// `F_n` with `1 − F_n(x) = Π_i [1 − δ_{[i:n]}/(n−i+1)]^{I(Z_{i,n} ≤ x)}`.
/// Knots sit at the distinct uncensored values.
pub fn km_estimate(sorted: &SortedCensoredSample) -> StepCdf {
    StepCdf::from_atoms(km_masses(sorted))
}

/// `∫ φ dF_n`, a sum over the product-limit jumps.
pub fn km_integral<F: Fn(f64) -> f64>(sorted: &SortedCensoredSample, phi: F) -> Result<f64> {
    let mut acc = 0.0;
    for (z, mass) in km_masses(sorted) {
        if mass == 0.0 {
            continue;
        }
        let v = phi(z);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("phi({z}) = {v} is not finite")));
        }
        acc += v * mass;
    }
    Ok(acc)
}
