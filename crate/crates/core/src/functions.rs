//! Named real functions φ that can be referenced from the command line.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A registry entry for the integrands used by EKM integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedFn {
    /// `φ ≡ 1`
    One,
    /// `log x`
    Log,
    /// `(log x)²`
    Log2,
    /// `I(x ≤ x0)`
    Indicator(f64),
    /// `x^p`
    Power(f64),
}

impl NamedFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            NamedFn::One => 1.0,
            NamedFn::Log => x.ln(),
            NamedFn::Log2 => {
                let l = x.ln();
                l * l
            }
            NamedFn::Indicator(x0) => {
                if x <= x0 {
                    1.0
                } else {
                    0.0
                }
            }
            NamedFn::Power(p) => x.powf(p),
        }
    }

    /// Whether `∫_1^∞ φ(x)² x^{α(ε)} dx < ∞` for some ε > 0, with
    /// `α(ε) = 1/γ_G − 1/γ_F − 1 + ε`. This is the moment condition under
    /// which EKM integrals of `φ` are asymptotically normal.
    pub fn satisfies_moment_condition(&self, gamma_f: f64, gamma_g: f64) -> bool {
        // slack = 1/γ_F − 1/γ_G; the integral is finite iff growth exponent
        // of φ² is strictly below the slack
        let slack = 1.0 / gamma_f - 1.0 / gamma_g;
        match *self {
            NamedFn::One | NamedFn::Indicator(_) => true,
            NamedFn::Log | NamedFn::Log2 => slack > 0.0,
            NamedFn::Power(p) => 2.0 * p < slack,
        }
    }

    /// Points in `[1, ∞)` where φ is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            NamedFn::Indicator(x0) if x0 > 1.0 => vec![x0],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for NamedFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedFn::One => write!(f, "one"),
            NamedFn::Log => write!(f, "log"),
            NamedFn::Log2 => write!(f, "log2"),
            NamedFn::Indicator(x0) => write!(f, "indicator({x0})"),
            NamedFn::Power(p) => write!(f, "power({p})"),
        }
    }
}

impl FromStr for NamedFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let arg = |prefix: &str| -> Option<f64> { s.strip_prefix(prefix)?.strip_suffix(')')?.trim().parse().ok() };
        match s {
            "one" | "1" => Ok(NamedFn::One),
            "log" => Ok(NamedFn::Log),
            "log2" => Ok(NamedFn::Log2),
            _ => {
                if let Some(x0) = arg("indicator(") {
                    Ok(NamedFn::Indicator(x0))
                } else if let Some(p) = arg("power(") {
                    Ok(NamedFn::Power(p))
                } else {
                    Err(Error::InvalidParameter(format!("unknown function `{s}`")))
                }
            }
        }
    }
}
