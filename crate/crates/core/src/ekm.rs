//! The extreme Kaplan–Meier estimator on normalised top order statistics.
//!
//! For a [`TailView`] with ratios `r_1 ≥ … ≥ r_k` and indicators `δ_i`,
//! the estimator puts mass
//!
//! ```text
//! ω_ik = (δ_i / i) · Π_{j=i+1..k} ((j−1)/j)^{δ_j}
//! ```
//!
//! on `r_i`, with total mass `1 − Π_{i=1..k} (1 − δ_i/i)`.

use std::io::Write;

use crate::censored_data::TailView;
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::functions::NamedFn;
use crate::kaplan_meier::StepCdf;

/// Jump weights of the extreme Kaplan–Meier estimator, indexed like the
/// view (`omega[0]` belongs to the largest ratio).
#[derive(Debug, Clone, PartialEq)]
pub struct EkmWeights {
    omega: Vec<f64>,
    total_mass: f64,
}

impl EkmWeights {
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }
}

/// Computes `ω_ik` for every `i` in a single backward pass.
pub fn ekm_weights(view: &TailView) -> EkmWeights {
    let delta = view.delta();
    let k = delta.len();
    let mut omega = vec![0.0; k];
    let mut prod = 1.0;
    for i in (1..=k).rev() {
        if delta[i - 1] {
            omega[i - 1] = prod / i as f64;
            prod *= (i - 1) as f64 / i as f64;
        }
    }
    EkmWeights { omega, total_mass: ekm_total_mass(view) }
}

/// `S_{k,n}(φ) = Σ_i ω_ik φ(r_i)`.
pub fn ekm_integral<F: Fn(f64) -> f64>(view: &TailView, phi: F) -> Result<f64> {
    weighted_sum(view, &ekm_weights(view), phi)
}

/// [`ekm_integral`] for a registered function.
pub fn ekm_integral_named(view: &TailView, phi: NamedFn) -> Result<f64> {
    ekm_integral(view, |x| phi.eval(x))
}

pub(crate) fn weighted_sum<F: Fn(f64) -> f64>(view: &TailView, weights: &EkmWeights, phi: F) -> Result<f64> {
    let mut acc = 0.0;
    for (&r, &w) in view.ratios().iter().zip(&weights.omega) {
        if w == 0.0 {
            continue;
        }
        let v = phi(r);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("phi({r}) = {v} is not finite")));
        }
        acc += w * v;
    }
    Ok(acc)
}

/// `𝔽_{k,n}` as a step cdf on `[1, ∞)`.
pub fn ekm_cdf(view: &TailView) -> StepCdf {
    let w = ekm_weights(view);
    StepCdf::from_atoms(view.ratios().iter().copied().zip(w.omega).rev())
}

/// `S_{k,n}(1) = 𝔽_{k,n}(∞)`, evaluated as `1 − Π_i (1 − δ_i/i)`. It
/// equals 1 exactly whenever the largest observation is uncensored.
pub fn ekm_total_mass(view: &TailView) -> f64 {
    let mut survival = 1.0;
    for (i, &d) in view.delta().iter().enumerate() {
        if d {
            survival *= 1.0 - 1.0 / (i + 1) as f64;
        }
    }
    1.0 - survival
}

/// Writes `ratio,delta,omega,cum_mass` rows in ascending ratio order.
pub fn write_ekm_csv<W: Write>(view: &TailView, mut out: W) -> Result<()> {
    let w = ekm_weights(view);
    writeln!(out, "ratio,delta,omega,cum_mass")?;
    let mut cum = 0.0;
    for i in (0..view.k()).rev() {
        cum += w.omega[i];
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(view.ratios()[i]),
            u8::from(view.delta()[i]),
            fmt_f64(w.omega[i]),
            fmt_f64(cum)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::censored_data::CensoredSample;
    use crate::distributions::Distribution;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn view(ratios: &[f64], d: &[u8]) -> TailView {
        TailView::from_ratios(ratios.to_vec(), d.iter().map(|&x| x == 1).collect()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn hand_weights() {
        let w = ekm_weights(&view(&[3.0, 2.0, 1.0], &[1, 1, 1]));
        assert!(w.omega().iter().all(|&o| close(o, 1.0 / 3.0)));

        let w = ekm_weights(&view(&[3.0, 2.0, 1.0], &[1, 0, 1]));
        assert!(close(w.omega()[0], 2.0 / 3.0) && w.omega()[1] == 0.0 && close(w.omega()[2], 1.0 / 3.0));
        assert!(close(w.total_mass(), 1.0));

        let v = view(&[3.0, 2.0, 1.0], &[0, 1, 1]);
        let w = ekm_weights(&v);
        assert!(w.omega()[0] == 0.0 && close(w.omega()[1], 1.0 / 3.0) && close(w.omega()[2], 1.0 / 3.0));
        assert!(close(w.total_mass(), 2.0 / 3.0));
        assert!(close(ekm_total_mass(&v), 2.0 / 3.0));
    }

    #[test]
    fn hand_integrals_and_cdf() {
        let v = view(&[8.0, 4.0, 2.0], &[1, 0, 1]);
        let s = ekm_integral_named(&v, NamedFn::Log).unwrap();
        assert!((s - 7.0 / 3.0 * 2f64.ln()).abs() < 1e-14);
        assert!(close(ekm_integral(&v, |_| 1.0).unwrap(), 1.0));

        let f = ekm_cdf(&v);
        assert!(close(f.eval(2.0), 1.0 / 3.0));
        assert!(close(f.eval(4.0), 1.0 / 3.0));
        assert!(close(f.eval(8.0), 1.0));
        assert_eq!(f.eval(0.99), 0.0);
        assert_eq!(f.knots(), &[2.0, 8.0]);

        let v = view(&[5.0, 3.0, 2.0, 1.5], &[1, 1, 1, 1]);
        let f = ekm_cdf(&v);
        for (x, want) in [(1.5, 0.25), (2.0, 0.5), (4.0, 0.75), (5.0, 1.0)] {
            assert!(close(f.eval(x), want));
        }
        let hill = v.ratios().iter().map(|r| r.ln()).sum::<f64>() / 4.0;
        assert!(close(ekm_integral_named(&v, NamedFn::Log).unwrap(), hill));
    }

    #[test]
    fn degenerate_masses() {
        assert_eq!(ekm_total_mass(&view(&[2.0, 1.0], &[1, 0])), 1.0);
        assert_eq!(ekm_total_mass(&view(&[2.0, 1.0], &[0, 0])), 0.0);
        assert_eq!(ekm_weights(&view(&[2.0, 1.0], &[0, 0])).total_mass(), 0.0);
    }

    #[test]
    fn non_finite_phi_is_reported_only_where_weighted() {
        let v = view(&[8.0, 4.0, 2.0], &[1, 0, 1]);
        assert!(matches!(ekm_integral(&v, |x| if x == 8.0 { f64::NAN } else { 1.0 }), Err(Error::Evaluation(_))));
        assert!(ekm_integral(&v, |x| if x == 4.0 { f64::NAN } else { 1.0 }).is_ok());
    }

    #[test]
    fn telescoping_identity_exhaustive() {
        for k in 1..=12usize {
            let ratios: Vec<f64> = (0..k).map(|i| (k - i) as f64).collect();
            for mask in 0u32..(1 << k) {
                let d: Vec<bool> = (0..k).map(|i| mask & (1 << i) != 0).collect();
                let v = TailView::from_ratios(ratios.clone(), d.clone()).unwrap();
                let w = ekm_weights(&v);
                let prod: f64 =
                    d.iter().enumerate().map(|(i, &di)| if di { 1.0 - 1.0 / (i + 1) as f64 } else { 1.0 }).product();
                let sum: f64 = w.omega().iter().sum();
                assert!((sum - (1.0 - prod)).abs() < 1e-12, "k={k} mask={mask}");
                assert!((ekm_total_mass(&v) - w.total_mass()).abs() < 1e-12);
                assert_eq!(w.total_mass() == 1.0, d[0], "k={k} mask={mask}");
                for (o, di) in w.omega().iter().zip(&d) {
                    assert!(*o >= 0.0);
                    if !di {
                        assert_eq!(*o, 0.0);
                    }
                }
            }
        }
    }

    fn naive_weights(delta: &[bool]) -> Vec<f64> {
        let k = delta.len();
        (1..=k)
            .map(|i| {
                if !delta[i - 1] {
                    return 0.0;
                }
                let mut prod = 1.0;
                for j in (i + 1..=k).rev() {
                    if delta[j - 1] {
                        prod *= (j - 1) as f64 / j as f64;
                    }
                }
                prod / i as f64
            })
            .collect()
    }

    #[test]
    fn backward_pass_matches_naive_products_bitwise() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for k in [1usize, 2, 17, 250, 1000] {
            for p in [0.1, 0.5, 0.9] {
                let d: Vec<bool> = (0..k).map(|_| rand::Rng::random_bool(&mut rng, p)).collect();
                let ratios: Vec<f64> = (0..k).map(|i| (k - i) as f64).collect();
                let v = TailView::from_ratios(ratios, d.clone()).unwrap();
                let fast = ekm_weights(&v);
                let slow = naive_weights(&d);
                for (a, b) in fast.omega().iter().zip(&slow) {
                    assert_eq!(a.to_bits(), b.to_bits(), "k={k}");
                }
            }
        }
    }

    #[test]
    fn csv_is_ascending_with_cumulative_mass() {
        let v = view(&[8.0, 4.0, 2.0], &[1, 0, 1]);
        let mut buf = Vec::new();
        write_ekm_csv(&v, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ratio,delta,omega,cum_mass");
        assert!(lines[1].starts_with("2,1,0.3333"));
        assert!(lines[2].starts_with("4,0,0,0.3333"));
        assert!(lines[3].starts_with("8,1,0.6666"));
        assert!(lines[3].ends_with(",1"));
    }

    #[test]
    fn consistency_of_log_integral() {
        // γ_F = 0.5, γ_G = 1.5: S_∘(log) = γ_F
        let f = Distribution::frechet(2.0).unwrap();
        let g = Distribution::frechet(2.0 / 3.0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let reps = 200;
        let mut sum = 0.0;
        for _ in 0..reps {
            let s = CensoredSample::generate(&f, &g, 5000, &mut rng).unwrap().sort();
            let v = s.top_k_view(150).unwrap();
            sum += ekm_integral_named(&v, NamedFn::Log).unwrap();
        }
        let mean = sum / reps as f64;
        assert!((mean - 0.5).abs() < 0.05, "mean = {mean}");
    }

    proptest! {
        #[test]
        fn cdf_is_monotone_on_unit_support(
            mut ratios in proptest::collection::vec(1.0f64..100.0, 1..60),
            seed in any::<u64>(),
        ) {
            ratios.sort_by(|a, b| b.total_cmp(a));
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let d: Vec<bool> = ratios.iter().map(|_| rand::Rng::random_bool(&mut rng, 0.6)).collect();
            let v = TailView::from_ratios(ratios, d).unwrap();
            let f = ekm_cdf(&v);
            prop_assert!(f.values().windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(f.knots().iter().all(|&x| x >= 1.0));
            prop_assert!((f.total_mass() - ekm_total_mass(&v)).abs() < 1e-12);
            prop_assert!(f.total_mass() <= 1.0 + 1e-12);
            let unc = v.uncensored();
            let mean = unc.ratios().iter().map(|r| r.sqrt()).sum::<f64>() / unc.k() as f64;
            prop_assert!((ekm_integral(&unc, f64::sqrt).unwrap() - mean).abs() < 1e-12);
        }
    }
}
