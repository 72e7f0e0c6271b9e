//! Randomly right-censored samples `(Z_i, δ_i)`, their ordering with
//! concomitant indicators, and the normalised top-k tail view.

use std::io::{Read, Write};
use std::path::Path;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::format::fmt_f64;

/// Observed minima `Z_i = min(X_i, Y_i)` with indicators `δ_i = I(X_i ≤ Y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample {
    z: Vec<f64>,
    delta: Vec<bool>,
}

impl CensoredSample {
    pub fn new(z: Vec<f64>, delta: Vec<bool>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidParameter("sample must be non-empty".into()));
        }
        if z.len() != delta.len() {
            return Err(Error::InvalidParameter(format!(
                "z and delta lengths differ ({} vs {})",
                z.len(),
                delta.len()
            )));
        }
        if let Some(i) = z.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidParameter(format!("z[{i}] is NaN")));
        }
        Ok(Self { z, delta })
    }

    /// Simulates `n` censored observations with event law `f` and censoring
    /// law `g`. The event and censoring draws use two independent child
    /// streams seeded from `rng`.
    pub fn generate<R: RngCore + ?Sized>(f: &Distribution, g: &Distribution, n: usize, rng: &mut R) -> Result<Self> {
        let mut rx = ChaCha20Rng::seed_from_u64(rng.next_u64());
        let mut ry = ChaCha20Rng::seed_from_u64(rng.next_u64());
        let x = f.sample(&mut rx, n)?;
        let y = g.sample(&mut ry, n)?;
        let (z, delta) = x.iter().zip(&y).map(|(&x, &y)| (x.min(y), x <= y)).unzip();
        Ok(Self { z, delta })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    /// Same observations with every indicator set to 1.
    pub fn uncensored(&self) -> Self {
        Self { z: self.z.clone(), delta: vec![true; self.z.len()] }
    }

    /// Multiplies every observation by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { z: self.z.iter().map(|z| z * c).collect(), delta: self.delta.clone() }
    }

    /// Sorts ascending, carrying the indicators along.
    ///
    /// The sort is stable. Among exactly tied values, uncensored observations
    /// are placed before censored ones, so a subject censored at `t` is still
    /// in the risk set of an event at `t`.
    pub fn sort(&self) -> SortedCensoredSample {
        let mut permutation: Vec<usize> = (0..self.z.len()).collect();
        permutation.sort_by(|&a, &b| self.z[a].total_cmp(&self.z[b]).then_with(|| self.delta[b].cmp(&self.delta[a])));
        let z = permutation.iter().map(|&i| self.z[i]).collect();
        let delta = permutation.iter().map(|&i| self.delta[i]).collect();
        SortedCensoredSample { z, delta, permutation }
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    /// Parses the two-column `time,status` format. Extra columns are ignored,
    /// status 1 marks an observed event and 0 a censored one. Row numbers in
    /// errors count data rows from 1.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(0, e))?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::Parse { row: 0, message: format!("missing `{name}` column") })
        };
        let (time_col, status_col) = (column("time")?, column("status")?);

        let mut z = Vec::new();
        let mut delta = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| csv_error(row, e))?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            let field = |col: usize, name: &str| {
                record
                    .get(col)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| Error::Parse { row, message: format!("missing {name}") })
            };
            let time_s = field(time_col, "time")?;
            let time: f64 =
                time_s.parse().map_err(|_| Error::Parse { row, message: format!("non-numeric time `{time_s}`") })?;
            if !time.is_finite() || time <= 0.0 {
                return Err(Error::Parse { row, message: format!("time must be finite and > 0, got {time_s}") });
            }
            let status_s = field(status_col, "status")?;
            let status = match status_s.parse::<f64>() {
                Ok(1.0) => true,
                Ok(0.0) => false,
                _ => return Err(Error::Parse { row, message: format!("status must be 0 or 1, got `{status_s}`") }),
            };
            z.push(time);
            delta.push(status);
        }
        if z.is_empty() {
            return Err(Error::Parse { row: 0, message: "no data rows".into() });
        }
        Ok(Self { z, delta })
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.to_csv_writer(std::io::BufWriter::new(file))
    }

    pub fn to_csv_writer<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,status")?;
        for (z, d) in self.z.iter().zip(&self.delta) {
            writeln!(w, "{},{}", fmt_f64(*z), u8::from(*d))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(row: usize, e: csv::Error) -> Error {
    Error::Parse { row, message: e.to_string() }
}

/// Order statistics `Z_{1,n} ≤ … ≤ Z_{n,n}` with concomitants `δ_{[i:n]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedCensoredSample {
    z: Vec<f64>,
    delta: Vec<bool>,
    permutation: Vec<usize>,
}

impl SortedCensoredSample {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    /// `permutation[i]` is the original index of the `i`-th smallest value.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Restores the original ordering.
    pub fn unsort(&self) -> CensoredSample {
        let n = self.z.len();
        let mut z = vec![0.0; n];
        let mut delta = vec![false; n];
        for (i, &p) in self.permutation.iter().enumerate() {
            z[p] = self.z[i];
            delta[p] = self.delta[i];
        }
        CensoredSample { z, delta }
    }

    /// Top-k view normalised by the threshold `Z_{n-k,n}`.
    ///
    /// The threshold observation contributes its value only; its own
    /// indicator is not part of the view.
    pub fn top_k_view(&self, k: usize) -> Result<TailView> {
        let n = self.z.len();
        if k == 0 || k >= n {
            return Err(Error::Range(format!("k must lie in [1, n-1] = [1, {}], got {k}", n - 1)));
        }
        let threshold = self.z[n - k - 1];
        if !(threshold > 0.0) {
            return Err(Error::Domain(format!("threshold Z_(n-k,n) = {threshold} must be > 0")));
        }
        let ratios = (1..=k).map(|i| self.z[n - i] / threshold).collect();
        let delta = (1..=k).map(|i| self.delta[n - i]).collect();
        Ok(TailView { n, threshold, ratios, delta })
    }
}

/// The `k` largest observations divided by `Z_{n-k,n}`, largest first,
/// with their concomitant indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct TailView {
    n: usize,
    threshold: f64,
    ratios: Vec<f64>,
    delta: Vec<bool>,
}

impl TailView {
    /// Builds a view directly from ratios (largest first) and indicators.
    /// The threshold is taken to be 1 and `n` to be `k + 1`.
    pub fn from_ratios(ratios: Vec<f64>, delta: Vec<bool>) -> Result<Self> {
        if ratios.is_empty() || ratios.len() != delta.len() {
            return Err(Error::InvalidParameter("ratios and delta must be non-empty and of equal length".into()));
        }
        if ratios.iter().any(|r| !(*r >= 1.0) || !r.is_finite()) {
            return Err(Error::Domain("every ratio must be finite and >= 1".into()));
        }
        if ratios.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("ratios must be nonincreasing".into()));
        }
        Ok(Self { n: ratios.len() + 1, threshold: 1.0, ratios, delta })
    }

    pub fn k(&self) -> usize {
        self.ratios.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `r_i = Z_{n-i+1,n} / Z_{n-k,n}` for `i = 1..=k`.
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    /// `δ_{[n-i+1:n]}` for `i = 1..=k`.
    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    /// `(1/k) Σ δ_{[n-i+1:n]}`.
    pub fn uncensored_fraction(&self) -> f64 {
        self.delta.iter().filter(|d| **d).count() as f64 / self.k() as f64
    }

    /// The same view with every indicator set to 1.
    pub fn uncensored(&self) -> Self {
        Self { delta: vec![true; self.delta.len()], ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(z: &[f64], d: &[u8]) -> CensoredSample {
        CensoredSample::new(z.to_vec(), d.iter().map(|&x| x == 1).collect()).unwrap()
    }

    #[test]
    fn sort_carries_concomitants() {
        let s = sample(&[3.0, 1.0, 2.0], &[1, 0, 1]).sort();
        assert_eq!(s.z(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.delta(), &[false, true, true]);
        assert_eq!(s.permutation(), &[1, 2, 0]);

        let s = sample(&[1.0, 2.0, 5.0], &[1, 1, 0]).sort();
        assert_eq!(s.permutation(), &[0, 1, 2]);
    }

    #[test]
    fn ties_are_stable_and_events_come_first() {
        let s = sample(&[2.0, 1.0, 2.0, 2.0, 2.0], &[1, 1, 0, 1, 0]).sort();
        assert_eq!(s.z(), &[1.0, 2.0, 2.0, 2.0, 2.0]);
        assert_eq!(s.delta(), &[true, true, true, false, false]);
        assert_eq!(s.permutation(), &[1, 0, 3, 2, 4]);
    }

    #[test]
    fn top_k_examples() {
        let s = sample(&[1.0, 2.0, 4.0, 8.0], &[1, 1, 0, 1]).sort();
        let v = s.top_k_view(3).unwrap();
        assert_eq!(v.threshold(), 1.0);
        assert_eq!(v.ratios(), &[8.0, 4.0, 2.0]);
        assert_eq!(v.delta(), &[true, false, true]);
        assert!(matches!(s.top_k_view(4), Err(Error::Range(_))));
        assert!(matches!(s.top_k_view(0), Err(Error::Range(_))));

        let s = sample(&[-1.0, 2.0, 4.0], &[1, 1, 1]).sort();
        assert_eq!(s.top_k_view(1).unwrap().threshold(), 2.0);
        assert!(matches!(s.top_k_view(2), Err(Error::Domain(_))));
        let s = sample(&[-2.0, -1.0, 3.0], &[1, 1, 1]).sort();
        assert!(matches!(s.top_k_view(1), Err(Error::Domain(_))));
        assert!(matches!(s.top_k_view(2), Err(Error::Domain(_))));
    }

    #[test]
    fn uncensored_fraction_examples() {
        let v = TailView::from_ratios(vec![3.0, 2.0, 1.5], vec![true, false, true]).unwrap();
        assert_eq!(v.uncensored_fraction(), 2.0 / 3.0);
        assert_eq!(v.uncensored().uncensored_fraction(), 1.0);
        let v = TailView::from_ratios(vec![3.0, 2.0], vec![false, false]).unwrap();
        assert_eq!(v.uncensored_fraction(), 0.0);
    }

    #[test]
    fn from_ratios_validates() {
        assert!(TailView::from_ratios(vec![2.0, 4.0], vec![true, true]).is_err());
        assert!(TailView::from_ratios(vec![0.5], vec![true]).is_err());
        assert!(TailView::from_ratios(vec![], vec![]).is_err());
    }

    #[test]
    fn csv_parsing() {
        let s = CensoredSample::from_csv_reader("time,status\n5.0,1\n7.5,0\n".as_bytes()).unwrap();
        assert_eq!(s.z(), &[5.0, 7.5]);
        assert_eq!(s.delta(), &[true, false]);

        let s = CensoredSample::from_csv_reader("id,time,status,age\na,5,1,3\n\nb,6,0,4\n".as_bytes()).unwrap();
        assert_eq!(s.z(), &[5.0, 6.0]);

        let err = CensoredSample::from_csv_reader("time,status\n1,1\n2,0\n3,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
        assert!(err.to_string().contains("row 3"));

        let err = CensoredSample::from_csv_reader("time,status\n1,1\nabc,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
        let err = CensoredSample::from_csv_reader("time,status\n0,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
        let err = CensoredSample::from_csv_reader("time,event\n1,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 0, .. }));
        let err = CensoredSample::from_csv_reader("time,status\n1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
    }

    #[test]
    fn csv_round_trip() {
        let f = Distribution::frechet(2.0).unwrap();
        let g = Distribution::frechet(2.0 / 3.0).unwrap();
        let s = CensoredSample::generate(&f, &g, 200, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        let mut buf = Vec::new();
        s.to_csv_writer(&mut buf).unwrap();
        let back = CensoredSample::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn generation_examples() {
        let e = Distribution::exponential(1.0).unwrap();
        let s = CensoredSample::generate(&e, &e, 100_000, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let p = s.delta().iter().filter(|d| **d).count() as f64 / s.len() as f64;
        assert!((p - 0.5).abs() < 0.01, "p = {p}");

        let again = CensoredSample::generate(&e, &e, 100_000, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s, again);

        // tail non-censoring proportion → γ_G / (γ_F + γ_G) = 0.75
        let f = Distribution::pareto(2.0).unwrap();
        let g = Distribution::pareto(2.0 / 3.0).unwrap();
        let s = CensoredSample::generate(&f, &g, 100_000, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        let p = s.sort().top_k_view(1000).unwrap().uncensored_fraction();
        assert!((p - 0.75).abs() < 0.05, "p = {p}");
    }

    proptest! {
        #[test]
        fn sort_invariants(
            data in proptest::collection::vec((0.01f64..100.0, any::<bool>()), 2..60),
            kf in 0.0f64..1.0,
        ) {
            let (z, d): (Vec<f64>, Vec<bool>) = data.into_iter().unzip();
            let s = CensoredSample::new(z, d).unwrap();
            let sorted = s.sort();
            prop_assert!(sorted.z().windows(2).all(|w| w[0] <= w[1]));
            for (i, &p) in sorted.permutation().iter().enumerate() {
                prop_assert_eq!(sorted.delta()[i], s.delta()[p]);
            }
            prop_assert_eq!(sorted.unsort(), s.clone());

            let k = 1 + ((s.len() - 2) as f64 * kf) as usize;
            let v = sorted.top_k_view(k).unwrap();
            prop_assert!(v.ratios()[k - 1] >= 1.0);
            prop_assert!(v.ratios().windows(2).all(|w| w[0] >= w[1]));
            let max = s.z().iter().cloned().fold(f64::MIN, f64::max);
            prop_assert_eq!(v.ratios()[0], max / v.threshold());
            let frac = v.uncensored_fraction();
            prop_assert!((0.0..=1.0).contains(&frac));
            let mean = v.delta().iter().map(|&d| f64::from(u8::from(d))).sum::<f64>() / k as f64;
            prop_assert_eq!(frac, mean);
        }
    }
}
