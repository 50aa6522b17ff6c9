use std::io::Write;

use super::ci::CiConfig;
use super::posterior::Posterior;
use crate::error::{Error, Result};
use crate::scalar::{KahanSum, Real};

/// Running statistics for one `(vertex, center)` arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmState<T> {
    pulls: u64,
    sum: KahanSum<T>,
    estimate: T,
    lcb: T,
    ucb: T,
    exact: bool,
    pub posterior: Option<Posterior<T>>,
}

impl<T: Real> ArmState<T> {
    pub fn new(posterior: Option<Posterior<T>>) -> Self {
        Self {
            pulls: 0,
            sum: KahanSum::new(),
            estimate: T::zero(),
            lcb: T::neg_infinity(),
            ucb: T::infinity(),
            exact: false,
            posterior,
        }
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn estimate(&self) -> T {
        self.estimate
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Folds one reward into the mean and refreshes the bounds.
    pub fn update(&mut self, reward: T, ci: &CiConfig<T>) -> Result<()> {
        if self.exact {
            return Err(Error::invalid("update on an exact arm"));
        }
        self.pulls += 1;
        self.sum.add(reward);
        self.estimate = self.sum.value() / T::from_u64_lossy(self.pulls);
        let (l, u) = ci.bounds(self.estimate, self.pulls);
        // Clipping to [0, 1] can cross a Gaussian mean that strayed outside; keep L <= dhat <= U.
        self.lcb = l.min(self.estimate);
        self.ucb = u.max(self.estimate);
        Ok(())
    }

    /// Pins the arm to its true distance.
    pub fn set_exact(&mut self, d: T) {
        self.estimate = d;
        self.lcb = d;
        self.ucb = d;
        self.exact = true;
    }

    /// `(L, U)`; an arm that was never pulled has no finite interval.
    pub fn bounds(&self) -> Result<(T, T)> {
        if self.pulls == 0 && !self.exact {
            return Err(Error::invalid("bounds of an unpulled arm"));
        }
        Ok((self.lcb, self.ucb))
    }

    /// `(L, U)` without the unpulled check: `(-inf, +inf)` before the first pull.
    pub fn raw_bounds(&self) -> (T, T) {
        (self.lcb, self.ucb)
    }

    pub fn lcb(&self) -> T {
        self.lcb
    }

    pub fn ucb(&self) -> T {
        self.ucb
    }
}

/// Dense `n x k` table of arms, indexed by vertex and center position (stage order).
#[derive(Debug, Clone)]
pub struct ArmTable<T> {
    n: usize,
    k: usize,
    arms: Vec<ArmState<T>>,
}

impl<T: Real> ArmTable<T> {
    pub fn new(n: usize, k: usize, prior: Option<Posterior<T>>) -> Self {
        Self {
            n,
            k,
            arms: vec![ArmState::new(prior); n * k],
        }
    }

    pub fn get(&self, v: usize, pos: usize) -> &ArmState<T> {
        &self.arms[v * self.k + pos]
    }

    pub fn get_mut(&mut self, v: usize, pos: usize) -> &mut ArmState<T> {
        &mut self.arms[v * self.k + pos]
    }

    /// Checked bounds, naming the arm on failure.
    pub fn bounds(&self, v: usize, pos: usize) -> Result<(T, T)> {
        self.get(v, pos)
            .bounds()
            .map_err(|_| Error::UnpulledArm { v, s: pos })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    /// Writes `v,s,t,dhat,L,U` rows for every pulled or exact arm; `s` is the center's vertex id.
    pub fn write_csv<W: Write>(&self, centers: &[usize], mut w: W) -> std::io::Result<()> {
        writeln!(w, "v,s,t,dhat,L,U")?;
        for v in 0..self.n {
            for (pos, &s) in centers.iter().enumerate().take(self.k) {
                let a = self.get(v, pos);
                if a.pulls == 0 && !a.exact {
                    continue;
                }
                writeln!(w, "{v},{s},{},{},{},{}", a.pulls, a.estimate, a.lcb, a.ucb)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::ci::{CiFamily, RewardKind};
    use proptest::prelude::*;

    fn cfg() -> CiConfig<f64> {
        CiConfig::new(CiFamily::IteratedLog, 0.01, RewardKind::Bounded).unwrap()
    }

    #[test]
    fn estimator_examples() {
        let c = cfg();
        let mut a = ArmState::new(None);
        assert!(a.bounds().is_err());
        a.update(0.4, &c).unwrap();
        assert_eq!(a.estimate(), 0.4);
        let mut b = ArmState::new(None);
        b.update(0.2, &c).unwrap();
        b.update(0.4, &c).unwrap();
        assert!((b.estimate() - 0.3).abs() < 1e-15);

        let mut n = ArmState::new(None);
        n.update(0.7, &c).unwrap();
        n.update(0.1, &c).unwrap();
        assert!((n.estimate() - 0.4).abs() < 1e-15);

        let mut z = ArmState::new(None);
        for _ in 0..10_000 {
            z.update(0.3, &c).unwrap();
        }
        assert!((z.estimate() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn exact_arm_rejects_updates() {
        let mut a = ArmState::new(None);
        a.set_exact(0.25f64);
        assert_eq!(a.bounds().unwrap(), (0.25, 0.25));
        assert!(a.update(0.1, &cfg()).is_err());
    }

    #[test]
    fn full_dimension_coverage_gives_exact_distance() {
        use crate::dataset::{exact_distance, generate_rademacher};
        use crate::oracles::{OracleModel, OracleSession};
        let ps = generate_rademacher::<f64>(2, 31, 2).unwrap();
        let mut s = OracleSession::from_points(&ps, OracleModel::DimensionSampling, 0).unwrap();
        let mut a = ArmState::new(None);
        for j in 0..31 {
            a.update(s.query_ds(0, 1, j).unwrap(), &cfg()).unwrap();
        }
        assert!((a.estimate() - exact_distance(&ps, 0, 1)).abs() < 1e-15);
    }

    #[test]
    fn long_sequences_stay_exact_averages() {
        let c = cfg();
        let mut a = ArmState::new(None);
        let mut exact = 0u64;
        for i in 0..1_000_000u64 {
            let r = (i % 7) as f64 / 10.0;
            exact += i % 7;
            a.update(r, &c).unwrap();
        }
        let mean = exact as f64 / 10.0 / 1_000_000.0;
        assert!((a.estimate() - mean).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn bounds_bracket_estimate(rs in proptest::collection::vec(0.0f64..=1.0, 1..200)) {
            let c = CiConfig::kl_racing_default(0.05, RewardKind::Bounded).unwrap();
            let mut a = ArmState::new(None);
            for r in rs {
                a.update(r, &c).unwrap();
                let (l, u) = a.bounds().unwrap();
                prop_assert!(l <= a.estimate() && a.estimate() <= u);
            }
        }
    }
}
