//! Simulated distance oracles with exact query accounting.
//!
//! An [`OracleSession`] wraps the ground truth and only hands out noisy or
//! per-dimension answers. Every answer is charged to the session ledger.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{DataSource, DistanceMatrix, DistanceSource, PointSet};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// The query model a session answers under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleModel<T> {
    /// One squared coordinate difference per query (needs a point set).
    DimensionSampling,
    /// True distance plus `N(0, sigma2)` noise.
    NoisyDistance { sigma2: T },
    /// A `Ber(d)` draw per query.
    BernoulliDistance,
}

impl<T: Real> OracleModel<T> {
    pub fn name(&self) -> &'static str {
        match self {
            OracleModel::DimensionSampling => "ds",
            OracleModel::NoisyDistance { .. } => "ns",
            OracleModel::BernoulliDistance => "bernoulli",
        }
    }
}

// Sub-stream ids, one per source of randomness.
const STREAM_DIM: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_BERNOULLI: u64 = 3;
const STREAM_CONTROL: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Snapshot of the query counters.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryLedger {
    pub total: u64,
    /// Queries between consecutive stage marks; any unmarked tail is appended.
    pub per_stage: Vec<u64>,
    /// Queries per `(u, v)` pair, keyed in the order the pair was queried.
    pub per_arm: BTreeMap<(usize, usize), u64>,
}

impl QueryLedger {
    /// Writes `stage,queries` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "stage,queries")?;
        for (i, q) in self.per_stage.iter().enumerate() {
            writeln!(w, "{},{q}", i + 1)?;
        }
        Ok(())
    }
}

/// One algorithm run's view of the data. Single owner, not shared.
pub struct OracleSession<'a, T> {
    source: DataSource<'a, T>,
    model: OracleModel<T>,
    dim_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    bernoulli_rng: ChaCha8Rng,
    control_rng: ChaCha8Rng,
    total: u64,
    marks: Vec<u64>,
    per_arm: BTreeMap<(usize, usize), u64>,
}

impl<'a, T: Real> OracleSession<'a, T> {
    pub fn new(source: DataSource<'a, T>, model: OracleModel<T>, seed: u64) -> Result<Self> {
        match (&source, &model) {
            (DataSource::Matrix(_), OracleModel::DimensionSampling) => {
                return Err(Error::ModelMismatch(
                    "dimension sampling needs point coordinates, got a distance matrix".into(),
                ))
            }
            (_, OracleModel::NoisyDistance { sigma2 }) if !(*sigma2 >= T::zero()) => {
                return Err(Error::invalid(format!(
                    "noise variance {sigma2} must be >= 0"
                )))
            }
            _ => {}
        }
        Ok(Self {
            source,
            model,
            dim_rng: stream(seed, STREAM_DIM),
            noise_rng: stream(seed, STREAM_NOISE),
            bernoulli_rng: stream(seed, STREAM_BERNOULLI),
            control_rng: stream(seed, STREAM_CONTROL),
            total: 0,
            marks: Vec::new(),
            per_arm: BTreeMap::new(),
        })
    }

    pub fn from_points(ps: &'a PointSet<T>, model: OracleModel<T>, seed: u64) -> Result<Self> {
        Self::new(DataSource::Points(ps), model, seed)
    }

    pub fn from_matrix(
        dm: &'a DistanceMatrix<T>,
        model: OracleModel<T>,
        seed: u64,
    ) -> Result<Self> {
        Self::new(DataSource::Matrix(dm), model, seed)
    }

    pub fn model(&self) -> OracleModel<T> {
        self.model
    }

    pub fn num_points(&self) -> usize {
        self.source.num_points()
    }

    /// Dimensions per point; 1 for a matrix source.
    pub fn dims(&self) -> usize {
        self.source.dims()
    }

    pub fn query_count(&self) -> u64 {
        self.total
    }

    /// RNG for algorithm-side randomness (first center, posterior draws, mixing coins).
    pub fn control_rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.control_rng
    }

    fn charge(&mut self, u: usize, v: usize, count: u64) {
        self.total += count;
        *self.per_arm.entry((u, v)).or_insert(0) += count;
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        let n = self.num_points();
        for index in [u, v] {
            if index >= n {
                return Err(Error::IndexOutOfBounds { index, len: n });
            }
        }
        Ok(())
    }

    fn require_ds(&self) -> Result<&'a PointSet<T>> {
        match (self.model, self.source) {
            (OracleModel::DimensionSampling, DataSource::Points(ps)) => Ok(ps),
            _ => Err(Error::ModelMismatch(format!(
                "dimension query on a `{}` session",
                self.model.name()
            ))),
        }
    }

    /// `([x_u]_j - [x_v]_j)^2`.
    pub fn query_ds(&mut self, u: usize, v: usize, j: usize) -> Result<T> {
        let ps = self.require_ds()?;
        self.check_pair(u, v)?;
        if j >= ps.dims() {
            return Err(Error::IndexOutOfBounds {
                index: j,
                len: ps.dims(),
            });
        }
        self.charge(u, v, 1);
        let g = ps.coord(u, j) - ps.coord(v, j);
        Ok(g * g)
    }

    /// [`query_ds`](Self::query_ds) at a uniformly drawn dimension.
    pub fn query_ds_random_dim(&mut self, u: usize, v: usize) -> Result<T> {
        let m = self.require_ds()?.dims();
        let j = self.dim_rng.random_range(0..m);
        self.query_ds(u, v, j)
    }

    /// `d_{u,v} + eta` with `eta ~ N(0, sigma2)`.
    pub fn query_ns(&mut self, u: usize, v: usize) -> Result<T> {
        let OracleModel::NoisyDistance { sigma2 } = self.model else {
            return Err(Error::ModelMismatch(format!(
                "noisy-distance query on a `{}` session",
                self.model.name()
            )));
        };
        self.check_pair(u, v)?;
        self.charge(u, v, 1);
        let d = self.source.distance(u, v);
        if sigma2 == T::zero() {
            return Ok(d);
        }
        Ok(d + sigma2.sqrt() * T::sample_standard_normal(&mut self.noise_rng))
    }

    /// A `{0, 1}` reward with mean `d_{u,v}`. Under dimension sampling the success
    /// probability is the answer of a random-dimension query.
    pub fn query_bernoulli(&mut self, u: usize, v: usize) -> Result<bool> {
        let p = match self.model {
            OracleModel::BernoulliDistance => {
                self.check_pair(u, v)?;
                self.charge(u, v, 1);
                self.source.distance(u, v)
            }
            OracleModel::DimensionSampling => self.query_ds_random_dim(u, v)?,
            OracleModel::NoisyDistance { .. } => {
                return Err(Error::ModelMismatch(
                    "bernoulli query on a noisy-distance session".into(),
                ))
            }
        };
        Ok(self.bernoulli_convert(p))
    }

    /// Draws `Ber(p)` from the session's Bernoulli stream without charging a query.
    pub fn bernoulli_convert(&mut self, p: T) -> bool {
        T::sample_unit(&mut self.bernoulli_rng) < p
    }

    /// One reward under whatever model the session runs: a random-dimension value,
    /// a noisy distance, or a `0`/`1` Bernoulli draw.
    pub fn query(&mut self, u: usize, v: usize) -> Result<T> {
        match self.model {
            OracleModel::DimensionSampling => self.query_ds_random_dim(u, v),
            OracleModel::NoisyDistance { .. } => self.query_ns(u, v),
            OracleModel::BernoulliDistance => Ok(if self.query_bernoulli(u, v)? {
                T::one()
            } else {
                T::zero()
            }),
        }
    }

    /// The exact distance, charged as one query per dimension (one for a matrix).
    pub fn query_exact(&mut self, u: usize, v: usize) -> Result<T> {
        self.check_pair(u, v)?;
        let cost = self.dims() as u64;
        self.charge(u, v, cost);
        Ok(self.source.distance(u, v))
    }

    /// Closes the current stage: queries since the previous mark form one entry.
    pub fn mark_stage(&mut self) {
        self.marks.push(self.total);
    }

    pub fn ledger(&self) -> QueryLedger {
        let mut per_stage = Vec::with_capacity(self.marks.len() + 1);
        let mut prev = 0;
        for &mark in &self.marks {
            per_stage.push(mark - prev);
            prev = mark;
        }
        if self.total > prev {
            per_stage.push(self.total - prev);
        }
        QueryLedger {
            total: self.total,
            per_stage,
            per_arm: self.per_arm.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::exact_distance;

    fn pair() -> PointSet<f64> {
        PointSet::from_normalized(2, 2, vec![-0.5, 0.1, 0.5, 0.1]).unwrap()
    }

    #[test]
    fn ds_examples() {
        let ps = pair();
        let mut s = OracleSession::from_points(&ps, OracleModel::DimensionSampling, 0).unwrap();
        assert_eq!(s.query_ds(0, 1, 0).unwrap(), 1.0);
        assert_eq!(s.query_ds(0, 1, 1).unwrap(), 0.0);
        assert_eq!(s.query_count(), 2);
        assert!(matches!(
            s.query_ds(0, 1, 2),
            Err(Error::IndexOutOfBounds { .. })
        ));
    }

    #[test]
    fn ds_on_matrix_is_a_mismatch() {
        let dm = DistanceMatrix::new(2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(
            OracleSession::from_matrix(&dm, OracleModel::DimensionSampling, 0),
            Err(Error::ModelMismatch(_))
        ));
        let mut s = OracleSession::from_matrix(&dm, OracleModel::BernoulliDistance, 0).unwrap();
        assert!(matches!(s.query_ds(0, 1, 0), Err(Error::ModelMismatch(_))));
    }

    #[test]
    fn averaging_all_dimensions_gives_exact_distance() {
        let ps = crate::dataset::generate_rademacher::<f64>(3, 17, 5).unwrap();
        let mut s = OracleSession::from_points(&ps, OracleModel::DimensionSampling, 0).unwrap();
        let sum: f64 = (0..17).map(|j| s.query_ds(0, 2, j).unwrap()).sum();
        assert!((sum / 17.0 - exact_distance(&ps, 0, 2)).abs() < 1e-15);
    }

    #[test]
    fn random_dim_is_unbiased_and_reproducible() {
        let ps = crate::dataset::generate_rademacher::<f64>(2, 9, 1).unwrap();
        let d = exact_distance(&ps, 0, 1);
        let mut a = OracleSession::from_points(&ps, OracleModel::DimensionSampling, 42).unwrap();
        let mut b = OracleSession::from_points(&ps, OracleModel::DimensionSampling, 42).unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| a.query_ds_random_dim(0, 1).unwrap())
            .collect();
        let ys: Vec<f64> = (0..n)
            .map(|_| b.query_ds_random_dim(0, 1).unwrap())
            .collect();
        assert_eq!(xs, ys);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = (d * (1.0 - d) / n as f64).sqrt();
        assert!((mean - d).abs() < 3.0 * se, "{mean} vs {d}");
    }

    #[test]
    fn noisy_distance_moments() {
        let ps = pair();
        let d = exact_distance(&ps, 0, 1);
        let mut exact =
            OracleSession::from_points(&ps, OracleModel::NoisyDistance { sigma2: 0.0 }, 1).unwrap();
        assert_eq!(exact.query_ns(0, 1).unwrap(), d);

        let mut s = OracleSession::from_points(&ps, OracleModel::NoisyDistance { sigma2: 0.01 }, 1)
            .unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.query_ns(0, 1).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - d).abs() < 3.0 * (0.01 / n as f64).sqrt());
        assert!((var - 0.01).abs() < 0.05 * 0.01);
    }

    #[test]
    fn bernoulli_rewards() {
        let dm = DistanceMatrix::new(3, vec![0.0, 1.0, 0.3, 1.0, 0.0, 0.0, 0.3, 0.0, 0.0]).unwrap();
        let mut s = OracleSession::from_matrix(&dm, OracleModel::BernoulliDistance, 3).unwrap();
        assert!((0..1000).all(|_| s.query_bernoulli(0, 1).unwrap()));
        assert!((0..1000).all(|_| !s.query_bernoulli(1, 2).unwrap()));
        let n = 100_000;
        let hits = (0..n).filter(|_| s.query_bernoulli(0, 2).unwrap()).count();
        assert!((hits as f64 / n as f64 - 0.3).abs() < 0.01);
    }

    #[test]
    fn ledger_stages_and_arms() {
        let ps = pair();
        let mut s = OracleSession::from_points(&ps, OracleModel::DimensionSampling, 0).unwrap();
        for _ in 0..3 {
            s.query_ds_random_dim(0, 1).unwrap();
        }
        s.mark_stage();
        s.query_ds_random_dim(1, 0).unwrap();
        s.query_exact(0, 1).unwrap();
        s.mark_stage();
        let l = s.ledger();
        assert_eq!(l.total, 6);
        assert_eq!(l.per_stage, vec![3, 3]);
        assert_eq!(l.per_arm.values().sum::<u64>(), l.total);
        s.query_ds_random_dim(0, 1).unwrap();
        assert_eq!(s.ledger().per_stage, vec![3, 3, 1]);
    }

    #[test]
    fn streams_are_independent() {
        // Interleaving noise draws must not shift the dimension sequence.
        let ps = crate::dataset::generate_rademacher::<f64>(2, 50, 9).unwrap();
        let mut a = OracleSession::from_points(&ps, OracleModel::DimensionSampling, 8).unwrap();
        let mut b = OracleSession::from_points(&ps, OracleModel::DimensionSampling, 8).unwrap();
        let xs: Vec<f64> = (0..50)
            .map(|_| a.query_ds_random_dim(0, 1).unwrap())
            .collect();
        let ys: Vec<f64> = (0..50)
            .map(|_| {
                b.bernoulli_convert(0.5);
                b.query_ds_random_dim(0, 1).unwrap()
            })
            .collect();
        assert_eq!(xs, ys);
    }
}
