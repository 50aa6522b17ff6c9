//! Track-and-Stop for maximin bandits: GLR stopping statistic, the tracking
//! sampler, a simulated standalone bandit, and the NS-TandS stage adaptor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_model, Algorithm, RunConfig, RunResult, StageReport};
use crate::bandit::{kl_bernoulli, kl_gaussian_var, ArmTable, CiConfig, RewardKind};
use crate::dataset::CenterSet;
use crate::error::{Error, Result};
use crate::maximin::{canonicalize, mirror_ascent, AscentConfig, MaximinInstance, WeightMatrix};
use crate::oracles::{OracleModel, OracleSession};
use crate::scalar::Real;

/// Divergence used by the GLR statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlrKl<T> {
    /// `kl_g` with reward variance `sigma2`.
    Gaussian { sigma2: T },
    /// `kl_b`, for `{0, 1}` rewards.
    Bernoulli,
}

impl<T: Real> GlrKl<T> {
    pub fn divergence(&self, x: T, y: T) -> T {
        match *self {
            GlrKl::Gaussian { sigma2 } => kl_gaussian_var(x, y, sigma2),
            GlrKl::Bernoulli => kl_bernoulli(x, y),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GlrKl::Gaussian { sigma2 } if !(sigma2 >= T::zero() && sigma2.is_finite()) => Err(
                Error::invalid(format!("noise variance {sigma2} must be finite and >= 0")),
            ),
            _ => Ok(()),
        }
    }
}

/// Signed GLR statistic of arm 1 against arm 2.
/// Positive when `d1 > d2`; swapping the arguments negates it exactly.
pub fn glr_statistic<T: Real>(t1: u64, d1: T, t2: u64, d2: T, kl: GlrKl<T>) -> Result<T> {
    if t1 == 0 || t2 == 0 {
        return Err(Error::invalid(
            "GLR statistic needs both arms pulled at least once",
        ));
    }
    if d1 == d2 {
        return Ok(T::zero());
    }
    if d1 < d2 {
        return glr_statistic(t2, d2, t1, d1, kl).map(|z| -z);
    }
    let (w1, w2) = (T::from_u64_lossy(t1), T::from_u64_lossy(t2));
    let rho = (w1 * d1 + w2 * d2) / (w1 + w2);
    Ok(w1 * kl.divergence(d1, rho) + w2 * kl.divergence(d2, rho))
}

/// Pull counts and empirical means of an `a x b` box/arm table.
#[derive(Debug, Clone, PartialEq)]
pub struct GlrTable<T> {
    a: usize,
    b: usize,
    pulls: Vec<u64>,
    means: Vec<T>,
}

impl<T: Real> GlrTable<T> {
    pub fn new(a: usize, b: usize, pulls: Vec<u64>, means: Vec<T>) -> Result<Self> {
        if a == 0 || b == 0 || pulls.len() != a * b || means.len() != a * b {
            return Err(Error::invalid(format!(
                "GLR table {a}x{b} with {} counts and {} means",
                pulls.len(),
                means.len()
            )));
        }
        Ok(Self { a, b, pulls, means })
    }

    pub fn from_arms<A: MaximinArms<T> + ?Sized>(arms: &A) -> Self {
        let (a, b) = (arms.boxes(), arms.arms());
        let mut pulls = Vec::with_capacity(a * b);
        let mut means = Vec::with_capacity(a * b);
        for i in 0..a {
            for j in 0..b {
                pulls.push(arms.pulls(i, j));
                means.push(arms.mean(i, j));
            }
        }
        Self { a, b, pulls, means }
    }

    pub fn boxes(&self) -> usize {
        self.a
    }

    pub fn arms(&self) -> usize {
        self.b
    }

    pub fn pulls(&self, i: usize, j: usize) -> u64 {
        self.pulls[i * self.b + j]
    }

    pub fn mean(&self, i: usize, j: usize) -> T {
        self.means[i * self.b + j]
    }

    pub fn total_pulls(&self) -> u64 {
        self.pulls.iter().sum()
    }

    fn row_min(&self, i: usize) -> T {
        (0..self.b)
            .map(|j| self.mean(i, j))
            .fold(T::infinity(), T::min)
    }

    /// `argmax_i min_j mean(i, j)`, lowest index on ties.
    pub fn empirical_maximin(&self) -> usize {
        (1..self.a).fold(0, |best, i| {
            if self.row_min(i) > self.row_min(best) {
                i
            } else {
                best
            }
        })
    }

    fn z(&self, i: usize, j: usize, i2: usize, j2: usize, kl: GlrKl<T>) -> Result<T> {
        glr_statistic(
            self.pulls(i, j),
            self.mean(i, j),
            self.pulls(i2, j2),
            self.mean(i2, j2),
            kl,
        )
    }

    /// `min_{i' != i} max_{j'} min_j Z_{(i,j)(i',j')}`.
    fn box_value(&self, i: usize, kl: GlrKl<T>) -> Result<T> {
        let mut worst = T::infinity();
        for i2 in (0..self.a).filter(|&x| x != i) {
            let mut best = T::neg_infinity();
            for j2 in 0..self.b {
                let mut inner = T::infinity();
                for j in 0..self.b {
                    inner = inner.min(self.z(i, j, i2, j2, kl)?);
                }
                best = best.max(inner);
            }
            worst = worst.min(best);
        }
        Ok(worst)
    }
}

/// `Z(t) = max_i min_{i' != i} max_{j'} min_j Z_{(i,j)(i',j')}`.
///
/// Only the empirical maximin box can attain the outer maximum (every other box
/// scores `<= 0` while it scores `>= 0`), so only that row is evaluated.
/// A single box has no competitor and gives `+inf`.
pub fn stop_statistic<T: Real>(table: &GlrTable<T>, kl: GlrKl<T>) -> Result<T> {
    if table.a == 1 {
        return Ok(T::infinity());
    }
    table.box_value(table.empirical_maximin(), kl)
}

/// [`stop_statistic`] by the full four-level loop.
pub fn stop_statistic_exhaustive<T: Real>(table: &GlrTable<T>, kl: GlrKl<T>) -> Result<T> {
    if table.a == 1 {
        return Ok(T::infinity());
    }
    let mut z = T::neg_infinity();
    for i in 0..table.a {
        z = z.max(table.box_value(i, kl)?);
    }
    Ok(z)
}

/// Stopping threshold `beta(t, delta') = ln(scale * t / delta')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationRate {
    pub scale: f64,
}

impl Default for ExplorationRate {
    fn default() -> Self {
        Self { scale: 2.0 }
    }
}

impl ExplorationRate {
    pub fn beta<T: Real>(&self, t: u64, delta_prime: T) -> T {
        (T::lit(self.scale) * T::from_u64_lossy(t) / delta_prime).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TandsConfig {
    /// Rounds between recomputations of the tracked weights.
    pub recompute_period: u64,
    /// Mirror-ascent iterations per recomputation.
    pub ascent_iterations: usize,
    /// Force exploration against `n k / 2` instead of the current stage's arm count.
    pub global_forcing: bool,
    /// Start each recomputation from the previous weights.
    pub warm_start: bool,
    pub exploration: ExplorationRate,
}

impl Default for TandsConfig {
    fn default() -> Self {
        Self {
            recompute_period: 100,
            ascent_iterations: 20_000,
            global_forcing: false,
            warm_start: true,
            exploration: ExplorationRate::default(),
        }
    }
}

/// Share of the uniform-support point mixed into a warm start.
const WARM_MIX: f64 = 0.05;

/// A box/arm table that can be sampled.
pub trait MaximinArms<T: Real> {
    fn boxes(&self) -> usize;
    fn arms(&self) -> usize;
    fn pulls(&self, i: usize, j: usize) -> u64;
    fn mean(&self, i: usize, j: usize) -> T;
    fn pull(&mut self, i: usize, j: usize) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TandsOutcome<T> {
    /// `argmax_i min_j mean(i, j)` at stopping time.
    pub best_box: usize,
    /// Pulls made by the sampler (initial pulls excluded).
    pub rounds: u64,
    pub statistic: T,
    pub threshold: T,
}

/// The D-tracking sampler with forced exploration and the GLR stopping rule.
#[derive(Debug, Clone)]
pub struct TrackAndStop<T> {
    cfg: TandsConfig,
    kl: GlrKl<T>,
    delta_prime: T,
    forcing_arms: usize,
    omega: Option<WeightMatrix<T>>,
}

impl<T: Real> TrackAndStop<T> {
    /// `forcing_arms` is the `A` in the forced-exploration trigger `t_{i,j} < sqrt(t) - A/2`.
    pub fn new(
        cfg: TandsConfig,
        kl: GlrKl<T>,
        delta_prime: T,
        forcing_arms: usize,
    ) -> Result<Self> {
        kl.validate()?;
        if !(delta_prime > T::zero() && delta_prime < T::one()) {
            return Err(Error::invalid(format!(
                "delta' = {delta_prime} outside (0, 1)"
            )));
        }
        if cfg.recompute_period == 0 || cfg.ascent_iterations == 0 {
            return Err(Error::invalid(
                "recompute period and ascent iterations must be positive",
            ));
        }
        Ok(Self {
            cfg,
            kl,
            delta_prime,
            forcing_arms,
            omega: None,
        })
    }

    /// The tracked weights in the labels of the table, once computed.
    pub fn weights(&self) -> Option<&WeightMatrix<T>> {
        self.omega.as_ref()
    }

    /// Samples until `Z(t) > beta(t, delta')`. Every arm must already have one pull.
    pub fn run<A: MaximinArms<T> + ?Sized>(
        &mut self,
        arms: &mut A,
        cap: u64,
    ) -> Result<TandsOutcome<T>> {
        self.omega = None;
        let mut rounds = 0u64;
        loop {
            let table = GlrTable::from_arms(arms);
            let statistic = stop_statistic(&table, self.kl)?;
            let threshold = self
                .cfg
                .exploration
                .beta(table.total_pulls(), self.delta_prime);
            if statistic > threshold {
                return Ok(TandsOutcome {
                    best_box: table.empirical_maximin(),
                    rounds,
                    statistic,
                    threshold,
                });
            }
            if rounds >= cap {
                return Err(Error::StageCap { stage: 0, cap });
            }
            let (i, j) = self.choose(&table, rounds)?;
            arms.pull(i, j)?;
            rounds += 1;
        }
    }

    fn choose(&mut self, table: &GlrTable<T>, round: u64) -> Result<(usize, usize)> {
        let (a, b) = (table.a, table.b);
        let t = T::from_u64_lossy(table.total_pulls());
        let least = (0..a * b)
            .min_by_key(|&x| table.pulls[x])
            .expect("non-empty");
        let floor = t.sqrt() - T::from_usize_lossy(self.forcing_arms) / T::lit(2.0);
        if T::from_u64_lossy(table.pulls[least]) < floor {
            return Ok((least / b, least % b));
        }
        if self.omega.is_none() || round % self.cfg.recompute_period == 0 {
            self.recompute(table)?;
        }
        let omega = self.omega.as_ref().expect("just computed");
        let mut best = (0, T::neg_infinity());
        for x in 0..a * b {
            let gap = omega.as_slice()[x] - T::from_u64_lossy(table.pulls[x]) / t;
            if gap > best.1 {
                best = (x, gap);
            }
        }
        Ok((best.0 / b, best.0 % b))
    }

    fn recompute(&mut self, table: &GlrTable<T>) -> Result<()> {
        let (a, b) = (table.a, table.b);
        let inst = MaximinInstance::new(a, b, table.means.clone())?;
        let canon = canonicalize(&inst);
        let start = match (&self.omega, self.cfg.warm_start) {
            (Some(prev), true) => {
                let mut w = canon.from_original(prev);
                let uniform = WeightMatrix::uniform_support(a, b);
                let mix = T::lit(WARM_MIX);
                for i in 0..a {
                    for j in 0..b {
                        let x = if i == 0 || j == 0 {
                            (T::one() - mix) * w.get(i, j) + mix * uniform.get(i, j)
                        } else {
                            T::zero()
                        };
                        w.set(i, j, x);
                    }
                }
                let total = w.sum();
                for i in 0..a {
                    for j in 0..b {
                        w.set(i, j, w.get(i, j) / total);
                    }
                }
                Some(w)
            }
            _ => None,
        };
        let res = mirror_ascent(
            &canon.instance,
            &AscentConfig::with_iterations(self.cfg.ascent_iterations),
            start.as_ref(),
        )?;
        self.omega = Some(canon.to_original(&res.omega));
        Ok(())
    }
}

/// Result of a standalone maximin bandit run.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditOutcome {
    pub best_box: usize,
    pub samples: u64,
}

struct GaussianArms<T> {
    inst: MaximinInstance<T>,
    sd: T,
    pulls: Vec<u64>,
    sums: Vec<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> MaximinArms<T> for GaussianArms<T> {
    fn boxes(&self) -> usize {
        self.inst.boxes()
    }

    fn arms(&self) -> usize {
        self.inst.arms()
    }

    fn pulls(&self, i: usize, j: usize) -> u64 {
        self.pulls[i * self.arms() + j]
    }

    fn mean(&self, i: usize, j: usize) -> T {
        let x = i * self.arms() + j;
        self.sums[x] / T::from_u64_lossy(self.pulls[x])
    }

    fn pull(&mut self, i: usize, j: usize) -> Result<()> {
        let x = i * self.arms() + j;
        let r = self.inst.get(i, j) + self.sd * T::sample_standard_normal(&mut self.rng);
        self.pulls[x] += 1;
        self.sums[x] = self.sums[x] + r;
        Ok(())
    }
}

/// Identifies the maximin box of `inst` from simulated `N(mu, sigma2)` rewards,
/// one initial pull per arm then Track-and-Stop at confidence `delta`.
pub fn maximin_bandit<T: Real>(
    inst: &MaximinInstance<T>,
    sigma2: T,
    delta: T,
    seed: u64,
    cfg: &TandsConfig,
) -> Result<BanditOutcome> {
    let (a, b) = (inst.boxes(), inst.arms());
    let mut arms = GaussianArms {
        inst: inst.clone(),
        sd: sigma2.sqrt(),
        pulls: vec![0; a * b],
        sums: vec![T::zero(); a * b],
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    for i in 0..a {
        for j in 0..b {
            arms.pull(i, j)?;
        }
    }
    let mut tas = TrackAndStop::new(*cfg, GlrKl::Gaussian { sigma2 }, delta, a * b)?;
    let out = tas.run(&mut arms, super::STAGE_CAP)?;
    Ok(BanditOutcome {
        best_box: out.best_box,
        samples: arms.pulls.iter().sum(),
    })
}

/// One greedy stage seen as a maximin bandit: boxes are the remaining vertices,
/// arms their distances to the current centers.
struct StageArms<'x, 's, 'a, T: Real> {
    session: &'x mut OracleSession<'a, T>,
    table: &'x mut ArmTable<T>,
    ci: &'x CiConfig<T>,
    boxes: &'x [usize],
    centers: &'s [usize],
}

impl<T: Real> MaximinArms<T> for StageArms<'_, '_, '_, T> {
    fn boxes(&self) -> usize {
        self.boxes.len()
    }

    fn arms(&self) -> usize {
        self.centers.len()
    }

    fn pulls(&self, i: usize, j: usize) -> u64 {
        self.table.get(self.boxes[i], j).pulls()
    }

    fn mean(&self, i: usize, j: usize) -> T {
        self.table.get(self.boxes[i], j).estimate()
    }

    fn pull(&mut self, i: usize, j: usize) -> Result<()> {
        let v = self.boxes[i];
        let r = self.session.query(v, self.centers[j])?;
        self.table.get_mut(v, j).update(r, self.ci)
    }
}

/// NS-TandS: every stage runs Track-and-Stop over the remaining vertices, then
/// adds the vertex with the largest estimated distance to its nearest center.
/// Under the Bernoulli oracle the GLR uses the Bernoulli divergence.
pub fn ns_tands<T: Real>(
    session: &mut OracleSession<'_, T>,
    cfg: &RunConfig<T>,
) -> Result<RunResult> {
    check_model(Algorithm::NsTands, session)?;
    let n = session.num_points();
    cfg.validate(n)?;
    let kl = match session.model() {
        OracleModel::NoisyDistance { sigma2 } => GlrKl::Gaussian { sigma2 },
        _ => GlrKl::Bernoulli,
    };
    let delta_prime = cfg.delta_prime(n);
    let reward = match session.model() {
        OracleModel::NoisyDistance { sigma2 } => RewardKind::Gaussian { sigma2 },
        _ => RewardKind::Bounded,
    };
    let ci = CiConfig::kl_racing_default(delta_prime, reward)?;
    let mut table = ArmTable::new(n, cfg.k, None);
    let mut centers = vec![cfg.pick_first(session)];
    let mut stages = Vec::with_capacity(cfg.k - 1);

    for p in 1..cfg.k {
        let start = session.query_count();
        let boxes: Vec<usize> = (0..n).filter(|v| !centers.contains(v)).collect();
        let newest = *centers.last().expect("non-empty");
        for &v in &boxes {
            let r = session.query(v, newest).map_err(|e| e.in_stage(p))?;
            table
                .get_mut(v, p - 1)
                .update(r, &ci)
                .map_err(|e| e.in_stage(p))?;
        }
        let forcing = if cfg.tands.global_forcing {
            n * cfg.k
        } else {
            boxes.len() * p
        };
        let mut tas = TrackAndStop::new(cfg.tands, kl, delta_prime, forcing)?;
        let mut arms = StageArms {
            session: &mut *session,
            table: &mut table,
            ci: &ci,
            boxes: &boxes,
            centers: &centers,
        };
        let out = tas.run(&mut arms, cfg.stage_cap).map_err(|e| match e {
            Error::StageCap { cap, .. } => Error::StageCap { stage: p, cap },
            other => other.in_stage(p),
        })?;
        session.mark_stage();
        stages.push(StageReport {
            rounds: out.rounds,
            queries: session.query_count() - start,
            final_margin: (out.threshold - out.statistic).to_f64_lossy(),
            margins: Vec::new(),
        });
        centers.push(boxes[out.best_box]);
    }

    Ok(RunResult {
        algorithm: Algorithm::NsTands,
        centers: CenterSet::from_indices(centers, n)?,
        ledger: session.ledger(),
        stages,
        matched_greedy: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::greedy_exact;
    use crate::dataset::{generate_synthetic, DataSource, SyntheticSpec};
    use proptest::prelude::*;
    use rand::Rng;

    const G1: GlrKl<f64> = GlrKl::Gaussian { sigma2: 1.0 };

    fn random_table(rng: &mut ChaCha8Rng, a: usize, b: usize) -> GlrTable<f64> {
        let pulls = (0..a * b).map(|_| rng.random_range(1..50)).collect();
        let means = (0..a * b).map(|_| rng.random_range(0.0..1.0)).collect();
        GlrTable::new(a, b, pulls, means).unwrap()
    }

    #[test]
    fn glr_hand_example() {
        let z: f64 = glr_statistic(10, 0.8, 30, 0.2, G1).unwrap();
        assert!((z - 1.35).abs() < 1e-12, "{z}");
        assert_eq!(glr_statistic(5, 0.4, 9, 0.4, G1).unwrap(), 0.0);
        assert!(glr_statistic(0, 0.4, 9, 0.4, G1).is_err());
    }

    #[test]
    fn glr_closed_form() {
        // t1 t2 / (t1 + t2) * (d1 - d2)^2 / (2 sigma2)
        let z: f64 = glr_statistic(4, 0.9, 12, 0.3, GlrKl::Gaussian { sigma2: 0.5 }).unwrap();
        let expect = 4.0 * 12.0 / 16.0 * 0.36 / 1.0;
        assert!((z - expect).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn glr_antisymmetric(t1 in 1u64..1000, t2 in 1u64..1000, d1 in -1.0f64..2.0, d2 in -1.0f64..2.0, s in 0.01f64..2.0) {
            let kl = GlrKl::Gaussian { sigma2: s };
            let a = glr_statistic(t1, d1, t2, d2, kl).unwrap();
            let b = glr_statistic(t2, d2, t1, d1, kl).unwrap();
            prop_assert_eq!(a, -b);
            let sign_ok = if d1 >= d2 { a >= 0.0 } else { a <= 0.0 };
            prop_assert!(sign_ok);
        }
    }

    #[test]
    fn bernoulli_glr_uses_kl_b() {
        let z: f64 = glr_statistic(10, 0.9, 10, 0.5, GlrKl::Bernoulli).unwrap();
        let expect = 10.0 * (kl_bernoulli(0.9, 0.7) + kl_bernoulli(0.5, 0.7));
        assert!((z - expect).abs() < 1e-12);
        assert_eq!(
            glr_statistic(3, 0.0, 4, 1.0, GlrKl::<f64>::Bernoulli).unwrap(),
            -glr_statistic(4, 1.0, 3, 0.0, GlrKl::Bernoulli).unwrap()
        );
    }

    #[test]
    fn fast_statistic_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let t = random_table(&mut rng, 4, 3);
            assert_eq!(
                stop_statistic(&t, GlrKl::Bernoulli).unwrap(),
                stop_statistic_exhaustive(&t, GlrKl::Bernoulli).unwrap()
            );
        }
        // ties in the row minima
        for _ in 0..200 {
            let pulls: Vec<u64> = (0..6).map(|_| rng.random_range(1..9)).collect();
            let means: Vec<f64> = (0..6)
                .map(|_| (rng.random_range(0..3) as f64) / 4.0)
                .collect();
            let t = GlrTable::new(3, 2, pulls, means).unwrap();
            assert_eq!(
                stop_statistic(&t, G1).unwrap(),
                stop_statistic_exhaustive(&t, G1).unwrap()
            );
        }
    }

    #[test]
    fn statistic_edge_cases() {
        let t = GlrTable::new(2, 1, vec![5, 5], vec![0.5, 0.5]).unwrap();
        assert_eq!(stop_statistic(&t, G1).unwrap(), 0.0);
        let one = GlrTable::new(1, 3, vec![1, 1, 1], vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(stop_statistic(&one, G1).unwrap(), f64::INFINITY);
        let unpulled = GlrTable::new(2, 1, vec![0, 5], vec![0.5, 0.5]).unwrap();
        assert!(stop_statistic(&unpulled, G1).is_err());
    }

    #[test]
    fn statistic_grows_with_separation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let mut t = random_table(&mut rng, 4, 3);
            let top = t.empirical_maximin();
            let mut last = stop_statistic(&t, GlrKl::Gaussian { sigma2: 0.5 }).unwrap();
            for _ in 0..10 {
                for j in 0..3 {
                    t.means[top * 3 + j] += 0.05;
                }
                let z = stop_statistic(&t, GlrKl::Gaussian { sigma2: 0.5 }).unwrap();
                assert!(z >= last - 1e-12, "{z} < {last}");
                last = z;
            }
        }
    }

    #[test]
    fn maximin_bandit_finds_box_zero() {
        let inst = MaximinInstance::from_rows(&[
            vec![0.45, 0.5, 0.55],
            vec![0.35, 0.4, 0.6],
            vec![0.3, 0.47, 0.52],
        ])
        .unwrap();
        let cfg = TandsConfig::default();
        let hits = (0..5)
            .filter(|&s| maximin_bandit(&inst, 0.1, 0.05, s, &cfg).unwrap().best_box == 0)
            .count();
        assert!(hits >= 4);
    }

    #[test]
    fn ns_tands_noise_free_matches_greedy() {
        let ps = generate_synthetic::<f64>(&SyntheticSpec {
            clusters: 3,
            per_cluster: 4,
            m: 20,
            spread: 0.01,
            seed: 3,
            latent_dim: None,
        })
        .unwrap();
        let g = greedy_exact(DataSource::Points(&ps), 3, 0).unwrap();
        let mut s =
            OracleSession::from_points(&ps, OracleModel::NoisyDistance { sigma2: 0.0 }, 0).unwrap();
        let r = ns_tands(&mut s, &RunConfig::new(3, 0.1).with_first_center(0)).unwrap();
        assert_eq!(r.centers, g.centers);
        assert!(r.stages.iter().all(|st| st.rounds == 0));
    }

    #[test]
    fn ns_tands_last_vertex_is_free() {
        let ps = crate::dataset::PointSet::from_normalized(3, 1, vec![-0.5f64, 0.0, 0.5]).unwrap();
        let mut s =
            OracleSession::from_points(&ps, OracleModel::NoisyDistance { sigma2: 0.1 }, 0).unwrap();
        let r = ns_tands(&mut s, &RunConfig::new(3, 0.1).with_first_center(0)).unwrap();
        assert_eq!(r.stages[1].rounds, 0);
        assert_eq!(r.stages[1].queries, 1);
        assert_eq!(r.ledger.total, s.query_count());
    }
}
