//! Instance-hardness calculators evaluated on a dataset and its exact greedy run.

use std::collections::BTreeMap;

use crate::bandit::{ci_iterated_log, kl_bernoulli};
use crate::dataset::{nearest_center, DistanceSource};
use crate::error::{Error, Result};
use crate::maximin::{t_star, AscentConfig, MaximinInstance};
use crate::scalar::Real;

/// The exact greedy run a bound is evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrajectory<T> {
    /// `s_1, ..., s_k`.
    pub centers: Vec<usize>,
    /// `bottleneck[p - 1] = d_{V,S_p}` for `p = 1..k-1`.
    pub bottleneck: Vec<T>,
    /// `nearest[p - 1][v]` is the position in `S_p` of `v`'s nearest center.
    pub nearest: Vec<Vec<usize>>,
}

impl<T: Real> GreedyTrajectory<T> {
    /// Farthest-first from `first`, lowest index on ties.
    pub fn compute<D: DistanceSource<T> + ?Sized>(src: &D, k: usize, first: usize) -> Result<Self> {
        let n = src.num_points();
        if k == 0 || k > n {
            return Err(Error::invalid(format!("k = {k} with n = {n}")));
        }
        if first >= n {
            return Err(Error::IndexOutOfBounds {
                index: first,
                len: n,
            });
        }
        let mut centers = vec![first];
        let mut bottleneck = Vec::with_capacity(k - 1);
        let mut nearest = Vec::with_capacity(k - 1);
        while centers.len() < k {
            let mut map = vec![0; n];
            let mut best: Option<(usize, T)> = None;
            for v in 0..n {
                let (pos, d) = nearest_center(src, &centers, v);
                map[v] = pos;
                if !centers.contains(&v) && best.is_none_or(|(_, b)| d > b) {
                    best = Some((v, d));
                }
            }
            let (v, d) = best.ok_or(Error::NoRemainingVertex)?;
            bottleneck.push(d);
            nearest.push(map);
            centers.push(v);
        }
        Ok(Self {
            centers,
            bottleneck,
            nearest,
        })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// True when every stage's bottleneck distance is attained by exactly one vertex.
    pub fn unique_bottlenecks<D: DistanceSource<T> + ?Sized>(&self, src: &D) -> bool {
        let n = src.num_points();
        (1..self.k()).all(|p| {
            let hits = (0..n)
                .filter(|v| !self.centers[..p].contains(v))
                .filter(|&v| self.distance_to_centers(src, v, p) == self.bottleneck[p - 1])
                .count();
            hits == 1
        })
    }

    /// `d_{v,S_p}`.
    pub fn distance_to_centers<D: DistanceSource<T> + ?Sized>(
        &self,
        src: &D,
        v: usize,
        p: usize,
    ) -> T {
        src.distance(v, self.centers[self.nearest[p - 1][v]])
    }
}

/// `m^p_{v,s_i} = max{d_{v,s_i} - d_{v,S_p}, d_{V,S_p} - d_{v,s_i}}`, keyed by
/// `(v, i, p)` with `i` the 1-based center position and `i <= p <= k-1`.
/// Centers appear for the stages before they were chosen.
pub fn hardness_terms<T: Real, D: DistanceSource<T> + ?Sized>(
    traj: &GreedyTrajectory<T>,
    src: &D,
) -> BTreeMap<(usize, usize, usize), T> {
    let n = src.num_points();
    let k = traj.k();
    let mut out = BTreeMap::new();
    for p in 1..k {
        let dvs = traj.bottleneck[p - 1];
        for v in (0..n).filter(|v| !traj.centers[..p].contains(v)) {
            let dv = traj.distance_to_centers(src, v, p);
            for i in 1..=p {
                let d = src.distance(v, traj.centers[i - 1]);
                out.insert((v, i, p), (d - dv).max(dvs - d));
            }
        }
    }
    out
}

/// `c log(1/delta') log(2 log(2/m)) / m^2`, capped at `2 dims`; a zero gap hits the cap.
fn capped_term<T: Real>(m_term: T, c: T, log_inv: T, dims: usize) -> T {
    let cap = T::from_usize_lossy(2 * dims);
    if !(m_term > T::zero()) {
        return cap;
    }
    let loglog = (T::lit(2.0) * (T::lit(2.0) / m_term).ln()).ln();
    (c * log_inv * loglog / (m_term * m_term))
        .max(T::zero())
        .min(cap)
}

/// The DS-UCB query bound: for every non-center vertex and every center it was
/// compared against, and for every pair of centers, the worst stage's capped term.
pub fn dsucb_upper_bound<T: Real>(
    traj: &GreedyTrajectory<T>,
    terms: &BTreeMap<(usize, usize, usize), T>,
    n: usize,
    dims: usize,
    delta: T,
    c: T,
) -> T {
    let k = traj.k();
    let log_inv = (T::from_usize_lossy(n * n) / delta).ln();
    let worst = |v: usize, i: usize, stages: std::ops::Range<usize>| -> T {
        stages
            .filter_map(|p| terms.get(&(v, i, p)))
            .map(|&m| capped_term(m, c, log_inv, dims))
            .fold(T::zero(), T::max)
    };
    let mut total = T::zero();
    for v in (0..n).filter(|v| !traj.centers.contains(v)) {
        for i in 1..k {
            total = total + worst(v, i, i..k);
        }
    }
    for i in 2..=k {
        let s = traj.centers[i - 1];
        for j in 1..i {
            total = total + worst(s, j, j..i);
        }
    }
    total
}

const KL_CLAMP: f64 = 1e-12;

fn kl_clamped<T: Real>(x: T, y: T) -> T {
    let lo = T::lit(KL_CLAMP);
    let hi = T::one() - lo;
    kl_bernoulli(x.max(lo).min(hi), y.max(lo).min(hi))
}

/// `log(1/2.4 delta) / max_i kl`, `0` once the log is non-positive.
fn lb_ratio<T: Real>(log_term: T, kl_max: T) -> T {
    if log_term <= T::zero() {
        T::zero()
    } else {
        log_term / kl_max
    }
}

/// The mimicking-algorithm lower bound for `{-1/2, +1/2}` data. A point whose
/// distances to every center equal the next center's gives `+inf`.
pub fn lower_bound<T: Real, D: DistanceSource<T> + ?Sized>(
    traj: &GreedyTrajectory<T>,
    src: &D,
    delta: T,
) -> T {
    let n = src.num_points();
    let k = traj.k();
    let c = &traj.centers;
    let log_term = (T::one() / (T::lit(2.4) * delta)).ln();
    let half = T::lit(0.5);
    let mut total = T::zero();
    for v in (0..n).filter(|v| !c.contains(v)) {
        let mut worst = T::zero();
        for p in 1..k {
            let kl = (1..=p)
                .map(|i| kl_clamped(src.distance(v, c[i - 1]), src.distance(c[p], c[i - 1])))
                .fold(T::zero(), T::max);
            worst = worst.max(lb_ratio(log_term, kl));
        }
        total = total + half * worst;
    }
    for p in 1..k {
        let mut worst = T::zero();
        for v in (0..n).filter(|v| !c[..=p].contains(v)) {
            let kl = (1..=p)
                .map(|i| kl_clamped(src.distance(c[p], c[i - 1]), src.distance(v, c[i - 1])))
                .fold(T::zero(), T::max);
            worst = worst.max(lb_ratio(log_term, kl));
        }
        total = total + half * worst;
    }
    total
}

/// Both sides of the pull-count fact for gap `gap` at confidence `delta_prime`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactBound {
    /// Smallest `u` with `ci_iterated_log(u, delta') <= gap / 8`.
    pub direct: u64,
    /// `log(1/delta') log(2 log(2/gap)) / gap^2`, the closed form without `c`;
    /// `None` where `log(2 log(2/gap)) <= 0`.
    pub shape: Option<f64>,
}

impl FactBound {
    pub fn closed_form(&self, c: f64) -> Option<f64> {
        self.shape.map(|s| c * s)
    }

    /// The `c` at which the closed form equals the direct count.
    pub fn implied_constant(&self) -> Option<f64> {
        self.shape.map(|s| self.direct as f64 / s)
    }
}

pub fn fact_bound(gap: f64, delta_prime: f64) -> Result<FactBound> {
    if !(gap > 0.0 && gap.is_finite()) || !(delta_prime > 0.0 && delta_prime < 1.0) {
        return Err(Error::invalid(format!(
            "fact bound needs gap > 0 and delta' in (0, 1), got {gap}, {delta_prime}"
        )));
    }
    let target = gap / 8.0;
    let ok = |u: u64| ci_iterated_log(u, delta_prime) <= target;
    let mut hi = 1u64;
    while !ok(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2;
    // invariant: !ok(lo) unless lo == 0, ok(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let loglog = (2.0 * (2.0 / gap).ln()).ln();
    let shape = (loglog > 0.0).then(|| (1.0 / delta_prime).ln() * loglog / (gap * gap));
    Ok(FactBound { direct: hi, shape })
}

/// Gaps and confidences over which [`calibrate_fact_constant`] searches by default.
pub const FACT_GAPS: [f64; 8] = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0];
pub const FACT_DELTAS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-6];

/// The smallest `c` making the closed form dominate the direct count on the grid.
pub fn calibrate_fact_constant(gaps: &[f64], delta_primes: &[f64]) -> Result<f64> {
    let mut c: f64 = 0.0;
    for &g in gaps {
        for &d in delta_primes {
            if let Some(x) = fact_bound(g, d)?.implied_constant() {
                c = c.max(x);
            }
        }
    }
    Ok(c)
}

/// `sum_p gamma T*(d^p)` with `d^p` the stage-`p` box/arm means scaled by the noise.
/// Stages with a single remaining vertex contribute nothing.
pub fn tands_bound<T: Real, D: DistanceSource<T> + ?Sized>(
    traj: &GreedyTrajectory<T>,
    src: &D,
    sigma2: T,
    gamma: T,
    ascent: &AscentConfig<T>,
) -> Result<T> {
    if !(gamma >= T::one() && gamma <= T::lit(std::f64::consts::E / 2.0)) {
        return Err(Error::invalid(format!("gamma = {gamma} outside [1, e/2]")));
    }
    let n = src.num_points();
    let mut total = T::zero();
    for p in 1..traj.k() {
        let centers = &traj.centers[..p];
        let boxes: Vec<usize> = (0..n).filter(|v| !centers.contains(v)).collect();
        if boxes.len() < 2 {
            continue;
        }
        let rows: Vec<Vec<T>> = boxes
            .iter()
            .map(|&v| centers.iter().map(|&s| src.distance(v, s)).collect())
            .collect();
        let inst = MaximinInstance::from_rows(&rows)?.rescaled(sigma2)?;
        total = total + gamma * t_star(&inst, ascent)?.t_star;
    }
    Ok(total)
}

/// Every calculator evaluated on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct HardnessReport<T> {
    pub m_terms: BTreeMap<(usize, usize, usize), T>,
    /// `None` without a dimension count (distance-matrix input).
    pub ub_value: Option<T>,
    pub lb_value: T,
    /// `None` when no noise variance was given.
    pub tstar_sum: Option<T>,
    /// The constant used in `ub_value`.
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig<T> {
    pub k: usize,
    pub first_center: usize,
    pub delta: T,
    pub dims: Option<usize>,
    /// `None` calibrates it with [`calibrate_fact_constant`] on the default grid.
    pub c: Option<f64>,
    pub sigma2: Option<T>,
    pub gamma: T,
}

pub fn hardness_report<T: Real, D: DistanceSource<T> + ?Sized>(
    src: &D,
    cfg: &ReportConfig<T>,
) -> Result<HardnessReport<T>> {
    let traj = GreedyTrajectory::compute(src, cfg.k, cfg.first_center)?;
    let m_terms = hardness_terms(&traj, src);
    let c = match cfg.c {
        Some(c) => c,
        None => calibrate_fact_constant(&FACT_GAPS, &FACT_DELTAS)?,
    };
    let n = src.num_points();
    let ub_value = cfg
        .dims
        .map(|dims| dsucb_upper_bound(&traj, &m_terms, n, dims, cfg.delta, T::lit(c)));
    let lb_value = lower_bound(&traj, src, cfg.delta);
    let tstar_sum = match cfg.sigma2 {
        Some(s) => Some(tands_bound(
            &traj,
            src,
            s,
            cfg.gamma,
            &AscentConfig::default(),
        )?),
        None => None,
    };
    Ok(HardnessReport {
        m_terms,
        ub_value,
        lb_value,
        tstar_sum,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::greedy_exact;
    use crate::dataset::{generate_rademacher, DataSource, DistanceMatrix, PointSet};

    fn line() -> PointSet<f64> {
        PointSet::from_normalized(3, 1, vec![-0.5, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn trajectory_matches_greedy() {
        for seed in 0..10 {
            let ps = generate_rademacher::<f64>(12, 9, seed).unwrap();
            let traj = GreedyTrajectory::compute(&ps, 4, 0).unwrap();
            let g = greedy_exact(DataSource::Points(&ps), 4, 0).unwrap();
            assert_eq!(traj.centers, g.centers.as_slice());
            for p in 1..4 {
                let (v, d) = crate::dataset::bottleneck(&ps, &traj.centers[..p]).unwrap();
                assert_eq!(v, traj.centers[p]);
                assert_eq!(d, traj.bottleneck[p - 1]);
            }
        }
    }

    #[test]
    fn hardness_hand_example() {
        let ps = line();
        let traj = GreedyTrajectory::compute(&ps, 2, 0).unwrap();
        let terms = hardness_terms(&traj, &ps);
        assert_eq!(terms[&(1, 1, 1)], 0.75);
        // the bottleneck point against its nearest center
        assert_eq!(terms[&(2, 1, 1)], 0.0);
    }

    #[test]
    fn hardness_matches_two_branch_scan() {
        for seed in 0..5 {
            let ps = generate_rademacher::<f64>(10, 16, seed).unwrap();
            let traj = GreedyTrajectory::compute(&ps, 4, 0).unwrap();
            let terms = hardness_terms(&traj, &ps);
            for (&(v, i, p), &m) in &terms {
                let s = &traj.centers[..p];
                let dv = s
                    .iter()
                    .map(|&c| exact_d(&ps, v, c))
                    .fold(f64::INFINITY, f64::min);
                let dvs = (0..10)
                    .filter(|u| !s.contains(u))
                    .map(|u| {
                        s.iter()
                            .map(|&c| exact_d(&ps, u, c))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let d = exact_d(&ps, v, traj.centers[i - 1]);
                assert_eq!(m, (d - dv).max(dvs - d));
                assert!(m >= 0.0);
            }
        }
    }

    fn exact_d(ps: &PointSet<f64>, u: usize, v: usize) -> f64 {
        crate::dataset::exact_distance(ps, u, v)
    }

    #[test]
    fn upper_bound_clamps() {
        let ps = generate_rademacher::<f64>(8, 20, 1).unwrap();
        let traj = GreedyTrajectory::compute(&ps, 3, 0).unwrap();
        let terms = hardness_terms(&traj, &ps);
        let zeros: BTreeMap<_, _> = terms.keys().map(|&k| (k, 0.0)).collect();
        let ub0 = dsucb_upper_bound(&traj, &zeros, 8, 20, 0.1, 1.0);
        // 5 non-centers x 2 centers + 3 center pairs, each capped at 2m
        assert_eq!(ub0, 40.0 * 13.0);
        let ub = dsucb_upper_bound(&traj, &terms, 8, 20, 0.1, 1.0);
        assert!(ub <= ub0);
        let halved: BTreeMap<_, _> = terms.iter().map(|(&k, &m)| (k, m / 2.0)).collect();
        assert!(dsucb_upper_bound(&traj, &halved, 8, 20, 0.1, 1.0) >= ub);
    }

    #[test]
    fn lower_bound_limits() {
        let (ps, traj) = (0..)
            .map(|seed| {
                let ps = generate_rademacher::<f64>(8, 12, seed).unwrap();
                let traj = GreedyTrajectory::compute(&ps, 3, 0).unwrap();
                (ps, traj)
            })
            .find(|(ps, t)| t.unique_bottlenecks(ps))
            .unwrap();
        assert!(lower_bound(&traj, &ps, 0.1).is_finite());
        assert_eq!(lower_bound(&traj, &ps, 1.0 / 2.4), 0.0);
        let a = lower_bound(&traj, &ps, 0.1);
        let b = lower_bound(&traj, &ps, 0.01);
        assert!(a > 0.0 && b > a, "{a} {b}");
    }

    #[test]
    fn tied_bottleneck_is_unbounded() {
        let dm = DistanceMatrix::new(3, vec![0.0, 0.6, 0.6, 0.6, 0.0, 0.2, 0.6, 0.2, 0.0]).unwrap();
        let traj = GreedyTrajectory::compute(&dm, 2, 0).unwrap();
        assert!(!traj.unique_bottlenecks(&dm));
        assert_eq!(lower_bound(&traj, &dm, 0.1), f64::INFINITY);
    }

    #[test]
    fn lower_bound_grows_as_distances_approach() {
        // v = 1 competes with the bottleneck point 2 against center 0
        let make =
            |x: f64| DistanceMatrix::new(3, vec![0.0, x, 0.8, x, 0.0, 0.5, 0.8, 0.5, 0.0]).unwrap();
        let lb = |x| {
            let dm = make(x);
            let traj = GreedyTrajectory::compute(&dm, 2, 0).unwrap();
            lower_bound(&traj, &dm, 0.05)
        };
        assert!(lb(0.7) > lb(0.5));
        assert!(lb(0.5) > lb(0.3));
    }

    #[test]
    fn fact_bound_scaling() {
        let a = fact_bound(0.1, 1e-3).unwrap();
        let b = fact_bound(0.05, 1e-3).unwrap();
        let ratio = b.direct as f64 / a.direct as f64;
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
        assert!(ci_iterated_log(a.direct, 1e-3) <= 0.1 / 8.0);
        assert!(ci_iterated_log(a.direct - 1, 1e-3) > 0.1 / 8.0);
        assert!(fact_bound(3.0, 0.1).unwrap().shape.is_none());
        assert!(fact_bound(0.0, 0.1).is_err());
    }

    #[test]
    fn calibrated_constant_dominates_grid() {
        let c = calibrate_fact_constant(&FACT_GAPS, &FACT_DELTAS).unwrap();
        for &g in &FACT_GAPS {
            for &d in &FACT_DELTAS {
                let f = fact_bound(g, d).unwrap();
                if let Some(x) = f.closed_form(c) {
                    assert!(x >= f.direct as f64 * (1.0 - 1e-12));
                }
            }
        }
    }

    #[test]
    fn tands_bound_linearity() {
        let ps = generate_rademacher::<f64>(6, 8, 5).unwrap();
        let traj = GreedyTrajectory::compute(&ps, 2, 0).unwrap();
        let cfg = AscentConfig::with_iterations(2000);
        let one = tands_bound(&traj, &ps, 0.01, 1.0, &cfg).unwrap();
        let e2 = tands_bound(&traj, &ps, 0.01, std::f64::consts::E / 2.0, &cfg).unwrap();
        assert!((e2 / one - std::f64::consts::E / 2.0).abs() < 1e-9);
        assert!(tands_bound(&traj, &ps, 0.01, 2.0, &cfg).is_err());
    }
}
