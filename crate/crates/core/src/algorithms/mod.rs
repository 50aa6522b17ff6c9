//! The k-center solvers. Each consumes an [`OracleSession`] and returns the
//! ordered centers together with the query ledger.

mod tands;
mod ucb;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub use tands::{
    glr_statistic, maximin_bandit, ns_tands, stop_statistic, stop_statistic_exhaustive,
    BanditOutcome, ExplorationRate, GlrKl, GlrTable, MaximinArms, TandsConfig, TandsOutcome,
    TrackAndStop,
};
pub use ucb::{ds_ts, ds_ucb, ns_ts, random_sampling};

use crate::bandit::CiFamily;
use crate::dataset::{CenterSet, DataSource};
use crate::error::{Error, Result};
use crate::oracles::{OracleModel, OracleSession, QueryLedger};
use crate::scalar::Real;

/// Default per-stage query cap.
pub const STAGE_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Greedy,
    Random,
    DsUcb,
    DsTs,
    NsTs,
    NsTands,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Greedy,
        Algorithm::Random,
        Algorithm::DsUcb,
        Algorithm::DsTs,
        Algorithm::NsTs,
        Algorithm::NsTands,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Random => "random",
            Algorithm::DsUcb => "ds-ucb",
            Algorithm::DsTs => "ds-ts",
            Algorithm::NsTs => "ns-ts",
            Algorithm::NsTands => "ns-tands",
        }
    }

    /// Whether the algorithm can run under `model`.
    pub fn supports<T: Real>(self, model: &OracleModel<T>) -> bool {
        match self {
            Algorithm::Greedy | Algorithm::Random => true,
            Algorithm::DsUcb | Algorithm::DsTs => matches!(model, OracleModel::DimensionSampling),
            Algorithm::NsTs | Algorithm::NsTands => {
                !matches!(model, OracleModel::DimensionSampling)
            }
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FirstCenter {
    Index(usize),
    /// Drawn uniformly from the session's control stream.
    #[default]
    Random,
}

impl FromStr for FirstCenter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "random" {
            return Ok(FirstCenter::Random);
        }
        s.parse().map(FirstCenter::Index).map_err(|_| {
            Error::invalid(format!(
                "first center must be an index or `random`, got `{s}`"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub k: usize,
    pub delta: T,
    pub first_center: FirstCenter,
    /// Overrides the algorithm's default interval family.
    pub ci: Option<CiFamily<T>>,
    pub c_alpha: T,
    /// Probability of a posterior draw (vs. the LCB) when picking the center arm.
    pub z: T,
    /// Overrides the per-arm pull cap (`m` for dimension sampling, none otherwise).
    /// `Some(0)` computes every arm exactly on first touch.
    pub max_pulls: Option<u64>,
    pub tands: TandsConfig,
    pub stage_cap: u64,
    /// Record the stopping margin after every round.
    pub trace_margins: bool,
}

impl<T: Real> RunConfig<T> {
    pub fn new(k: usize, delta: T) -> Self {
        Self {
            k,
            delta,
            first_center: FirstCenter::Random,
            ci: None,
            c_alpha: T::lit(crate::bandit::C_ALPHA),
            z: T::zero(),
            max_pulls: None,
            tands: TandsConfig::default(),
            stage_cap: STAGE_CAP,
            trace_margins: false,
        }
    }

    pub fn with_first_center(mut self, first: usize) -> Self {
        self.first_center = FirstCenter::Index(first);
        self
    }

    pub fn with_z(mut self, z: T) -> Self {
        self.z = z;
        self
    }

    /// `delta / n^2`.
    pub fn delta_prime(&self, n: usize) -> T {
        self.delta / T::from_usize_lossy(n * n)
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::invalid(format!("k = {} with n = {n}", self.k)));
        }
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return Err(Error::invalid(format!(
                "delta = {} outside (0, 1)",
                self.delta
            )));
        }
        if !(self.z >= T::zero() && self.z <= T::one()) {
            return Err(Error::invalid(format!("z = {} outside [0, 1]", self.z)));
        }
        if let FirstCenter::Index(i) = self.first_center {
            if i >= n {
                return Err(Error::IndexOutOfBounds { index: i, len: n });
            }
        }
        Ok(())
    }

    pub(crate) fn pick_first<U: Real>(&self, session: &mut OracleSession<'_, U>) -> usize {
        match self.first_center {
            FirstCenter::Index(i) => i,
            FirstCenter::Random => {
                let n = session.num_points();
                session.control_rng().random_range(0..n)
            }
        }
    }
}

/// What happened in one stage (the search for one additional center).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageReport {
    /// Adaptive rounds after the initialization pass.
    pub rounds: u64,
    pub queries: u64,
    /// `max U - L(v^L)` at exit for the confidence-bound algorithms, `beta - Z` for Track-and-Stop.
    pub final_margin: f64,
    pub margins: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub centers: CenterSet,
    pub ledger: QueryLedger,
    pub stages: Vec<StageReport>,
    /// Filled in by callers that compare against the exact greedy run.
    pub matched_greedy: Option<bool>,
}

impl RunResult {
    pub fn queries(&self) -> u64 {
        self.ledger.total
    }
}

/// Runs `algorithm` on `session`.
pub fn run<T: Real>(
    algorithm: Algorithm,
    session: &mut OracleSession<'_, T>,
    cfg: &RunConfig<T>,
) -> Result<RunResult> {
    match algorithm {
        Algorithm::Greedy => greedy(session, cfg),
        Algorithm::Random => random_sampling(session, cfg),
        Algorithm::DsUcb => ds_ucb(session, cfg),
        Algorithm::DsTs => ds_ts(session, cfg),
        Algorithm::NsTs => ns_ts(session, cfg),
        Algorithm::NsTands => ns_tands(session, cfg),
    }
}

pub(crate) fn check_model<T: Real>(
    algorithm: Algorithm,
    session: &OracleSession<'_, T>,
) -> Result<()> {
    if algorithm.supports(&session.model()) {
        Ok(())
    } else {
        Err(Error::ModelMismatch(format!(
            "{algorithm} cannot run on a `{}` oracle",
            session.model().name()
        )))
    }
}

/// Farthest-first greedy with exact distances. Every stage computes the distance
/// from each non-center vertex to the newest center, charged `m` queries apiece,
/// so the total is `m * sum_{p=1}^{k-1} (n - p)`.
pub fn greedy<T: Real>(
    session: &mut OracleSession<'_, T>,
    cfg: &RunConfig<T>,
) -> Result<RunResult> {
    let n = session.num_points();
    cfg.validate(n)?;
    let first = cfg.pick_first(session);
    let mut centers = CenterSet::new();
    centers.push(first, n)?;
    let mut nearest = vec![T::infinity(); n];
    let mut stages = Vec::with_capacity(cfg.k.saturating_sub(1));
    while centers.len() < cfg.k {
        let before = session.query_count();
        let newest = centers.last().expect("non-empty");
        let mut best: Option<(usize, T)> = None;
        for v in 0..n {
            if centers.contains(v) {
                continue;
            }
            let d = session.query_exact(v, newest)?;
            nearest[v] = nearest[v].min(d);
            if best.is_none_or(|(_, b)| nearest[v] > b) {
                best = Some((v, nearest[v]));
            }
        }
        let (next, _) = best.ok_or(Error::NoRemainingVertex)?;
        session.mark_stage();
        stages.push(StageReport {
            queries: session.query_count() - before,
            ..StageReport::default()
        });
        centers.push(next, n)?;
    }
    Ok(RunResult {
        algorithm: Algorithm::Greedy,
        centers,
        ledger: session.ledger(),
        stages,
        matched_greedy: None,
    })
}

/// Greedy on a ground truth directly, with the same cost accounting as [`greedy`].
pub fn greedy_exact<T: Real>(
    source: DataSource<'_, T>,
    k: usize,
    first_center: usize,
) -> Result<RunResult> {
    // The model is irrelevant: greedy only asks for exact distances.
    let model = match source {
        DataSource::Points(_) => OracleModel::DimensionSampling,
        DataSource::Matrix(_) => OracleModel::BernoulliDistance,
    };
    let mut session = OracleSession::new(source, model, 0)?;
    let cfg = RunConfig::new(k, T::lit(0.5)).with_first_center(first_center);
    greedy(&mut session, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{bottleneck_value, PointSet};

    #[test]
    fn greedy_examples() {
        let ps = PointSet::from_normalized(3, 1, vec![-0.5f64, 0.0, 0.5]).unwrap();
        let r = greedy_exact(DataSource::Points(&ps), 2, 0).unwrap();
        assert_eq!(r.centers.as_slice(), &[0, 2]);
        let r = greedy_exact(DataSource::Points(&ps), 3, 0).unwrap();
        assert_eq!(r.centers.as_slice(), &[0, 2, 1]);
        assert_eq!(r.ledger.total, 2 + 1);
        assert_eq!(r.ledger.per_stage, vec![2, 1]);
        assert_eq!(bottleneck_value(&ps, r.centers.as_slice()), 0.0);
    }

    #[test]
    fn greedy_cost_model() {
        let ps = crate::dataset::generate_rademacher::<f64>(10, 7, 1).unwrap();
        let r = greedy_exact(DataSource::Points(&ps), 4, 0).unwrap();
        assert_eq!(r.ledger.total, 7 * (9 + 8 + 7));
    }

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("nope".parse::<Algorithm>().is_err());
        assert_eq!(
            "random".parse::<FirstCenter>().unwrap(),
            FirstCenter::Random
        );
        assert_eq!("3".parse::<FirstCenter>().unwrap(), FirstCenter::Index(3));
    }

    #[test]
    fn k_equal_one_is_free() {
        let ps = PointSet::from_normalized(3, 1, vec![-0.5f64, 0.0, 0.5]).unwrap();
        let mut s = OracleSession::from_points(&ps, OracleModel::DimensionSampling, 0).unwrap();
        for a in [
            Algorithm::Greedy,
            Algorithm::Random,
            Algorithm::DsUcb,
            Algorithm::DsTs,
        ] {
            let r = run(a, &mut s, &RunConfig::new(1, 0.1).with_first_center(1)).unwrap();
            assert_eq!(r.centers.as_slice(), &[1]);
            assert_eq!(r.ledger.total, 0);
        }
    }
}
