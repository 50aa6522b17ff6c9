//! Confidence-bound solvers sharing one stage loop: DS-UCB, DS-TS, NS-TS and
//! the random-sampling baseline.

use rand::Rng;

use super::{check_model, Algorithm, RunConfig, RunResult, StageReport};
use crate::bandit::{
    ArmTable, BetaPosterior, CiConfig, CiFamily, GaussianPosterior, Posterior, RewardKind,
    StageState,
};
use crate::dataset::CenterSet;
use crate::error::{Error, Result};
use crate::oracles::{OracleModel, OracleSession};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
enum PosteriorRule<T> {
    None,
    /// Beta posterior fed by a Bernoulli draw with the raw reward as success probability.
    BetaConverted,
    /// Beta posterior fed by `{0, 1}` rewards directly.
    BetaDirect,
    Gaussian {
        sigma2: T,
    },
}

/// How the center arm of a chosen vertex is picked.
#[derive(Debug, Clone, Copy, PartialEq)]
enum CenterRule {
    Lcb,
    /// Posterior draw with probability `z`, LCB otherwise.
    Mixture,
}

pub(super) struct Engine<'s, 'a, T: Real> {
    session: &'s mut OracleSession<'a, T>,
    pub(super) arms: ArmTable<T>,
    pub(super) stage: StageState<T>,
    pub(super) ci: CiConfig<T>,
    max_pulls: Option<u64>,
    posterior: PosteriorRule<T>,
}

fn reward_kind<T: Real>(model: &OracleModel<T>) -> RewardKind<T> {
    match *model {
        OracleModel::NoisyDistance { sigma2 } => RewardKind::Gaussian { sigma2 },
        _ => RewardKind::Bounded,
    }
}

impl<'s, 'a, T: Real> Engine<'s, 'a, T> {
    pub(super) fn session(&mut self) -> &mut OracleSession<'a, T> {
        self.session
    }

    pub(super) fn center(&self, pos: usize) -> usize {
        self.stage.centers()[pos]
    }

    /// One oracle reward for arm `(v, pos)`, folded into the estimate and posterior.
    pub(super) fn pull(&mut self, v: usize, pos: usize) -> Result<()> {
        let c = self.center(pos);
        let r = self.session.query(v, c)?;
        let arm = self.arms.get_mut(v, pos);
        let before = arm.pulls();
        arm.update(r, &self.ci)?;
        let estimate = arm.estimate();
        match (self.posterior, arm.posterior.as_mut()) {
            (PosteriorRule::BetaConverted, Some(Posterior::Beta(b))) => {
                b.update(self.session.bernoulli_convert(r))
            }
            (PosteriorRule::BetaDirect, Some(Posterior::Beta(b))) => b.update(r > T::lit(0.5)),
            (PosteriorRule::Gaussian { sigma2 }, Some(Posterior::Gaussian(g))) => {
                g.update(estimate, before, sigma2)
            }
            _ => {}
        }
        Ok(())
    }

    fn make_exact(&mut self, v: usize, pos: usize) -> Result<()> {
        let d = self.session.query_exact(v, self.center(pos))?;
        self.arms.get_mut(v, pos).set_exact(d);
        Ok(())
    }

    /// Pulls the arm, or computes it exactly once it has reached the pull cap.
    fn advance(&mut self, v: usize, pos: usize) -> Result<()> {
        let arm = self.arms.get(v, pos);
        if arm.is_exact() {
            return Err(Error::ExactArm {
                v,
                s: self.center(pos),
            });
        }
        match self.max_pulls {
            Some(cap) if arm.pulls() >= cap => self.make_exact(v, pos),
            _ => self.pull(v, pos),
        }
    }

    /// One reward per non-center vertex against the newest center.
    pub(super) fn init_stage(&mut self) -> Result<()> {
        let pos = self.stage.centers().len() - 1;
        let rest: Vec<usize> = self.stage.remaining().collect();
        for v in rest {
            if self.max_pulls == Some(0) {
                self.make_exact(v, pos)?;
            } else {
                self.pull(v, pos)?;
            }
            self.stage.refresh(v, &self.arms);
        }
        Ok(())
    }

    /// `argmin_s L(d_{v,s})`; non-exact arms win ties, then the earlier center.
    fn argmin_lcb(&self, v: usize) -> usize {
        let p = self.stage.centers().len();
        (1..p).fold(0, |best, pos| {
            let (a, b) = (self.arms.get(v, pos), self.arms.get(v, best));
            let better = a.lcb() < b.lcb() || (a.lcb() == b.lcb() && b.is_exact() && !a.is_exact());
            if better {
                pos
            } else {
                best
            }
        })
    }

    /// `argmin` of posterior draws over the arms of `v` that are not yet exact.
    fn argmin_sample(&mut self, v: usize) -> Option<usize> {
        let p = self.stage.centers().len();
        let mut best: Option<(usize, T)> = None;
        for pos in 0..p {
            let arm = self.arms.get(v, pos);
            if arm.is_exact() {
                continue;
            }
            let theta = match arm.posterior {
                Some(post) => post.sample(self.session.control_rng()),
                None => arm.lcb(),
            };
            if best.is_none_or(|(_, b)| theta < b) {
                best = Some((pos, theta));
            }
        }
        best.map(|(pos, _)| pos)
    }

    fn choose_center(&mut self, v: usize, rule: CenterRule, z: T) -> usize {
        if rule == CenterRule::Mixture && z > T::zero() {
            let coin = T::sample_unit(self.session.control_rng()) < z;
            if coin {
                if let Some(pos) = self.argmin_sample(v) {
                    return pos;
                }
            }
        }
        self.argmin_lcb(v)
    }
}

struct Setup<T> {
    algorithm: Algorithm,
    family: CiFamily<T>,
    posterior: PosteriorRule<T>,
}

/// The stage loop: initialization pass, `step` until the separation test holds,
/// then the leader joins the centers.
fn run_staged<T: Real>(
    session: &mut OracleSession<'_, T>,
    cfg: &RunConfig<T>,
    setup: Setup<T>,
    mut step: impl FnMut(&mut Engine<'_, '_, T>) -> Result<()>,
) -> Result<RunResult> {
    check_model(setup.algorithm, session)?;
    let n = session.num_points();
    cfg.validate(n)?;
    let model = session.model();
    let ci = CiConfig::new(
        cfg.ci.unwrap_or(setup.family),
        cfg.delta_prime(n),
        reward_kind(&model),
    )?;
    let max_pulls = match (cfg.max_pulls, model) {
        (Some(cap), _) => Some(cap),
        (None, OracleModel::DimensionSampling) => Some(session.dims() as u64),
        (None, _) => None,
    };
    let prior = match setup.posterior {
        PosteriorRule::None => None,
        PosteriorRule::BetaConverted | PosteriorRule::BetaDirect => {
            Some(Posterior::Beta(BetaPosterior::new()))
        }
        PosteriorRule::Gaussian { .. } => Some(Posterior::Gaussian(GaussianPosterior::new())),
    };
    let first = cfg.pick_first(session);
    let mut eng = Engine {
        session,
        arms: ArmTable::new(n, cfg.k, prior),
        stage: StageState::new(n, first)?,
        ci,
        max_pulls,
        posterior: setup.posterior,
    };

    let mut stages = Vec::with_capacity(cfg.k - 1);
    for p in 1..cfg.k {
        let start = eng.session.query_count();
        eng.init_stage().map_err(|e| e.in_stage(p))?;
        let mut report = StageReport::default();
        while !eng.stage.should_stop() {
            if eng.session.query_count() - start >= cfg.stage_cap {
                return Err(Error::StageCap {
                    stage: p,
                    cap: cfg.stage_cap,
                });
            }
            step(&mut eng).map_err(|e| e.in_stage(p))?;
            report.rounds += 1;
            if cfg.trace_margins {
                report.margins.push(eng.stage.margin().to_f64_lossy());
            }
        }
        let next = eng.stage.leader().ok_or(Error::NoRemainingVertex)?;
        eng.session.mark_stage();
        report.queries = eng.session.query_count() - start;
        report.final_margin = eng.stage.margin().to_f64_lossy();
        stages.push(report);
        eng.stage.add_center(next)?;
    }

    let centers = CenterSet::from_indices(eng.stage.centers().to_vec(), n)?;
    Ok(RunResult {
        algorithm: setup.algorithm,
        centers,
        ledger: eng.session.ledger(),
        stages,
        matched_greedy: None,
    })
}

fn ucb_step<T: Real>(eng: &mut Engine<'_, '_, T>, rule: CenterRule, z: T) -> Result<()> {
    let v = eng.stage.best_upper().ok_or(Error::NoRemainingVertex)?;
    let pos = eng.choose_center(v, rule, z);
    eng.advance(v, pos)?;
    eng.stage.refresh(v, &eng.arms);
    Ok(())
}

/// UCB over vertices, LCB over centers, `C_alpha` intervals by default.
pub fn ds_ucb<T: Real>(
    session: &mut OracleSession<'_, T>,
    cfg: &RunConfig<T>,
) -> Result<RunResult> {
    let setup = Setup {
        algorithm: Algorithm::DsUcb,
        family: CiFamily::CAlpha {
            c_alpha: cfg.c_alpha,
        },
        posterior: PosteriorRule::None,
    };
    run_staged(session, cfg, setup, |eng| {
        ucb_step(eng, CenterRule::Lcb, T::zero())
    })
}

/// UCB over vertices, a Beta-posterior / LCB mixture over centers, KL-racing intervals.
pub fn ds_ts<T: Real>(session: &mut OracleSession<'_, T>, cfg: &RunConfig<T>) -> Result<RunResult> {
    let setup = Setup {
        algorithm: Algorithm::DsTs,
        family: CiFamily::KlRacing {
            alpha: T::lit(crate::bandit::KL_ALPHA),
            k1: T::lit(crate::bandit::KL_K1),
        },
        posterior: PosteriorRule::BetaConverted,
    };
    let z = cfg.z;
    run_staged(session, cfg, setup, |eng| {
        ucb_step(eng, CenterRule::Mixture, z)
    })
}

/// Two arms per round: one for the vertex with the largest estimate, one for the
/// best upper bound among the rest, each center picked by a fresh posterior/LCB coin.
pub fn ns_ts<T: Real>(session: &mut OracleSession<'_, T>, cfg: &RunConfig<T>) -> Result<RunResult> {
    let posterior = match session.model() {
        OracleModel::NoisyDistance { sigma2 } => PosteriorRule::Gaussian { sigma2 },
        _ => PosteriorRule::BetaDirect,
    };
    let setup = Setup {
        algorithm: Algorithm::NsTs,
        family: CiFamily::KlRacing {
            alpha: T::lit(crate::bandit::KL_ALPHA),
            k1: T::lit(crate::bandit::KL_K1),
        },
        posterior,
    };
    let z = cfg.z;
    run_staged(session, cfg, setup, |eng| {
        let v1 = eng.stage.best_estimate().ok_or(Error::NoRemainingVertex)?;
        let v2 = eng.stage.best_upper_excluding(v1);
        for v in std::iter::once(v1).chain(v2) {
            let pos = eng.choose_center(v, CenterRule::Mixture, z);
            eng.advance(v, pos)?;
            eng.stage.refresh(v, &eng.arms);
        }
        Ok(())
    })
}

/// Pulls a uniformly random arm that is not yet exact each round; same intervals
/// and stopping test as DS-UCB under dimension sampling.
pub fn random_sampling<T: Real>(
    session: &mut OracleSession<'_, T>,
    cfg: &RunConfig<T>,
) -> Result<RunResult> {
    let family = match session.model() {
        OracleModel::DimensionSampling => CiFamily::CAlpha {
            c_alpha: cfg.c_alpha,
        },
        _ => CiFamily::KlRacing {
            alpha: T::lit(crate::bandit::KL_ALPHA),
            k1: T::lit(crate::bandit::KL_K1),
        },
    };
    let setup = Setup {
        algorithm: Algorithm::Random,
        family,
        posterior: PosteriorRule::None,
    };
    run_staged(session, cfg, setup, |eng| {
        let rest: Vec<usize> = eng.stage.remaining().collect();
        let p = eng.stage.centers().len();
        let open: Vec<(usize, usize)> = rest
            .iter()
            .flat_map(|&v| (0..p).map(move |pos| (v, pos)))
            .filter(|&(v, pos)| !eng.arms.get(v, pos).is_exact())
            .collect();
        if open.is_empty() {
            return Err(Error::invalid(
                "every arm is exact but the stage has not separated",
            ));
        }
        let (v, pos) = open[eng.session().control_rng().random_range(0..open.len())];
        eng.advance(v, pos)?;
        eng.stage.refresh(v, &eng.arms);
        Ok(())
    })
}
