//! Confidence-interval families.

use super::kl::kl_bernoulli;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default KL-racing exponent.
pub const KL_ALPHA: f64 = 1.1;
/// Default KL-racing constant, `1 + 1/(alpha - 1) + 0.01`.
pub const KL_K1: f64 = 11.01;
/// Default `C_alpha` for the empirical iterated-log width.
pub const C_ALPHA: f64 = 0.1;
const BISECTION_TOL: f64 = 1e-9;
const BISECTION_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CiFamily<T> {
    /// `sqrt(2 beta / t)` with `beta = 2 log(125 log(1.12 t) / delta')`.
    IteratedLog,
    /// `sqrt(C_alpha log(1 + (1 + log t) / delta') / t)`.
    CAlpha { c_alpha: T },
    /// Bounds solving `t kl(d, q) = log(k1 t^alpha / delta')`.
    KlRacing { alpha: T, k1: T },
}

/// The reward scale, which decides clamping and which KL the racing bounds use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardKind<T> {
    /// Rewards in `[0, 1]`; racing uses Bernoulli KL and bounds are clipped to `[0, 1]`.
    Bounded,
    /// Gaussian rewards with the given noise variance; racing uses Gaussian KL.
    Gaussian { sigma2: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiConfig<T> {
    pub family: CiFamily<T>,
    pub delta_prime: T,
    pub reward: RewardKind<T>,
}

impl<T: Real> CiConfig<T> {
    pub fn new(family: CiFamily<T>, delta_prime: T, reward: RewardKind<T>) -> Result<Self> {
        if !(delta_prime > T::zero() && delta_prime < T::one()) {
            return Err(Error::invalid(format!(
                "delta' = {delta_prime} outside (0, 1)"
            )));
        }
        match family {
            CiFamily::CAlpha { c_alpha } if !(c_alpha > T::zero()) => {
                return Err(Error::invalid(format!(
                    "C_alpha = {c_alpha} must be positive"
                )))
            }
            CiFamily::KlRacing { alpha, k1 } => {
                if !(alpha > T::one()) || !(k1 > T::one() + T::one() / (alpha - T::one())) {
                    return Err(Error::invalid(format!(
                        "KL racing needs alpha > 1 and k1 > 1 + 1/(alpha - 1), got {alpha}, {k1}"
                    )));
                }
            }
            _ => {}
        }
        if let RewardKind::Gaussian { sigma2 } = reward {
            if !(sigma2 >= T::zero()) {
                return Err(Error::invalid(format!("sigma2 = {sigma2} must be >= 0")));
            }
        }
        Ok(Self {
            family,
            delta_prime,
            reward,
        })
    }

    pub fn kl_racing_default(delta_prime: T, reward: RewardKind<T>) -> Result<Self> {
        Self::new(
            CiFamily::KlRacing {
                alpha: T::lit(KL_ALPHA),
                k1: T::lit(KL_K1),
            },
            delta_prime,
            reward,
        )
    }

    /// `(L, U)` for an arm with estimate `dhat` after `t` pulls. `t = 0` is unbounded.
    pub fn bounds(&self, dhat: T, t: u64) -> (T, T) {
        if t == 0 {
            return (T::neg_infinity(), T::infinity());
        }
        let (lo, hi) = match (self.family, self.reward) {
            (CiFamily::IteratedLog, _) => {
                let a = ci_iterated_log(t, self.delta_prime);
                (dhat - a, dhat + a)
            }
            (CiFamily::CAlpha { c_alpha }, _) => {
                let a = ci_calpha_prime(t, self.delta_prime, c_alpha);
                (dhat - a, dhat + a)
            }
            (CiFamily::KlRacing { alpha, k1 }, RewardKind::Bounded) => {
                let thr = kl_racing_threshold(t, alpha, k1, self.delta_prime);
                kl_racing_bounds(dhat, t, thr)
            }
            (CiFamily::KlRacing { alpha, k1 }, RewardKind::Gaussian { sigma2 }) => {
                let thr = kl_racing_threshold(t, alpha, k1, self.delta_prime);
                let a = gaussian_racing_half_width(t, sigma2, thr);
                (dhat - a, dhat + a)
            }
        };
        match self.reward {
            RewardKind::Bounded => (lo.max(T::zero()), hi.min(T::one())),
            RewardKind::Gaussian { .. } => (lo, hi),
        }
    }
}

/// Anytime iterated-log half-width. The inner log's argument is floored at `e`.
pub fn ci_iterated_log<T: Real>(t: u64, delta_prime: T) -> T {
    if t == 0 {
        return T::infinity();
    }
    let tt = T::from_u64_lossy(t);
    let inner = (T::lit(1.12) * tt).max(T::lit(std::f64::consts::E)).ln();
    let beta = T::lit(2.0) * (T::lit(125.0) * inner / delta_prime).ln();
    (T::lit(2.0) * beta / tt).sqrt()
}

/// The empirical `C_alpha` half-width for `n` points at confidence `delta`.
pub fn ci_calpha<T: Real>(u: u64, n: usize, delta: T, c_alpha: T) -> T {
    let n2 = T::from_usize_lossy(n * n);
    ci_calpha_prime(u, delta / n2, c_alpha)
}

/// [`ci_calpha`] written against `delta' = delta / n^2`.
pub fn ci_calpha_prime<T: Real>(u: u64, delta_prime: T, c_alpha: T) -> T {
    if u == 0 {
        return T::infinity();
    }
    let uu = T::from_u64_lossy(u);
    let arg = T::one() + (T::one() + uu.ln()) / delta_prime;
    (c_alpha * arg.ln() / uu).sqrt()
}

/// `log(k1 t^alpha / delta')`.
pub fn kl_racing_threshold<T: Real>(t: u64, alpha: T, k1: T, delta_prime: T) -> T {
    (k1 / delta_prime).ln() + alpha * T::from_u64_lossy(t).ln()
}

/// `(L, U)` with `t kl(dhat, q) <= threshold` for Bernoulli KL, by bisection.
pub fn kl_racing_bounds<T: Real>(dhat: T, t: u64, threshold: T) -> (T, T) {
    let d = dhat.max(T::zero()).min(T::one());
    if t == 0 {
        return (T::zero(), T::one());
    }
    if threshold <= T::zero() {
        return (d, d);
    }
    let tt = T::from_u64_lossy(t);
    let within = |q: T| tt * kl_bernoulli(d, q) <= threshold;
    let tol = T::lit(BISECTION_TOL);
    let mut upper = if within(T::one()) {
        T::one()
    } else {
        bisect(d, T::one(), within)
    };
    let mut lower = if within(T::zero()) {
        T::zero()
    } else {
        bisect(d, T::zero(), within)
    };
    // Within tolerance of the boundary the root is the boundary.
    if T::one() - upper <= tol {
        upper = T::one();
    }
    if lower <= tol {
        lower = T::zero();
    }
    (lower, upper)
}

/// Moves from the feasible end `inside` toward the infeasible end `outside` and
/// returns the last feasible point found.
fn bisect<T: Real>(mut inside: T, mut outside: T, within: impl Fn(T) -> bool) -> T {
    let tol = T::lit(BISECTION_TOL);
    for _ in 0..BISECTION_MAX_ITER {
        if (outside - inside).abs() <= tol {
            break;
        }
        let mid = (inside + outside) / T::lit(2.0);
        if within(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Closed-form Gaussian racing half-width `sqrt(2 sigma2 threshold / t)`.
pub fn gaussian_racing_half_width<T: Real>(t: u64, sigma2: T, threshold: T) -> T {
    if t == 0 {
        return T::infinity();
    }
    (T::lit(2.0) * sigma2 * threshold.max(T::zero()) / T::from_u64_lossy(t)).sqrt()
}
