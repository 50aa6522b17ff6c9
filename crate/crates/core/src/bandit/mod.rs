//! Per-arm statistics, confidence intervals, posteriors, and the stage aggregates.

pub mod arm;
pub mod ci;
pub mod heap;
pub mod kl;
pub mod posterior;
pub mod stage;

pub use arm::{ArmState, ArmTable};
pub use ci::{
    ci_calpha, ci_calpha_prime, ci_iterated_log, gaussian_racing_half_width, kl_racing_bounds,
    kl_racing_threshold, CiConfig, CiFamily, RewardKind, C_ALPHA, KL_ALPHA, KL_K1,
};
pub use heap::IndexedMaxHeap;
pub use kl::{kl_bernoulli, kl_gaussian, kl_gaussian_var};
pub use posterior::{BetaPosterior, GaussianPosterior, Posterior};
pub use stage::StageState;
