//! Optimal sampling weights for the maximin bandit: boxes of arms where the
//! target is the box whose smallest mean is largest.
//!
//! The characteristic time `T*(mu)` is the inverse of `max f(omega)` over the
//! restricted simplex, solved here by entropic mirror ascent.

use crate::bandit::kl_gaussian;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// An `a x b` table of unit-variance Gaussian arm means (box `i`, arm `j`).
#[derive(Debug, Clone, PartialEq)]
pub struct MaximinInstance<T> {
    a: usize,
    b: usize,
    mu: Vec<T>,
}

impl<T: Real> MaximinInstance<T> {
    pub fn new(a: usize, b: usize, mu: Vec<T>) -> Result<Self> {
        if a < 2 || b < 1 {
            return Err(Error::invalid(format!(
                "maximin instance needs a >= 2, b >= 1, got {a}x{b}"
            )));
        }
        if mu.len() != a * b {
            return Err(Error::invalid(format!(
                "{} means for a {a}x{b} instance",
                mu.len()
            )));
        }
        if let Some(idx) = mu.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: idx / b,
                dim: idx % b,
            });
        }
        Ok(Self { a, b, mu })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let b = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != b) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(rows.len(), b, rows.concat())
    }

    pub fn boxes(&self) -> usize {
        self.a
    }

    pub fn arms(&self) -> usize {
        self.b
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.mu[i * self.b + j]
    }

    pub fn means(&self) -> &[T] {
        &self.mu
    }

    fn row_min(&self, i: usize) -> T {
        self.mu[i * self.b..(i + 1) * self.b]
            .iter()
            .fold(T::infinity(), |m, &x| m.min(x))
    }

    /// `argmax_i min_j mu_{i,j}`, lowest index on ties.
    pub fn maximin_box(&self) -> usize {
        (1..self.a).fold(0, |best, i| {
            if self.row_min(i) > self.row_min(best) {
                i
            } else {
                best
            }
        })
    }

    /// The same instance measured in noise standard deviations, so that unit-variance
    /// KL applies to rewards with variance `sigma2`.
    pub fn rescaled(&self, sigma2: T) -> Result<Self> {
        if !(sigma2 > T::zero()) {
            return Err(Error::invalid(format!(
                "rescaling needs sigma2 > 0, got {sigma2}"
            )));
        }
        let s = sigma2.sqrt();
        Ok(Self {
            a: self.a,
            b: self.b,
            mu: self.mu.iter().map(|&x| x / s).collect(),
        })
    }

    /// Largest pairwise unit-variance KL between any two means.
    pub fn max_pairwise_kl(&self) -> T {
        let lo = self.mu.iter().fold(T::infinity(), |m, &x| m.min(x));
        let hi = self.mu.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
        kl_gaussian(lo, hi)
    }
}

/// Nonnegative weights over the `a x b` arms, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T> {
    a: usize,
    b: usize,
    w: Vec<T>,
}

impl<T: Real> WeightMatrix<T> {
    pub fn zeros(a: usize, b: usize) -> Self {
        Self {
            a,
            b,
            w: vec![T::zero(); a * b],
        }
    }

    pub fn from_vec(a: usize, b: usize, w: Vec<T>) -> Result<Self> {
        if w.len() != a * b {
            return Err(Error::invalid(format!("{} weights for {a}x{b}", w.len())));
        }
        Ok(Self { a, b, w })
    }

    /// `1/(a+b-1)` on the canonical support: all of box 0 and arm 0 of every other box.
    pub fn uniform_support(a: usize, b: usize) -> Self {
        let mut w = Self::zeros(a, b);
        let x = T::one() / T::from_usize_lossy(a + b - 1);
        for j in 0..b {
            w.set(0, j, x);
        }
        for i in 1..a {
            w.set(i, 0, x);
        }
        w
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.w[i * self.b + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: T) {
        self.w[i * self.b + j] = x;
    }

    pub fn rows(&self) -> usize {
        self.a
    }

    pub fn cols(&self) -> usize {
        self.b
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn sum(&self) -> T {
        self.w.iter().copied().sum()
    }

    /// True when every entry off the canonical support is exactly zero.
    pub fn on_canonical_support(&self) -> bool {
        (1..self.a).all(|i| (1..self.b).all(|j| self.get(i, j) == T::zero()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.w
            .iter()
            .zip(&other.w)
            .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
    }
}

/// An instance relabeled so box 0 is the maximin box, rows are in decreasing
/// order of their minimum, and arms increase within each box.
#[derive(Debug, Clone, PartialEq)]
pub struct Canonical<T> {
    pub instance: MaximinInstance<T>,
    /// `rows[r]` is the original box at canonical row `r`.
    pub rows: Vec<usize>,
    /// `cols[r][c]` is the original arm at canonical position `(r, c)`.
    pub cols: Vec<Vec<usize>>,
}

impl<T: Real> Canonical<T> {
    pub fn is_identity(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, &r)| i == r)
            && self
                .cols
                .iter()
                .all(|c| c.iter().enumerate().all(|(j, &x)| j == x))
    }

    /// Maps canonical weights back to the original labels.
    pub fn to_original(&self, w: &WeightMatrix<T>) -> WeightMatrix<T> {
        let mut out = WeightMatrix::zeros(w.a, w.b);
        for (r, &i) in self.rows.iter().enumerate() {
            for (c, &j) in self.cols[r].iter().enumerate() {
                out.set(i, j, w.get(r, c));
            }
        }
        out
    }

    /// Maps weights in original labels into canonical labels.
    pub fn from_original(&self, w: &WeightMatrix<T>) -> WeightMatrix<T> {
        let mut out = WeightMatrix::zeros(w.a, w.b);
        for (r, &i) in self.rows.iter().enumerate() {
            for (c, &j) in self.cols[r].iter().enumerate() {
                out.set(r, c, w.get(i, j));
            }
        }
        out
    }
}

/// Sorts boxes by decreasing minimum mean and arms by increasing mean (both stable).
pub fn canonicalize<T: Real>(inst: &MaximinInstance<T>) -> Canonical<T> {
    let (a, b) = (inst.a, inst.b);
    let cols: Vec<Vec<usize>> = (0..a)
        .map(|i| {
            let mut order: Vec<usize> = (0..b).collect();
            order.sort_by(|&x, &y| inst.get(i, x).partial_cmp(&inst.get(i, y)).unwrap());
            order
        })
        .collect();
    let mut rows: Vec<usize> = (0..a).collect();
    rows.sort_by(|&x, &y| inst.row_min(y).partial_cmp(&inst.row_min(x)).unwrap());
    let mut mu = Vec::with_capacity(a * b);
    for &i in &rows {
        for &j in &cols[i] {
            mu.push(inst.get(i, j));
        }
    }
    let cols = rows.iter().map(|&i| cols[i].clone()).collect();
    Canonical {
        instance: MaximinInstance { a, b, mu },
        rows,
        cols,
    }
}

fn pair_term<T: Real>(x: T, wx: T, y: T, wy: T) -> (T, T) {
    let total = wx + wy;
    if total <= T::zero() {
        return (T::zero(), x);
    }
    let lambda = (x * wx + y * wy) / total;
    (
        wx * kl_gaussian(x, lambda) + wy * kl_gaussian(y, lambda),
        lambda,
    )
}

/// `f(omega)` on a canonical instance and the binding pair `(i*, j*)`, `i* >= 1`.
/// Pairs with no weight contribute their limit value `0`. Ties go to the first pair
/// in row-major order.
pub fn objective_f<T: Real>(inst: &MaximinInstance<T>, w: &WeightMatrix<T>) -> (T, (usize, usize)) {
    let mut best = (T::infinity(), (1, 0));
    for i in 1..inst.a {
        let (y, wy) = (inst.get(i, 0), w.get(i, 0));
        for j in 0..inst.b {
            let (v, _) = pair_term(inst.get(0, j), w.get(0, j), y, wy);
            if v < best.0 {
                best = (v, (i, j));
            }
        }
    }
    best
}

/// `l*(omega)`: unit-variance KL between `mu` and the alternative that merges the
/// binding pair at its weighted mean. Non-zero only at `(0, j*)` and `(i*, 0)`.
pub fn supergradient<T: Real>(inst: &MaximinInstance<T>, w: &WeightMatrix<T>) -> WeightMatrix<T> {
    let (_, (i, j)) = objective_f(inst, w);
    let mut g = WeightMatrix::zeros(inst.a, inst.b);
    let (x, y) = (inst.get(0, j), inst.get(i, 0));
    let (_, lambda) = pair_term(x, w.get(0, j), y, w.get(i, 0));
    g.set(0, j, kl_gaussian(x, lambda));
    g.set(i, 0, kl_gaussian(y, lambda));
    g
}

/// Mirror-ascent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig<T> {
    /// Iteration count `Z`.
    pub iterations: usize,
    /// Lipschitz constant; `None` uses the largest pairwise KL plus `1e-6`.
    pub lipschitz: Option<T>,
    /// Return the iterate average instead of the last iterate.
    pub averaging: bool,
}

impl<T: Real> Default for AscentConfig<T> {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            lipschitz: None,
            averaging: true,
        }
    }
}

impl<T: Real> AscentConfig<T> {
    pub fn with_iterations(iterations: usize) -> Self {
        Self {
            iterations,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult<T> {
    /// Weights in the labels of the instance passed in.
    pub omega: WeightMatrix<T>,
    pub value: T,
    /// `1/f`, infinite when `f = 0`.
    pub t_star: T,
    pub lipschitz: T,
}

/// The adaptive Lipschitz constant used when none is configured.
pub fn default_lipschitz<T: Real>(inst: &MaximinInstance<T>) -> T {
    inst.max_pairwise_kl() + T::lit(1e-6)
}

/// Guaranteed suboptimality of the averaged iterate after `iterations` steps.
pub fn rate_envelope<T: Real>(lipschitz: T, a: usize, b: usize, iterations: usize) -> T {
    let k = T::from_usize_lossy(a + b - 1);
    lipschitz * (T::lit(2.0) * k.ln() / T::from_usize_lossy(iterations)).sqrt()
}

/// Entropic mirror ascent on a canonical instance, from `start` (default: uniform on the support).
pub fn mirror_ascent<T: Real>(
    inst: &MaximinInstance<T>,
    cfg: &AscentConfig<T>,
    start: Option<&WeightMatrix<T>>,
) -> Result<AscentResult<T>> {
    let (a, b) = (inst.a, inst.b);
    if cfg.iterations == 0 {
        return Err(Error::invalid("mirror ascent needs at least one iteration"));
    }
    let lipschitz = cfg.lipschitz.unwrap_or_else(|| default_lipschitz(inst));
    if !(lipschitz > T::zero()) {
        return Err(Error::invalid(format!(
            "Lipschitz constant {lipschitz} must be positive"
        )));
    }
    let eta = rate_envelope(T::one(), a, b, cfg.iterations) / lipschitz;

    let mut w = match start {
        Some(s) => s.clone(),
        None => WeightMatrix::uniform_support(a, b),
    };
    let support: Vec<(usize, usize)> = (0..b)
        .map(|j| (0, j))
        .chain((1..a).map(|i| (i, 0)))
        .collect();
    let mut acc = WeightMatrix::zeros(a, b);
    let zf = T::from_usize_lossy(cfg.iterations);

    for z in 0..cfg.iterations {
        if cfg.averaging {
            for &(i, j) in &support {
                acc.set(i, j, acc.get(i, j) + w.get(i, j) / zf);
            }
        }
        let (value, (bi, bj)) = objective_f(inst, &w);
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: z });
        }
        let (x, y) = (inst.get(0, bj), inst.get(bi, 0));
        let (_, lambda) = pair_term(x, w.get(0, bj), y, w.get(bi, 0));
        // Only the two binding coordinates move before renormalization.
        w.set(0, bj, w.get(0, bj) * (eta * kl_gaussian(x, lambda)).exp());
        w.set(bi, 0, w.get(bi, 0) * (eta * kl_gaussian(y, lambda)).exp());
        let total: T = support.iter().map(|&(i, j)| w.get(i, j)).sum();
        for &(i, j) in &support {
            w.set(i, j, w.get(i, j) / total);
        }
    }

    let omega = if cfg.averaging { acc } else { w };
    let (value, _) = objective_f(inst, &omega);
    if !value.is_finite() {
        return Err(Error::NonFiniteObjective {
            iteration: cfg.iterations,
        });
    }
    let t_star = if value > T::zero() {
        T::one() / value
    } else {
        T::infinity()
    };
    Ok(AscentResult {
        omega,
        value,
        t_star,
        lipschitz,
    })
}

/// Canonicalizes, runs mirror ascent, and maps `omega*` back to the input labels.
pub fn t_star<T: Real>(
    inst: &MaximinInstance<T>,
    cfg: &AscentConfig<T>,
) -> Result<AscentResult<T>> {
    let canon = canonicalize(inst);
    let mut res = mirror_ascent(&canon.instance, cfg, None)?;
    res.omega = canon.to_original(&res.omega);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_box() -> MaximinInstance<f64> {
        MaximinInstance::from_rows(&[
            vec![0.45, 0.5, 0.55],
            vec![0.35, 0.4, 0.6],
            vec![0.3, 0.47, 0.52],
        ])
        .unwrap()
    }

    #[test]
    fn canonical_forms() {
        let c = canonicalize(&two_box());
        assert!(c.is_identity());
        let shuffled = MaximinInstance::from_rows(&[
            vec![0.6, 0.35, 0.4],
            vec![0.52, 0.3, 0.47],
            vec![0.5, 0.55, 0.45],
        ])
        .unwrap();
        let cs = canonicalize(&shuffled);
        assert_eq!(cs.instance, two_box());
        assert_eq!(cs.rows, vec![2, 0, 1]);
        assert_eq!(shuffled.maximin_box(), 2);
    }

    #[test]
    fn objective_examples() {
        let inst = MaximinInstance::new(2, 1, vec![0.6f64, 0.4]).unwrap();
        let w = WeightMatrix::from_vec(2, 1, vec![0.5, 0.5]).unwrap();
        let (f, pair) = objective_f(&inst, &w);
        assert!((f - 0.005).abs() < 1e-15);
        assert_eq!(pair, (1, 0));

        let tie = MaximinInstance::new(2, 2, vec![0.4, 0.6, 0.4, 0.9]).unwrap();
        let (f, _) = objective_f(&tie, &WeightMatrix::uniform_support(2, 2));
        assert_eq!(f, 0.0);
        let g = supergradient(&tie, &WeightMatrix::uniform_support(2, 2));
        assert!(g.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn supergradient_touches_two_entries_and_bounds_f() {
        let inst = two_box();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let w = random_feasible(&mut rng, 3, 3);
            let g = supergradient(&inst, &w);
            assert!(g.as_slice().iter().filter(|&&x| x != 0.0).count() <= 2);
            let dir = random_feasible(&mut rng, 3, 3);
            let h = 1e-5;
            let moved: Vec<f64> = w
                .as_slice()
                .iter()
                .zip(dir.as_slice())
                .map(|(&x, &d)| x + h * (d - x))
                .collect();
            let moved = WeightMatrix::from_vec(3, 3, moved).unwrap();
            let lhs = objective_f(&inst, &moved).0 - objective_f(&inst, &w).0;
            let rhs: f64 = g
                .as_slice()
                .iter()
                .zip(moved.as_slice().iter().zip(w.as_slice()))
                .map(|(&gi, (&m, &x))| gi * (m - x))
                .sum();
            assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        }
    }

    pub(crate) fn random_feasible(rng: &mut ChaCha8Rng, a: usize, b: usize) -> WeightMatrix<f64> {
        let mut w = WeightMatrix::zeros(a, b);
        for j in 0..b {
            w.set(0, j, rng.random::<f64>());
        }
        for i in 1..a {
            w.set(i, 0, rng.random::<f64>());
        }
        let s = w.sum();
        let v: Vec<f64> = w.as_slice().iter().map(|x| x / s).collect();
        WeightMatrix::from_vec(a, b, v).unwrap()
    }

    #[test]
    fn concave_on_support() {
        let inst = two_box();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let (x, y) = (
                random_feasible(&mut rng, 3, 3),
                random_feasible(&mut rng, 3, 3),
            );
            let t: f64 = rng.random();
            let mix: Vec<f64> = x
                .as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(&p, &q)| t * p + (1.0 - t) * q)
                .collect();
            let mix = WeightMatrix::from_vec(3, 3, mix).unwrap();
            let lhs = objective_f(&inst, &mix).0;
            let rhs = t * objective_f(&inst, &x).0 + (1.0 - t) * objective_f(&inst, &y).0;
            assert!(lhs >= rhs - 1e-9);
        }
    }

    #[test]
    fn symmetric_two_box_instance_splits_evenly() {
        let inst = MaximinInstance::new(2, 1, vec![0.7f64, 0.3]).unwrap();
        let res = mirror_ascent(&inst, &AscentConfig::with_iterations(2000), None).unwrap();
        assert!((res.omega.get(0, 0) - 0.5).abs() < 1e-9);
        // f(1/2, 1/2) = (0.4)^2 / 8, so T* = 50.
        assert!((res.t_star - 50.0).abs() < 1e-6);
    }

    #[test]
    fn iterates_stay_on_the_restricted_simplex() {
        let inst = two_box();
        for z in [1, 10, 1000] {
            for averaging in [true, false] {
                let cfg = AscentConfig {
                    iterations: z,
                    lipschitz: None,
                    averaging,
                };
                let res = mirror_ascent(&inst, &cfg, None).unwrap();
                assert!(res.omega.on_canonical_support());
                assert!((res.omega.sum() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gap_scaling_law() {
        // Scaling every gap by c scales T* by 1/c^2.
        let base = two_box();
        let center = 0.45;
        let scaled: Vec<f64> = base
            .means()
            .iter()
            .map(|&x| center + 2.0 * (x - center))
            .collect();
        let scaled = MaximinInstance::new(3, 3, scaled).unwrap();
        let cfg = AscentConfig::with_iterations(50_000);
        let t1 = t_star(&base, &cfg).unwrap().t_star;
        let t2 = t_star(&scaled, &cfg).unwrap().t_star;
        assert!((t1 / t2 / 4.0 - 1.0).abs() < 0.05, "{t1} {t2}");
    }

    #[test]
    fn easy_instances_have_smaller_t_star() {
        let cfg = AscentConfig::with_iterations(20_000);
        let hard = MaximinInstance::from_rows(&[vec![0.5, 0.6], vec![0.45, 0.9]]).unwrap();
        let easy = MaximinInstance::from_rows(&[vec![0.9, 0.95], vec![0.1, 0.9]]).unwrap();
        assert!(t_star(&easy, &cfg).unwrap().t_star < t_star(&hard, &cfg).unwrap().t_star);
    }

    #[test]
    fn output_is_permutation_invariant() {
        let cfg = AscentConfig::with_iterations(5_000);
        let a = t_star(&two_box(), &cfg).unwrap();
        let shuffled = MaximinInstance::from_rows(&[
            vec![0.6, 0.35, 0.4],
            vec![0.52, 0.3, 0.47],
            vec![0.5, 0.55, 0.45],
        ])
        .unwrap();
        let b = t_star(&shuffled, &cfg).unwrap();
        assert_eq!(a.t_star, b.t_star);
        assert_eq!(a.omega.get(0, 0), b.omega.get(2, 2));
        assert_eq!(a.omega.get(1, 0), b.omega.get(0, 1));
    }

    #[test]
    fn rescaling_divides_means_by_sigma() {
        let inst = MaximinInstance::new(2, 1, vec![0.6f64, 0.2]).unwrap();
        let r = inst.rescaled(0.04).unwrap();
        assert!((r.get(0, 0) - 3.0).abs() < 1e-12);
        assert!(inst.rescaled(0.0).is_err());
    }
}
