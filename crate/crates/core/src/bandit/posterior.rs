use rand::Rng;

use crate::scalar::Real;

/// Conjugate `Beta(S, F)` posterior over a Bernoulli mean, starting at `Beta(1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPosterior<T> {
    pub s: T,
    pub f: T,
}

impl<T: Real> Default for BetaPosterior<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> BetaPosterior<T> {
    pub fn new() -> Self {
        Self {
            s: T::one(),
            f: T::one(),
        }
    }

    pub fn update(&mut self, reward: bool) {
        if reward {
            self.s = self.s + T::one();
        } else {
            self.f = self.f + T::one();
        }
    }

    pub fn mean(&self) -> T {
        self.s / (self.s + self.f)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        T::sample_beta(self.s, self.f, rng)
    }
}

/// Gaussian belief `N(mu, sigma2)` over an arm mean, starting at `N(0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPosterior<T> {
    pub mu: T,
    pub sigma2: T,
}

impl<T: Real> Default for GaussianPosterior<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> GaussianPosterior<T> {
    pub fn new() -> Self {
        Self {
            mu: T::zero(),
            sigma2: T::lit(0.5),
        }
    }

    /// Folds in the running estimate `dhat_next` after pull number `t + 1`:
    /// precision `a = 1/sigma2`, `b = (t + 1)/sigma2_noise`.
    /// Noise-free rewards (`sigma2_noise = 0`) collapse the belief onto `dhat_next`.
    pub fn update(&mut self, dhat_next: T, t: u64, sigma2_noise: T) {
        if sigma2_noise == T::zero() {
            self.mu = dhat_next;
            self.sigma2 = T::zero();
            return;
        }
        let a = T::one() / self.sigma2;
        let b = T::from_u64_lossy(t + 1) / sigma2_noise;
        self.mu = (a * self.mu + b * dhat_next) / (a + b);
        self.sigma2 = T::one() / (a + b);
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        if self.sigma2 == T::zero() {
            return self.mu;
        }
        self.mu + self.sigma2.sqrt() * T::sample_standard_normal(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Posterior<T> {
    Beta(BetaPosterior<T>),
    Gaussian(GaussianPosterior<T>),
}

impl<T: Real> Posterior<T> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            Posterior::Beta(p) => p.sample(rng),
            Posterior::Gaussian(p) => p.sample(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn beta_examples() {
        let mut p = BetaPosterior::<f64>::new();
        p.update(true);
        assert_eq!((p.s, p.f), (2.0, 1.0));
        let mut q = BetaPosterior::<f64>::new();
        q.update(false);
        assert_eq!((q.s, q.f), (1.0, 2.0));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut r = BetaPosterior::<f64>::new();
        for _ in 0..1000 {
            r.update(rng.random::<f64>() < 0.3);
        }
        assert!((r.mean() - 0.3).abs() < 0.05);
        assert_eq!(r.s + r.f, 1002.0);
    }

    #[test]
    fn gaussian_examples() {
        let mut p = GaussianPosterior::<f64>::new();
        p.update(0.6, 0, 1.0);
        assert!((p.mu - 0.2).abs() < 1e-15);
        assert!((p.sigma2 - 1.0 / 3.0).abs() < 1e-15);

        let mut q = GaussianPosterior::<f64>::new();
        let mut prev = q.sigma2;
        for t in 0..1000 {
            q.update(0.37, t, 0.01);
            assert!(q.sigma2 < prev);
            prev = q.sigma2;
        }
        assert!((q.mu - 0.37).abs() < 1e-3);
    }

    #[test]
    fn zero_noise_collapses() {
        let mut p = GaussianPosterior::<f64>::new();
        p.update(0.4, 0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(p.sample(&mut rng), 0.4);
    }
}
