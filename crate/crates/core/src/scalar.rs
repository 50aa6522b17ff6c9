//! The scalar abstraction every numeric routine in the crate is written against.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

/// A real floating-point scalar (`f32` or `f64`).
///
/// Besides the arithmetic from [`Float`], the trait carries the handful of
/// random draws the samplers need, so generic code never has to spell out
/// `rand_distr` bounds.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot represent at all.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    fn from_u64_lossy(n: u64) -> Self {
        Self::from_u64(n).unwrap_or_else(Self::infinity)
    }

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws from `Beta(alpha, beta)`; both shape parameters must be positive.
    fn sample_beta<R: Rng + ?Sized>(alpha: Self, beta: Self, rng: &mut R) -> Self;

    /// Uniform draw in `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn sample_beta<R: Rng + ?Sized>(alpha: Self, beta: Self, rng: &mut R) -> Self {
                Beta::new(alpha, beta)
                    .expect("beta shape parameters are positive")
                    .sample(rng)
            }

            fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Compensated (Kahan–Babuška) running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> KahanSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation + ((self.sum - t) + x);
        } else {
            self.compensation = self.compensation + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kahan_beats_naive_on_long_sequences() {
        let mut k = KahanSum::<f64>::new();
        let mut naive = 0.0f64;
        for _ in 0..1_000_000 {
            k.add(0.1);
            naive += 0.1;
        }
        assert!((k.value() - 100_000.0).abs() < 1e-9);
        assert!((naive - 100_000.0).abs() > (k.value() - 100_000.0).abs());
    }

    #[test]
    fn samplers_work_for_both_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: f32 = Real::sample_beta(2.0, 3.0, &mut rng);
        assert!((0.0..=1.0).contains(&x));
        let y: f64 = Real::sample_standard_normal(&mut rng);
        assert!(y.is_finite());
        let u: f64 = Real::sample_unit(&mut rng);
        assert!((0.0..1.0).contains(&u));
    }
}
